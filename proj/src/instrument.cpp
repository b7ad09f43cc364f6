#include "ddavs/instrument.hpp"

namespace ddavs {

Counters& counters() {
  static Counters c;
  return c;
}

}  // namespace ddavs
