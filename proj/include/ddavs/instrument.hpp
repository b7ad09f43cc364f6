#pragma once

#include <atomic>
#include <cstdint>

namespace ddavs {

/// Process-wide call counters for the training-only paths.
struct Counters {
  std::atomic<std::uint64_t> augment_calls{0};
  std::atomic<std::uint64_t> projection_calls{0};
  std::atomic<std::uint64_t> contrastive_calls{0};

  void reset() {
    augment_calls = 0;
    projection_calls = 0;
    contrastive_calls = 0;
  }
};

Counters& counters();

}  // namespace ddavs
