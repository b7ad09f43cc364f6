#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "ddavs/nd/tape.hpp"

namespace ddavs::model {

enum class Init { Zeros, Ones, Normal, Xavier };

/// Trainable tensors keyed by module path. Each tensor's initial values
/// depend only on the store seed and its own name.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0) : seed_(seed) {}

  /// `scale` is the standard deviation for Init::Normal.
  nd::Parameter& add(const std::string& name, nd::Shape shape, Init init, double scale = 0.02);
  nd::Parameter& at(const std::string& name);
  const nd::Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  std::map<std::string, nd::Parameter>& all() noexcept { return params_; }
  const std::map<std::string, nd::Parameter>& all() const noexcept { return params_; }
  std::size_t scalar_count() const;
  void zero_grad();
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::map<std::string, nd::Parameter> params_;
};

/// A tape plus the parameters forward passes draw from.
struct Ctx {
  nd::Tape& tape;
  ParamStore& params;

  nd::Var operator()(const std::string& name) { return tape.parameter(params.at(name)); }
};

}  // namespace ddavs::model
