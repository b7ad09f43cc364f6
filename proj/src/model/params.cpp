#include "ddavs/model/params.hpp"

#include <cmath>

#include "ddavs/error.hpp"
#include "ddavs/random.hpp"

namespace ddavs::model {

nd::Parameter& ParamStore::add(const std::string& name, nd::Shape shape, Init init, double scale) {
  if (contains(name)) throw ParameterError("parameter '" + name + "' defined twice");
  nd::Array value(shape);
  Rng rng(derive_seed(seed_, hash_name(name)));
  switch (init) {
    case Init::Zeros:
      break;
    case Init::Ones:
      value.fill(1.0);
      break;
    case Init::Normal:
      for (double& v : value.values()) v = rng.normal(0.0, scale);
      break;
    case Init::Xavier: {
      const double fan_in = static_cast<double>(value.rows());
      const double fan_out = static_cast<double>(value.cols());
      const double bound = std::sqrt(6.0 / (fan_in + fan_out));
      for (double& v : value.values()) v = rng.uniform(-bound, bound);
      break;
    }
  }
  nd::Parameter p{name, std::move(value), nd::Array(shape)};
  return params_.emplace(name, std::move(p)).first->second;
}

nd::Parameter& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ParameterError("no parameter named '" + name + "'");
  return it->second;
}

const nd::Parameter& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ParameterError("no parameter named '" + name + "'");
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += p.value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, p] : params_) p.zero_grad();
}

}  // namespace ddavs::model
