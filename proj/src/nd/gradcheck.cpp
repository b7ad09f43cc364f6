#include "ddavs/nd/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "ddavs/error.hpp"

namespace ddavs::nd {

namespace {

double checked(double v, const char* where) {
  if (!std::isfinite(v)) {
    throw EvaluationError(std::string("non-finite objective at ") + where + " probe");
  }
  return v;
}

}  // namespace

double central_difference_error(const std::function<double()>& objective,
                                std::span<const Probe> probes, double step) {
  if (!(step >= 1e-7 && step <= 1e-3)) {
    throw ParameterError("finite-difference step must lie in [1e-7, 1e-3], got " +
                         std::to_string(step));
  }
  double worst = 0.0;
  for (const Probe& p : probes) {
    const double saved = *p.slot;
    *p.slot = saved + step;
    const double up = checked(objective(), "forward");
    *p.slot = saved - step;
    const double down = checked(objective(), "backward");
    *p.slot = saved;
    const double numeric = (up - down) / (2.0 * step);
    worst = std::max(worst, std::abs(p.analytic - numeric) / std::max(1.0, std::abs(numeric)));
  }
  return worst;
}

std::vector<std::size_t> sample_coordinates(std::size_t n, std::size_t count,
                                            std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (count == 0 || count >= n) return idx;
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double grad_check(const ScalarFn& f, std::vector<Array> inputs, double step,
                  GradCheckOptions options) {
  std::vector<Array> grads;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Array& in : inputs) vars.push_back(tape.variable(in));
    Var out = f(tape, vars);
    checked(out.item(), "unperturbed");
    tape.backward(out);
    for (const Var& v : vars) grads.push_back(v.has_grad() ? v.grad() : Array(v.shape()));
  }

  auto objective = [&]() {
    Tape tape;
    std::vector<Var> vars;
    for (const Array& in : inputs) vars.push_back(tape.constant(in));
    return f(tape, vars).item();
  };

  std::vector<Probe> probes;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t c : sample_coordinates(inputs[i].size(), options.max_coords_per_input,
                                            options.seed + i)) {
      probes.push_back(Probe{&inputs[i][c], grads[i][c]});
    }
  }
  return central_difference_error(objective, probes, step);
}

}  // namespace ddavs::nd
