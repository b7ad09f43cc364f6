#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ddavs/nd/tape.hpp"

namespace ddavs::nd {

/// Builds a scalar on `tape` from leaf variables holding the inputs.
using ScalarFn = std::function<Var(Tape& tape, std::span<const Var> inputs)>;

/// One coordinate to probe: a writable slot and the gradient the tape
/// computed for it.
struct Probe {
  double* slot;
  double analytic;
};

/// Max over probes of |analytic - central difference| / max(1, |central difference|).
/// `objective` must re-evaluate from the current slot values.
double central_difference_error(const std::function<double()>& objective,
                                std::span<const Probe> probes, double step);

struct GradCheckOptions {
  /// 0 probes every coordinate; otherwise a seeded subset of this size per input.
  std::size_t max_coords_per_input = 0;
  std::uint64_t seed = 0;
};

/// Compares reverse-mode gradients of `f` at `inputs` against central
/// differences. Throws EvaluationError when f is non-finite at any probe.
double grad_check(const ScalarFn& f, std::vector<Array> inputs, double step = 1e-5,
                  GradCheckOptions options = {});

/// Chooses up to `count` distinct coordinates of an array of length `n`.
std::vector<std::size_t> sample_coordinates(std::size_t n, std::size_t count,
                                            std::uint64_t seed);

}  // namespace ddavs::nd
