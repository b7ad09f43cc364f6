#pragma once

#include <vector>

#include "ddavs/nd/array.hpp"

namespace ddavs::loss {

inline constexpr double kBeta2 = 0.3;

/// Probabilities above 0.5 become 1.
nd::Array binarize(const nd::Array& probs, double threshold = 0.5);

/// |pred and gt| / |pred or gt|; 1 when both masks are empty.
double jaccard(const nd::Array& pred, const nd::Array& gt);
/// (1 + b2) P R / (b2 P + R); 1 when both are empty, 0 when exactly one is.
double f_score(const nd::Array& pred, const nd::Array& gt, double beta2 = kBeta2);
double jf(const nd::Array& pred, const nd::Array& gt);

/// Running J and F over frames. Per-frame scores are averaged by default;
/// `pooled` instead accumulates pixel counts across frames.
class MetricAccumulator {
 public:
  explicit MetricAccumulator(bool pooled = false) : pooled_(pooled) {}

  void add(const nd::Array& pred, const nd::Array& gt);
  std::size_t count() const noexcept { return frames_; }
  double j() const;
  double f() const;
  double jf() const { return 0.5 * (j() + f()); }

 private:
  bool pooled_;
  std::size_t frames_ = 0;
  double j_sum_ = 0.0, f_sum_ = 0.0;
  double tp_ = 0.0, fp_ = 0.0, fn_ = 0.0;
};

}  // namespace ddavs::loss
