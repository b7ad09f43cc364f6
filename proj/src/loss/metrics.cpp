#include "ddavs/loss/metrics.hpp"

#include "ddavs/error.hpp"

namespace ddavs::loss {

namespace {

struct Counts {
  double tp = 0.0, fp = 0.0, fn = 0.0;
};

Counts tally(const nd::Array& pred, const nd::Array& gt) {
  if (pred.size() != gt.size()) {
    throw DimensionError("metric masks differ: " + nd::shape_str(pred.shape()) + " vs " +
                         nd::shape_str(gt.shape()));
  }
  Counts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] > 0.5, g = gt[i] > 0.5;
    c.tp += p && g;
    c.fp += p && !g;
    c.fn += !p && g;
  }
  return c;
}

double j_of(const Counts& c) {
  const double uni = c.tp + c.fp + c.fn;
  return uni == 0.0 ? 1.0 : c.tp / uni;
}

double f_of(const Counts& c, double beta2) {
  const double pred = c.tp + c.fp, gt = c.tp + c.fn;
  if (pred == 0.0 && gt == 0.0) return 1.0;
  if (pred == 0.0 || gt == 0.0 || c.tp == 0.0) return 0.0;
  const double precision = c.tp / pred, recall = c.tp / gt;
  return (1.0 + beta2) * precision * recall / (beta2 * precision + recall);
}

}  // namespace

nd::Array binarize(const nd::Array& probs, double threshold) {
  nd::Array out(probs.shape());
  for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] > threshold ? 1.0 : 0.0;
  return out;
}

double jaccard(const nd::Array& pred, const nd::Array& gt) { return j_of(tally(pred, gt)); }

double f_score(const nd::Array& pred, const nd::Array& gt, double beta2) {
  return f_of(tally(pred, gt), beta2);
}

double jf(const nd::Array& pred, const nd::Array& gt) {
  const Counts c = tally(pred, gt);
  return 0.5 * (j_of(c) + f_of(c, kBeta2));
}

void MetricAccumulator::add(const nd::Array& pred, const nd::Array& gt) {
  const Counts c = tally(pred, gt);
  ++frames_;
  j_sum_ += j_of(c);
  f_sum_ += f_of(c, kBeta2);
  tp_ += c.tp;
  fp_ += c.fp;
  fn_ += c.fn;
}

double MetricAccumulator::j() const {
  if (frames_ == 0) return 0.0;
  return pooled_ ? j_of({tp_, fp_, fn_}) : j_sum_ / static_cast<double>(frames_);
}

double MetricAccumulator::f() const {
  if (frames_ == 0) return 0.0;
  return pooled_ ? f_of({tp_, fp_, fn_}, kBeta2) : f_sum_ / static_cast<double>(frames_);
}

}  // namespace ddavs::loss
