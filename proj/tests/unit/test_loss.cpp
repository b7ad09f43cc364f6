#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ddavs/error.hpp"
#include "ddavs/loss/losses.hpp"
#include "ddavs/loss/metrics.hpp"
#include "ddavs/nd/gradcheck.hpp"
#include "ddavs/nd/ops.hpp"
#include "ddavs/random.hpp"

using namespace ddavs;
using namespace ddavs::loss;

namespace {

constexpr double e = 1e-6;

nd::Array probs(std::uint64_t seed, std::size_t n = 8, double lo = 0.0, double hi = 1.0) {
  Rng rng(seed);
  nd::Array a({n, n});
  for (double& v : a.values()) v = rng.uniform(lo, hi);
  return a;
}

nd::Array mask(std::uint64_t seed, std::size_t n = 8) {
  Rng rng(seed);
  nd::Array a({n, n});
  for (double& v : a.values()) v = rng.uniform() < 0.4 ? 1.0 : 0.0;
  return a;
}

double value(nd::Var (*f)(nd::Var, const nd::Array&), const nd::Array& p, const nd::Array& y) {
  nd::Tape t;
  return f(t.constant(p), y).item();
}

// Scalar-loop references written directly from the formulas.
double ref_ce(const nd::Array& p, const nd::Array& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += y[i] * std::log(p[i] + e) + (1 - y[i]) * std::log(1 - p[i] + e);
  return -s / static_cast<double>(p.size());
}

double ref_focal(const nd::Array& p, const nd::Array& y, double g, double a) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    s += a * y[i] * std::pow(1 - p[i], g) * std::log(p[i] + e) +
         (1 - a) * (1 - y[i]) * std::pow(p[i], g) * std::log(1 - p[i] + e);
  }
  return -s / static_cast<double>(p.size());
}

double ref_dice(const nd::Array& p, const nd::Array& y) {
  double i_ = 0, sp = 0, sy = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    i_ += p[i] * y[i];
    sp += p[i];
    sy += y[i];
  }
  return 1 - (2 * i_ + e) / (sp + sy + e);
}

double ref_iou(const nd::Array& p, const nd::Array& y) {
  double i_ = 0, sp = 0, sy = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    i_ += p[i] * y[i];
    sp += p[i];
    sy += y[i];
  }
  return 1 - (i_ + e) / (sp + sy - i_ + e);
}

nd::Var focal_default(nd::Var p, const nd::Array& y) { return focal_loss(p, y, 2.0, 0.25); }
nd::Var dice_default(nd::Var p, const nd::Array& y) { return dice_loss(p, y); }
nd::Var iou_default(nd::Var p, const nd::Array& y) { return iou_loss(p, y); }

}  // namespace

TEST(Losses, MatchScalarLoopsOnRandomPairs) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto p = probs(s);
    const auto y = mask(1000 + s);
    EXPECT_NEAR(value(ce_loss, p, y), ref_ce(p, y), 1e-12);
    EXPECT_NEAR(value(focal_default, p, y), ref_focal(p, y, 2.0, 0.25), 1e-12);
    EXPECT_NEAR(value(dice_default, p, y), ref_dice(p, y), 1e-12);
    EXPECT_NEAR(value(iou_default, p, y), ref_iou(p, y), 1e-12);
  }
}

TEST(Losses, PerfectPredictionIsNearZero) {
  const auto y = mask(1);
  EXPECT_LT(value(ce_loss, y, y), 1e-5);
  EXPECT_LT(value(focal_default, y, y), 1e-5);
  EXPECT_NEAR(value(dice_default, y, y), 0.0, 1e-9);
  EXPECT_NEAR(value(iou_default, y, y), 0.0, 1e-9);
}

TEST(Losses, HalfProbabilityCeIsLn2) {
  EXPECT_NEAR(value(ce_loss, nd::Array({8, 8}, 0.5), mask(2)), std::log(2.0), 2e-6);
}

TEST(Losses, FocalGammaZeroHalvesCe) {
  const auto p = probs(3);
  const auto y = mask(4);
  nd::Tape t;
  EXPECT_NEAR(focal_loss(t.constant(p), y, 0.0, 0.5).item(), 0.5 * value(ce_loss, p, y), 1e-12);
}

TEST(Losses, FocalRejectsBadParameters) {
  nd::Tape t;
  EXPECT_THROW(focal_loss(t.constant(probs(5)), mask(6), -1.0, 0.25), ParameterError);
  EXPECT_THROW(focal_loss(t.constant(probs(5)), mask(6), 2.0, 1.5), ParameterError);
}

TEST(Losses, EmptyPredictionOnFullMask) {
  const nd::Array p({8, 8}, 0.0), y({8, 8}, 1.0);
  EXPECT_NEAR(value(dice_default, p, y), 1.0 - e / (64.0 + e), 1e-15);
  EXPECT_NEAR(value(iou_default, nd::Array({8, 8}), y), 1.0 - e / (64.0 + e), 1e-15);
}

TEST(Losses, HalfCoverageCounts) {
  nd::Array y({8, 8}), p({8, 8});
  for (std::size_t i = 0; i < 32; ++i) y[i] = 1.0;
  for (std::size_t i = 0; i < 16; ++i) p[i] = 1.0;
  EXPECT_NEAR(value(dice_default, p, y), 1.0 / 3.0, 1e-7);
  EXPECT_NEAR(value(iou_default, p, y), 0.5, 1e-7);
}

TEST(Losses, DiceIouIdentityOnBinaryPairs) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto p = mask(2000 + s);
    const auto y = mask(3000 + s);
    nd::Tape t;
    const double i = 1.0 - iou_loss(t.constant(p), y, 0.0).item();
    const double d = 1.0 - dice_loss(t.constant(p), y, 0.0).item();
    EXPECT_NEAR(d, 2.0 * i / (1.0 + i), 1e-9);
    // Smoothing only perturbs the identity at the scale of eps.
    const double ie = 1.0 - value(iou_default, p, y);
    const double de = 1.0 - value(dice_default, p, y);
    EXPECT_NEAR(de, 2.0 * ie / (1.0 + ie), 1e-7);
  }
}

TEST(Losses, ShapeMismatchRejected) {
  nd::Tape t;
  EXPECT_THROW(dice_loss(t.constant(nd::Array({4, 4})), nd::Array({8, 8})), DimensionError);
}

TEST(Losses, GradCheckAtInteriorPoints) {
  const auto y = mask(7);
  for (auto f : {ce_loss, dice_default, iou_default, focal_default}) {
    const double err = nd::grad_check(
        [&](nd::Tape&, std::span<const nd::Var> in) { return f(in[0], y); }, {probs(8, 8, 0.01, 0.99)});
    EXPECT_LT(err, 1e-6);
  }
}

TEST(Losses, NonNegative) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto p = probs(50 + s);
    const auto y = mask(60 + s);
    for (auto f : {ce_loss, dice_default, iou_default, focal_default}) EXPECT_GE(value(f, p, y), 0.0);
  }
}

TEST(TotalLoss, SingleWeightEqualsTerm) {
  const auto p = probs(9);
  const auto y = mask(10);
  LossWeights w{1, 0, 0, 0, 0};
  nd::Tape t;
  EXPECT_DOUBLE_EQ(total_loss(t.constant(p), y, {}, w).total.item(), value(ce_loss, p, y));
}

TEST(TotalLoss, DefaultsMatchHandSum) {
  const auto p = probs(11);
  const auto y = mask(12);
  LossWeights w;
  nd::Tape t;
  nd::Var con = t.constant(nd::Array::scalar(0.8));
  const auto terms = total_loss(t.constant(p), y, con, w);
  const double hand = ref_ce(p, y) + ref_dice(p, y) + ref_iou(p, y) + 0.1 * 0.8;
  EXPECT_NEAR(terms.total.item(), hand, 1e-12);
  EXPECT_DOUBLE_EQ(terms.con, 0.8);
}

TEST(TotalLoss, DoublingWeightsDoublesTotal) {
  const auto p = probs(13);
  const auto y = mask(14);
  LossWeights w;
  w.focal = 0.5;
  LossWeights w2 = w;
  w2.ce *= 2;
  w2.focal *= 2;
  w2.dice *= 2;
  w2.iou *= 2;
  w2.con *= 2;
  nd::Tape t;
  nd::Var con = t.constant(nd::Array::scalar(0.3));
  EXPECT_NEAR(total_loss(t.constant(p), y, con, w2).total.item(),
              2.0 * total_loss(t.constant(p), y, con, w).total.item(), 1e-12);
}

TEST(TotalLoss, WeightValidation) {
  LossWeights w;
  w.dice = -1;
  EXPECT_THROW(w.validate(), ParameterError);
  LossWeights none{0, 0, 0, 0, 1};
  EXPECT_THROW(none.validate(), ParameterError);
}

TEST(Metrics, PerfectPrediction) {
  const auto y = mask(15);
  EXPECT_DOUBLE_EQ(jaccard(y, y), 1.0);
  EXPECT_DOUBLE_EQ(f_score(y, y), 1.0);
  EXPECT_DOUBLE_EQ(jf(y, y), 1.0);
}

TEST(Metrics, EmptyMaskConventions) {
  const nd::Array z({4, 4});
  nd::Array one({4, 4});
  one[3] = 1.0;
  EXPECT_DOUBLE_EQ(jaccard(z, z), 1.0);
  EXPECT_DOUBLE_EQ(f_score(z, z), 1.0);
  EXPECT_DOUBLE_EQ(f_score(one, z), 0.0);
  EXPECT_DOUBLE_EQ(f_score(z, one), 0.0);
  EXPECT_DOUBLE_EQ(jaccard(one, z), 0.0);
}

TEST(Metrics, HalfRecallNoFalsePositives) {
  nd::Array y({8, 8}), p({8, 8});
  for (std::size_t i = 0; i < 20; ++i) y[i] = 1.0;
  for (std::size_t i = 0; i < 10; ++i) p[i] = 1.0;
  EXPECT_NEAR(f_score(p, y), 0.8125, 1e-12);
  EXPECT_NEAR(jaccard(p, y), 0.5, 1e-12);
}

TEST(Metrics, EqualPrecisionAndRecallGivesThatValue) {
  // tp = 6, fp = 2, fn = 2: P = R = 0.75.
  nd::Array y({4, 4}), p({4, 4});
  for (std::size_t i = 0; i < 8; ++i) y[i] = 1.0;
  for (std::size_t i = 2; i < 10; ++i) p[i] = 1.0;
  EXPECT_NEAR(f_score(p, y), 0.75, 1e-12);
}

TEST(Metrics, PermutationAndTransposeInvariant) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto p = mask(70 + s), y = mask(80 + s);
    nd::Array pt({8, 8}), yt({8, 8}), pr({8, 8}), yr({8, 8});
    for (std::size_t r = 0; r < 8; ++r)
      for (std::size_t c = 0; c < 8; ++c) {
        pt(c, r) = p(r, c);
        yt(c, r) = y(r, c);
      }
    for (std::size_t i = 0; i < 64; ++i) {
      pr[63 - i] = p[i];
      yr[63 - i] = y[i];
    }
    EXPECT_DOUBLE_EQ(jf(p, y), jf(pt, yt));
    EXPECT_DOUBLE_EQ(jf(p, y), jf(pr, yr));
  }
}

TEST(Metrics, BinarizeThreshold) {
  const auto b = binarize(nd::Array({1, 3}, {0.2, 0.5, 0.51}));
  EXPECT_EQ(b, nd::Array({1, 3}, {0.0, 0.0, 1.0}));
}

TEST(Metrics, ShapeMismatchRejected) {
  EXPECT_THROW(jaccard(nd::Array({2, 2}), nd::Array({3, 3})), DimensionError);
}

TEST(Metrics, AccumulatorAveragesFramesOrPoolsCounts) {
  nd::Array y1({2, 2}, {1, 1, 0, 0}), p1({2, 2}, {1, 0, 0, 0});
  nd::Array y2({2, 2}, {1, 0, 0, 0}), p2({2, 2}, {1, 0, 0, 0});
  MetricAccumulator avg, pooled(true);
  for (auto* a : {&avg, &pooled}) {
    a->add(p1, y1);
    a->add(p2, y2);
  }
  EXPECT_EQ(avg.count(), 2u);
  EXPECT_NEAR(avg.j(), 0.75, 1e-12);
  EXPECT_NEAR(pooled.j(), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(avg.jf(), 0.5 * (avg.j() + avg.f()), 1e-15);
}
