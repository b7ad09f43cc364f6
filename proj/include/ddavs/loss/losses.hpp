#pragma once

#include "ddavs/nd/tape.hpp"

namespace ddavs::loss {

inline constexpr double kEps = 1e-6;

struct LossWeights {
  double ce = 1.0;
  double focal = 0.0;
  double dice = 1.0;
  double iou = 1.0;
  double con = 0.1;
  double focal_gamma = 2.0;
  double focal_alpha = 0.25;

  /// Throws ParameterError on a negative weight or when every
  /// segmentation weight is zero.
  void validate() const;
};

// Each loss takes per-pixel probabilities `p` and a same-sized {0,1} mask.

nd::Var ce_loss(nd::Var p, const nd::Array& gt);
nd::Var focal_loss(nd::Var p, const nd::Array& gt, double gamma, double alpha);
/// `eps` smooths numerator and denominator; 0 gives the exact ratio.
nd::Var dice_loss(nd::Var p, const nd::Array& gt, double eps = kEps);
nd::Var iou_loss(nd::Var p, const nd::Array& gt, double eps = kEps);

struct LossTerms {
  nd::Var total;
  double ce = 0.0, focal = 0.0, dice = 0.0, iou = 0.0, con = 0.0;
};

/// Weighted sum of the segmentation terms and `l_con`; terms with zero
/// weight are not built. `l_con` may be invalid when its weight is zero.
LossTerms total_loss(nd::Var p, const nd::Array& gt, nd::Var l_con, const LossWeights& w);

}  // namespace ddavs::loss
