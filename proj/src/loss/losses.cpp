#include "ddavs/loss/losses.hpp"

#include <string>

#include "ddavs/error.hpp"
#include "ddavs/nd/ops.hpp"

namespace ddavs::loss {

namespace {

void check_pair(nd::Var p, const nd::Array& gt, const char* what) {
  if (p.value().size() != gt.size()) {
    throw DimensionError(std::string(what) + ": prediction " + nd::shape_str(p.shape()) +
                         " vs mask " + nd::shape_str(gt.shape()));
  }
}

nd::Var mask_like(nd::Var p, const nd::Array& gt) {
  return p.tape().constant(gt.reshaped(p.shape()));
}

nd::Var one_minus(nd::Var x) { return nd::add_scalar(nd::scale(x, -1.0), 1.0); }

}  // namespace

void LossWeights::validate() const {
  for (double w : {ce, focal, dice, iou, con}) {
    if (!(w >= 0.0)) throw ParameterError("loss weights must be non-negative");
  }
  if (ce + focal + dice + iou <= 0.0) throw ParameterError("at least one segmentation weight must be positive");
  if (!(focal_gamma >= 0.0)) throw ParameterError("focal gamma must be non-negative");
  if (!(focal_alpha >= 0.0 && focal_alpha <= 1.0)) throw ParameterError("focal alpha must lie in [0, 1]");
}

nd::Var ce_loss(nd::Var p, const nd::Array& gt) {
  check_pair(p, gt, "ce_loss");
  nd::Var y = mask_like(p, gt);
  nd::Var pos = nd::mul(y, nd::log(nd::add_scalar(p, kEps)));
  nd::Var neg = nd::mul(one_minus(y), nd::log(nd::add_scalar(one_minus(p), kEps)));
  return nd::scale(nd::mean(nd::add(pos, neg)), -1.0);
}

nd::Var focal_loss(nd::Var p, const nd::Array& gt, double gamma, double alpha) {
  check_pair(p, gt, "focal_loss");
  if (!(gamma >= 0.0)) throw ParameterError("focal gamma must be non-negative");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("focal alpha must lie in [0, 1]");
  nd::Var y = mask_like(p, gt);
  nd::Var q = one_minus(p);
  nd::Var pos = nd::mul(y, nd::log(nd::add_scalar(p, kEps)));
  nd::Var neg = nd::mul(one_minus(y), nd::log(nd::add_scalar(q, kEps)));
  if (gamma != 0.0) {
    pos = nd::mul(nd::pow_scalar(q, gamma), pos);
    neg = nd::mul(nd::pow_scalar(p, gamma), neg);
  }
  return nd::scale(nd::mean(nd::add(nd::scale(pos, alpha), nd::scale(neg, 1.0 - alpha))), -1.0);
}

nd::Var dice_loss(nd::Var p, const nd::Array& gt, double eps) {
  check_pair(p, gt, "dice_loss");
  nd::Var y = mask_like(p, gt);
  nd::Var num = nd::add_scalar(nd::scale(nd::sum(nd::mul(p, y)), 2.0), eps);
  nd::Var den = nd::add_scalar(nd::add(nd::sum(p), nd::sum(y)), eps);
  return one_minus(nd::mul(num, nd::pow_scalar(den, -1.0)));
}

nd::Var iou_loss(nd::Var p, const nd::Array& gt, double eps) {
  check_pair(p, gt, "iou_loss");
  nd::Var y = mask_like(p, gt);
  nd::Var inter = nd::sum(nd::mul(p, y));
  nd::Var num = nd::add_scalar(inter, eps);
  nd::Var den = nd::add_scalar(nd::sub(nd::add(nd::sum(p), nd::sum(y)), inter), eps);
  return one_minus(nd::mul(num, nd::pow_scalar(den, -1.0)));
}

LossTerms total_loss(nd::Var p, const nd::Array& gt, nd::Var l_con, const LossWeights& w) {
  w.validate();
  LossTerms t;
  nd::Var total;
  auto accumulate = [&](double weight, nd::Var term, double& slot) {
    slot = term.item();
    nd::Var scaled = nd::scale(term, weight);
    total = total.valid() ? nd::add(total, scaled) : scaled;
  };
  if (w.ce > 0.0) accumulate(w.ce, ce_loss(p, gt), t.ce);
  if (w.focal > 0.0) accumulate(w.focal, focal_loss(p, gt, w.focal_gamma, w.focal_alpha), t.focal);
  if (w.dice > 0.0) accumulate(w.dice, dice_loss(p, gt), t.dice);
  if (w.iou > 0.0) accumulate(w.iou, iou_loss(p, gt), t.iou);
  if (w.con > 0.0) {
    if (!l_con.valid()) throw ParameterError("contrastive weight set but no contrastive loss given");
    accumulate(w.con, l_con, t.con);
  }
  t.total = total;
  return t;
}

}  // namespace ddavs::loss
