#include "ddavs/model/com.hpp"

#include <cmath>
#include <string>

#include "ddavs/error.hpp"
#include "ddavs/instrument.hpp"
#include "ddavs/model/layers.hpp"
#include "ddavs/nd/ops.hpp"

namespace ddavs::model {

void ComConfig::validate() const {
  if (d_proj < 2) throw ParameterError("projection width must be at least 2");
  if (!(tau > 0.0)) throw ParameterError("temperature must be positive, got " + std::to_string(tau));
}

void add_com_params(ParamStore& ps, std::size_t d, const ComConfig& cfg) {
  cfg.validate();
  add_linear(ps, "com.head.0", d, d);
  add_linear(ps, "com.head.1", d, cfg.d_proj);
}

QuerySet project_normalize(Ctx& c, const ComConfig& cfg, const QuerySet& q) {
  if (q.stage != QueryStage::Refined) {
    throw ParameterError("project_normalize expects refined queries");
  }
  ++counters().projection_calls;
  nd::Var h = linear(c, "com.head.0", q.vectors);
  if (!cfg.linear_head) h = nd::gelu(h);
  return {nd::normalize_rows(linear(c, "com.head.1", h)), QueryStage::Projected};
}

namespace {

nd::Var anchored(nd::Var anchor, nd::Var other, double tau) {
  const std::size_t n = anchor.rows();
  nd::Var logp = nd::log_softmax_rows(nd::scale(nd::matmul_nt(anchor, other), 1.0 / tau));
  nd::Var diag = nd::sum(nd::mul(logp, anchor.tape().constant(nd::Array::identity(n))));
  return nd::scale(diag, -1.0 / static_cast<double>(n));
}

}  // namespace

nd::Var info_nce(nd::Var z_clean, nd::Var z_aug, double tau, bool symmetric) {
  if (!(tau > 0.0)) throw ParameterError("temperature must be positive, got " + std::to_string(tau));
  if (z_clean.shape() != z_aug.shape() || z_clean.value().shape().size() != 2) {
    throw DimensionError("info_nce: " + nd::shape_str(z_clean.shape()) + " vs " +
                         nd::shape_str(z_aug.shape()));
  }
  ++counters().contrastive_calls;
  nd::Var l = anchored(z_clean, z_aug, tau);
  if (symmetric) l = nd::scale(nd::add(l, anchored(z_aug, z_clean, tau)), 0.5);
  return l;
}

}  // namespace ddavs::model
