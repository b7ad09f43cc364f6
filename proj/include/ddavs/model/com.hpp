#pragma once

#include <cstddef>

#include "ddavs/model/aqm.hpp"

namespace ddavs::model {

struct ComConfig {
  std::size_t d_proj = 32;
  double tau = 0.07;
  /// Drop the GELU between the two head layers.
  bool linear_head = false;
  /// Average both anchoring directions instead of anchoring on clean only.
  bool symmetric = false;

  void validate() const;
};

/// Projection head "com.head.0" (d -> d) and "com.head.1" (d -> d_proj).
void add_com_params(ParamStore& ps, std::size_t d, const ComConfig& cfg);

/// phi(q_i) / ||phi(q_i)||, one unit row per refined query.
QuerySet project_normalize(Ctx& c, const ComConfig& cfg, const QuerySet& q);

/// -(1/n) sum_i log softmax_j(z_i . z'_j / tau)[i].
nd::Var info_nce(nd::Var z_clean, nd::Var z_aug, double tau, bool symmetric = false);

}  // namespace ddavs::model
