#pragma once

#include <cstddef>
#include <vector>

#include "ddavs/bank/bank.hpp"
#include "ddavs/model/params.hpp"

namespace ddavs::model {

struct AqmConfig {
  std::size_t n_queries = 5;
  std::size_t d = 64;
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t ffn_hidden = 128;
  double gamma = 1.0;

  void validate() const;
};

enum class QueryStage { Generated, Refined, Projected };

struct QuerySet {
  nd::Var vectors;  // n x d
  QueryStage stage = QueryStage::Generated;

  std::size_t n_queries() const { return vectors.rows(); }
};

/// Learnable query slots ("aqm.queries") plus `layers` blocks of
/// cross-attention to the audio frames and a feed-forward, each wrapped in
/// residual + layer norm; bank projections "aqm.bank.{wq,wk,wv}" and "aqm.bank.ln".
void add_aqm_params(ParamStore& ps, const AqmConfig& cfg);

/// Turns T x d audio frames into n x d queries.
QuerySet generate_queries(Ctx& c, const AqmConfig& cfg, nd::Var frames,
                          std::vector<nd::Array>* weights = nullptr);

struct Refinement {
  QuerySet queries;
  nd::Array attention;  // n x P
};

/// LN(Q_a + gamma * softmax((Q_a Wq)(M Wk)^T / sqrt(d)) (M Wv)). The bank
/// enters the tape as a constant and never receives gradient.
Refinement refine_with_bank(Ctx& c, const AqmConfig& cfg, const QuerySet& q,
                            const bank::PrototypeBank& bank);

}  // namespace ddavs::model
