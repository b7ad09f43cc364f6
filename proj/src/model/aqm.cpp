#include "ddavs/model/aqm.hpp"

#include <cmath>
#include <string>

#include "ddavs/error.hpp"
#include "ddavs/model/layers.hpp"
#include "ddavs/nd/ops.hpp"

namespace ddavs::model {

namespace {
std::string gen(std::size_t l) { return "aqm.gen." + std::to_string(l); }
}  // namespace

void AqmConfig::validate() const {
  if (n_queries < 1 || n_queries > 16) {
    throw ParameterError("query count " + std::to_string(n_queries) + " outside [1, 16]");
  }
  if (d < 2 || heads == 0 || d % heads != 0) {
    throw ParameterError("query width " + std::to_string(d) + " must split into " +
                         std::to_string(heads) + " heads");
  }
  if (!std::isfinite(gamma)) throw ParameterError("gamma must be finite");
}

void add_aqm_params(ParamStore& ps, const AqmConfig& cfg) {
  cfg.validate();
  ps.add("aqm.queries", {cfg.n_queries, cfg.d}, Init::Normal, 0.02);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    add_attention(ps, gen(l) + ".attn", cfg.d);
    add_layer_norm(ps, gen(l) + ".ln1", cfg.d);
    add_ffn(ps, gen(l) + ".ffn", cfg.d, cfg.ffn_hidden);
    add_layer_norm(ps, gen(l) + ".ln2", cfg.d);
  }
  for (const char* w : {"aqm.bank.wq", "aqm.bank.wk", "aqm.bank.wv"}) {
    ps.add(w, {cfg.d, cfg.d}, Init::Xavier);
  }
  add_layer_norm(ps, "aqm.bank.ln", cfg.d);
}

QuerySet generate_queries(Ctx& c, const AqmConfig& cfg, nd::Var frames,
                          std::vector<nd::Array>* weights) {
  if (frames.value().empty() || frames.rows() == 0) {
    throw DimensionError("generate_queries: empty audio (0 frames)");
  }
  if (frames.cols() != cfg.d) {
    throw DimensionError("generate_queries: frames " + nd::shape_str(frames.shape()) +
                         " do not have query width " + std::to_string(cfg.d));
  }
  nd::Var q = c("aqm.queries");
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    q = layer_norm(c, gen(l) + ".ln1",
                   nd::add(q, attention(c, gen(l) + ".attn", q, frames, cfg.heads, weights)));
    q = layer_norm(c, gen(l) + ".ln2", nd::add(q, ffn(c, gen(l) + ".ffn", q)));
  }
  return {q, QueryStage::Generated};
}

Refinement refine_with_bank(Ctx& c, const AqmConfig& cfg, const QuerySet& q,
                            const bank::PrototypeBank& bank) {
  if (q.stage != QueryStage::Generated) {
    throw ParameterError("refine_with_bank expects generated queries");
  }
  if (bank.dim() != q.vectors.cols()) {
    throw DimensionError("bank width " + std::to_string(bank.dim()) + " does not match query width " +
                         std::to_string(q.vectors.cols()));
  }
  if (bank.size() == 0) throw DimensionError("refine_with_bank: empty bank");
  nd::Var m = c.tape.constant(bank.prototypes);
  nd::Var w;
  nd::Var mixed = nd::scaled_dot_attention(nd::matmul(q.vectors, c("aqm.bank.wq")),
                                           nd::matmul(m, c("aqm.bank.wk")),
                                           nd::matmul(m, c("aqm.bank.wv")), &w);
  Refinement r;
  r.queries = {layer_norm(c, "aqm.bank.ln", nd::add(q.vectors, nd::scale(mixed, cfg.gamma))),
               QueryStage::Refined};
  r.attention = w.value();
  return r;
}

}  // namespace ddavs::model
