#pragma once

#include <string>
#include <vector>

#include "ddavs/model/params.hpp"

// Small building blocks shared by the audio, query and visual modules.
// A layer named `n` owns parameters `n.w`, `n.b` (linear) or `n.g`, `n.b`
// (layer norm).
namespace ddavs::model {

void add_linear(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out,
                bool bias = true);
void add_layer_norm(ParamStore& ps, const std::string& name, std::size_t d);
/// Multi-head attention with q/k/v/o projections of width `d`.
void add_attention(ParamStore& ps, const std::string& name, std::size_t d);
/// d -> hidden -> d with GELU between.
void add_ffn(ParamStore& ps, const std::string& name, std::size_t d, std::size_t hidden);

nd::Var linear(Ctx& c, const std::string& name, nd::Var x);
nd::Var layer_norm(Ctx& c, const std::string& name, nd::Var x);
/// Queries from `q_in` attend over `kv_in`; per-head softmax weights are
/// appended to `weights` when given.
nd::Var attention(Ctx& c, const std::string& name, nd::Var q_in, nd::Var kv_in,
                  std::size_t heads, std::vector<nd::Array>* weights = nullptr);
nd::Var ffn(Ctx& c, const std::string& name, nd::Var x);

}  // namespace ddavs::model
