#include "ddavs/model/layers.hpp"

#include "ddavs/error.hpp"
#include "ddavs/nd/ops.hpp"

namespace ddavs::model {

void add_linear(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out,
                bool bias) {
  ps.add(name + ".w", {in, out}, Init::Xavier);
  if (bias) ps.add(name + ".b", {out}, Init::Zeros);
}

void add_layer_norm(ParamStore& ps, const std::string& name, std::size_t d) {
  ps.add(name + ".g", {d}, Init::Ones);
  ps.add(name + ".b", {d}, Init::Zeros);
}

void add_attention(ParamStore& ps, const std::string& name, std::size_t d) {
  for (const char* p : {".q", ".k", ".v", ".o"}) add_linear(ps, name + p, d, d);
}

void add_ffn(ParamStore& ps, const std::string& name, std::size_t d, std::size_t hidden) {
  add_linear(ps, name + ".0", d, hidden);
  add_linear(ps, name + ".1", hidden, d);
}

nd::Var linear(Ctx& c, const std::string& name, nd::Var x) {
  nd::Var y = nd::matmul(x, c(name + ".w"));
  if (c.params.contains(name + ".b")) y = nd::add_row(y, c(name + ".b"));
  return y;
}

nd::Var layer_norm(Ctx& c, const std::string& name, nd::Var x) {
  return nd::layer_norm(x, c(name + ".g"), c(name + ".b"));
}

nd::Var attention(Ctx& c, const std::string& name, nd::Var q_in, nd::Var kv_in,
                  std::size_t heads, std::vector<nd::Array>* weights) {
  nd::Var q = linear(c, name + ".q", q_in);
  nd::Var k = linear(c, name + ".k", kv_in);
  nd::Var v = linear(c, name + ".v", kv_in);
  const std::size_t d = q.cols();
  if (heads == 0 || d % heads != 0) {
    throw ParameterError(name + ": width " + std::to_string(d) + " does not split into " +
                         std::to_string(heads) + " heads");
  }
  nd::Var out;
  if (heads == 1) {
    nd::Var w;
    out = nd::scaled_dot_attention(q, k, v, &w);
    if (weights) weights->push_back(w.value());
  } else {
    const std::size_t dh = d / heads;
    std::vector<nd::Var> parts;
    for (std::size_t h = 0; h < heads; ++h) {
      nd::Var w;
      parts.push_back(nd::scaled_dot_attention(nd::slice_cols(q, h * dh, dh),
                                               nd::slice_cols(k, h * dh, dh),
                                               nd::slice_cols(v, h * dh, dh), &w));
      if (weights) weights->push_back(w.value());
    }
    out = nd::concat_cols(parts);
  }
  return linear(c, name + ".o", out);
}

nd::Var ffn(Ctx& c, const std::string& name, nd::Var x) {
  return linear(c, name + ".1", nd::gelu(linear(c, name + ".0", x)));
}

}  // namespace ddavs::model
