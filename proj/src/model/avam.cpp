#include "ddavs/model/avam.hpp"

#include <string>

#include "ddavs/error.hpp"
#include "ddavs/model/layers.hpp"
#include "ddavs/nd/ops.hpp"

namespace ddavs::model {

namespace {

std::string stage_name(int s) { return "vis.s" + std::to_string(s); }

nd::Var project(Ctx& c, nd::Var x, const std::string& name) { return nd::matmul(x, c(name)); }

nd::Var transformer_block(Ctx& c, const std::string& name, nd::Var x, std::size_t heads,
                          std::vector<nd::Array>* weights) {
  nd::Var h = layer_norm(c, name + ".ln1", x);
  x = nd::add(x, attention(c, name + ".attn", h, h, heads, weights));
  return nd::add(x, ffn(c, name + ".ffn", layer_norm(c, name + ".ln2", x)));
}

}  // namespace

void BackboneConfig::validate() const {
  for (int s : inject_at) {
    if (s < 1 || s > 4) throw ParameterError("injection stage " + std::to_string(s) + " outside 1..4");
  }
  if (patch == 0 || image_size % patch != 0) {
    throw ParameterError("image size " + std::to_string(image_size) + " is not a multiple of patch " +
                         std::to_string(patch));
  }
  for (std::size_t w : widths) {
    if (heads == 0 || w % heads != 0) {
      throw ParameterError("stage width " + std::to_string(w) + " does not split into " +
                           std::to_string(heads) + " heads");
    }
  }
  if (d_dec == 0 || channels == 0) throw ParameterError("decoder width and channels must be positive");
}

void add_avam_params(ParamStore& ps, const BackboneConfig& cfg, std::size_t query_d) {
  cfg.validate();
  add_linear(ps, "vis.patch", cfg.channels * cfg.patch * cfg.patch, cfg.widths[0]);
  add_layer_norm(ps, "vis.patch_ln", cfg.widths[0]);
  for (int s = 1; s <= 4; ++s) {
    const std::string st = stage_name(s);
    const std::size_t d = cfg.widths[s - 1];
    if (s > 1) {
      add_layer_norm(ps, st + ".merge_ln", 4 * cfg.widths[s - 2]);
      add_linear(ps, st + ".merge", 4 * cfg.widths[s - 2], d);
    }
    if (cfg.inject_at.count(s)) {
      add_linear(ps, st + ".cab.adapter", query_d, d);
      for (const char* w : {".cab.wk1", ".cab.wv1", ".cab.wq2", ".cab.wk2", ".cab.wv2"}) {
        ps.add(st + w, {d, d}, Init::Xavier);
      }
      add_layer_norm(ps, st + ".cab.ln_a", d);
      add_layer_norm(ps, st + ".cab.ln_v", d);
    }
    for (std::size_t b = 0; b < cfg.depths[s - 1]; ++b) {
      const std::string blk = st + ".b" + std::to_string(b);
      add_layer_norm(ps, blk + ".ln1", d);
      add_attention(ps, blk + ".attn", d);
      add_layer_norm(ps, blk + ".ln2", d);
      add_ffn(ps, blk + ".ffn", d, cfg.ffn_mult * d);
    }
    add_layer_norm(ps, st + ".norm", d);
    if (cfg.decoder == DecoderKind::Fused) add_linear(ps, "dec.s" + std::to_string(s), d, cfg.d_dec);
  }
  add_linear(ps, "dec.score", cfg.decoder == DecoderKind::Fused ? cfg.d_dec : cfg.widths[3], 1);
}

VisualFeatureMap patch_embed(Ctx& c, const BackboneConfig& cfg, const nd::Array& image) {
  const nd::Shape& s = image.shape();
  if (s.size() != 3 || s[2] != cfg.channels) {
    throw DimensionError("patch_embed: image " + nd::shape_str(s) + " is not H x W x " +
                         std::to_string(cfg.channels));
  }
  if (s[0] % cfg.patch != 0 || s[1] % cfg.patch != 0) {
    throw DimensionError("patch_embed: image " + nd::shape_str(s) + " is not divisible into " +
                         std::to_string(cfg.patch) + "-pixel patches");
  }
  nd::Var pixels = c.tape.constant(image.reshaped({s[0] * s[1], s[2]}));
  nd::Var patches = nd::space_to_depth(pixels, s[0], s[1], cfg.patch);
  return {layer_norm(c, "vis.patch_ln", linear(c, "vis.patch", patches)), s[0] / cfg.patch,
          s[1] / cfg.patch, 0};
}

nd::Var audio_guided_filtering(Ctx& c, const std::string& prefix, nd::Var queries,
                               const VisualFeatureMap& hv, bool literal, nd::Array* weights) {
  if (queries.cols() != hv.tokens.cols()) {
    throw DimensionError("audio_guided_filtering: queries " + nd::shape_str(queries.shape()) +
                         " vs tokens " + nd::shape_str(hv.tokens.shape()));
  }
  nd::Var w;
  nd::Var ha = nd::scaled_dot_attention(queries, project(c, hv.tokens, prefix + ".wk1"),
                                        project(c, hv.tokens, prefix + ".wv1"), &w);
  if (weights) *weights = w.value();
  return literal ? ha : layer_norm(c, prefix + ".ln_a", nd::add(queries, ha));
}

VisualFeatureMap visual_guided_enhancement(Ctx& c, const std::string& prefix,
                                           const VisualFeatureMap& hv, nd::Var ha, bool literal,
                                           nd::Array* weights) {
  if (ha.cols() != hv.tokens.cols()) {
    throw DimensionError("visual_guided_enhancement: audio slots " + nd::shape_str(ha.shape()) +
                         " vs tokens " + nd::shape_str(hv.tokens.shape()));
  }
  nd::Var w;
  nd::Var hv2 = nd::scaled_dot_attention(project(c, hv.tokens, prefix + ".wq2"),
                                         project(c, ha, prefix + ".wk2"),
                                         project(c, ha, prefix + ".wv2"), &w);
  if (weights) *weights = w.value();
  VisualFeatureMap out = hv;
  out.tokens = literal ? hv2 : layer_norm(c, prefix + ".ln_v", nd::add(hv.tokens, hv2));
  return out;
}

BackboneOutput forward_backbone(Ctx& c, const BackboneConfig& cfg, const nd::Array& image,
                                const QuerySet* queries, std::vector<nd::Array>* weights) {
  cfg.validate();
  if (!cfg.inject_at.empty() && (queries == nullptr || queries->stage != QueryStage::Refined)) {
    throw ParameterError("forward_backbone: injection needs refined queries");
  }
  BackboneOutput out;
  VisualFeatureMap x = patch_embed(c, cfg, image);
  for (int s = 1; s <= 4; ++s) {
    const std::string st = stage_name(s);
    if (s > 1) {
      nd::Var merged = nd::space_to_depth(x.tokens, x.h, x.w, 2);
      x.tokens = linear(c, st + ".merge", layer_norm(c, st + ".merge_ln", merged));
      x.h = (x.h + 1) / 2;
      x.w = (x.w + 1) / 2;
    }
    x.stage = s;
    if (cfg.inject_at.count(s)) {
      nd::Var q = linear(c, st + ".cab.adapter", queries->vectors);
      nd::Array wa, wv;
      nd::Var ha = audio_guided_filtering(c, st + ".cab", q, x, cfg.literal_cab, weights ? &wa : nullptr);
      x = visual_guided_enhancement(c, st + ".cab", x, ha, cfg.literal_cab, weights ? &wv : nullptr);
      if (weights) {
        weights->push_back(std::move(wa));
        weights->push_back(std::move(wv));
      }
    }
    for (std::size_t b = 0; b < cfg.depths[s - 1]; ++b) {
      x.tokens = transformer_block(c, st + ".b" + std::to_string(b), x.tokens, cfg.heads, weights);
    }
    VisualFeatureMap y = x;
    y.tokens = layer_norm(c, st + ".norm", x.tokens);
    out.stages.push_back(y);
    x = y;
  }
  return out;
}

nd::Var decode_mask(Ctx& c, const BackboneConfig& cfg, const BackboneOutput& features) {
  if (features.stages.size() != 4) throw DimensionError("decode_mask needs all four stage outputs");
  const VisualFeatureMap& first = features.stages.front();
  const VisualFeatureMap& last = features.stages.back();
  const std::size_t side = cfg.image_size;
  nd::Var score;
  std::size_t h = last.h, w = last.w;
  if (cfg.decoder == DecoderKind::Linear) {
    score = linear(c, "dec.score", last.tokens);
  } else {
    nd::Var fused;
    for (const VisualFeatureMap& f : features.stages) {
      nd::Var p = linear(c, "dec.s" + std::to_string(f.stage), f.tokens);
      if (f.h != first.h || f.w != first.w) p = nd::upsample_bilinear(p, f.h, f.w, first.h, first.w);
      fused = fused.valid() ? nd::add(fused, p) : p;
    }
    score = linear(c, "dec.score", nd::gelu(fused));
    h = first.h;
    w = first.w;
  }
  return nd::reshape(nd::upsample_bilinear(score, h, w, side, side), {side, side});
}

}  // namespace ddavs::model
