#pragma once

#include <array>
#include <cstddef>
#include <set>
#include <vector>

#include "ddavs/model/aqm.hpp"

namespace ddavs::model {

enum class DecoderKind {
  Fused,  // every stage projected, upsampled to the stage-1 grid and summed
  Linear  // one affine score on the last stage
};

struct BackboneConfig {
  std::array<std::size_t, 4> widths{32, 64, 128, 160};
  std::array<std::size_t, 4> depths{1, 1, 2, 1};
  std::size_t heads = 2;
  std::size_t patch = 4;
  std::size_t image_size = 64;
  std::size_t channels = 3;
  std::size_t ffn_mult = 4;
  /// Stages (1-based) that run a Cross Alignment Block before their
  /// transformer blocks.
  std::set<int> inject_at{3, 4};
  /// Bare attentions for both cross-modal steps, with no residual or norm.
  bool literal_cab = false;
  DecoderKind decoder = DecoderKind::Fused;
  std::size_t d_dec = 32;

  void validate() const;
};

/// Tokens of an h x w grid, one row per position.
struct VisualFeatureMap {
  nd::Var tokens;
  std::size_t h = 0;
  std::size_t w = 0;
  int stage = 0;
};

void add_avam_params(ParamStore& ps, const BackboneConfig& cfg, std::size_t query_d);

/// `image` is H x W x C. Non-overlapping patches, flattened and mapped to
/// the stage-1 width, then layer-normalised.
VisualFeatureMap patch_embed(Ctx& c, const BackboneConfig& cfg, const nd::Array& image);

/// Adapted queries attend over visual tokens. Returns n x d_s.
nd::Var audio_guided_filtering(Ctx& c, const std::string& prefix, nd::Var queries,
                               const VisualFeatureMap& hv, bool literal,
                               nd::Array* weights = nullptr);

/// Every visual token attends over the filtered audio slots.
VisualFeatureMap visual_guided_enhancement(Ctx& c, const std::string& prefix,
                                           const VisualFeatureMap& hv, nd::Var ha, bool literal,
                                           nd::Array* weights = nullptr);

struct BackboneOutput {
  std::vector<VisualFeatureMap> stages;  // outputs of stages 1..4
};

/// `queries` may be null only when no stage is scheduled for injection.
/// Softmax weights of every attention are appended to `weights` when given.
BackboneOutput forward_backbone(Ctx& c, const BackboneConfig& cfg, const nd::Array& image,
                                const QuerySet* queries, std::vector<nd::Array>* weights = nullptr);

/// Per-pixel logits at image resolution, shape {H, W}.
nd::Var decode_mask(Ctx& c, const BackboneConfig& cfg, const BackboneOutput& features);

}  // namespace ddavs::model
