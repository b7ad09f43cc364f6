#include "ddavs/model/model.hpp"

#include <string>

#include "ddavs/error.hpp"
#include "ddavs/model/layers.hpp"
#include "ddavs/nd/ops.hpp"

namespace ddavs::model {

void ModelConfig::validate() const {
  mel.validate();
  aqm.validate();
  com.validate();
  backbone.validate();
  if (aqm.d != d) {
    throw ParameterError("query width " + std::to_string(aqm.d) + " differs from model width " +
                         std::to_string(d));
  }
}

Model::Model(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), params_(seed) {
  cfg_.validate();
  add_linear(params_, "audio.proj", cfg_.mel.n_mels, cfg_.d);
  add_layer_norm(params_, "audio.ln", cfg_.d);
  add_aqm_params(params_, cfg_.aqm);
  add_com_params(params_, cfg_.d, cfg_.com);
  add_avam_params(params_, cfg_.backbone, cfg_.d);
}

void Model::set_bank(bank::PrototypeBank bank) {
  bank.validate();
  if (bank.dim() != cfg_.d) {
    throw DimensionError("bank width " + std::to_string(bank.dim()) + " does not match model width " +
                         std::to_string(cfg_.d));
  }
  bank_ = std::move(bank);
}

nd::Var Model::audio_frames(Ctx& c, const nd::Array& log_mel) {
  if (log_mel.cols() != cfg_.mel.n_mels) {
    throw DimensionError("log-mel " + nd::shape_str(log_mel.shape()) + " does not have " +
                         std::to_string(cfg_.mel.n_mels) + " bands");
  }
  return layer_norm(c, "audio.ln", linear(c, "audio.proj", c.tape.constant(log_mel)));
}

QuerySet Model::queries(Ctx& c, const nd::Array& log_mel, std::vector<nd::Array>* weights) {
  QuerySet q = generate_queries(c, cfg_.aqm, audio_frames(c, log_mel), weights);
  if (!cfg_.use_bank) {
    q.stage = QueryStage::Refined;
    return q;
  }
  if (!bank_) throw ParameterError("model uses a prototype bank but none is loaded");
  Refinement r = refine_with_bank(c, cfg_.aqm, q, *bank_);
  if (weights) weights->push_back(std::move(r.attention));
  return r.queries;
}

Model::Output Model::forward(Ctx& c, const nd::Array& image, const nd::Array& log_mel,
                             bool keep_attention) {
  Output out;
  std::vector<nd::Array>* weights = keep_attention ? &out.attention : nullptr;
  if (!cfg_.backbone.inject_at.empty()) out.queries = queries(c, log_mel, weights);
  const BackboneOutput feats = forward_backbone(
      c, cfg_.backbone, image, out.queries.vectors.valid() ? &out.queries : nullptr, weights);
  out.logits = decode_mask(c, cfg_.backbone, feats);
  return out;
}

nd::Var Model::contrastive(Ctx& c, const QuerySet& clean, const nd::Array& aug_log_mel) {
  const QuerySet aug = queries(c, aug_log_mel);
  const QuerySet z = project_normalize(c, cfg_.com, clean);
  const QuerySet z_aug = project_normalize(c, cfg_.com, aug);
  return info_nce(z.vectors, z_aug.vectors, cfg_.com.tau, cfg_.com.symmetric);
}

nd::Array Model::embed_audio(const nd::Array& log_mel) {
  nd::Tape tape;
  Ctx c{tape, params_};
  return nd::mean_rows(audio_frames(c, log_mel)).value();
}

}  // namespace ddavs::model
