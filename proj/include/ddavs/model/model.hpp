#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ddavs/audio/features.hpp"
#include "ddavs/bank/bank.hpp"
#include "ddavs/model/aqm.hpp"
#include "ddavs/model/avam.hpp"
#include "ddavs/model/com.hpp"

namespace ddavs::model {

struct ModelConfig {
  audio::MelConfig mel;
  std::size_t d = 64;
  AqmConfig aqm;
  ComConfig com;
  BackboneConfig backbone;
  /// Refine generated queries against the prototype bank.
  bool use_bank = true;

  void validate() const;
};

/// Full audio-visual segmenter: log-mel frontend ("audio.proj", "audio.ln"),
/// query module, contrastive head, and visual backbone with decoder.
class Model {
 public:
  Model(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return cfg_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

  void set_bank(bank::PrototypeBank bank);
  const bank::PrototypeBank* bank() const noexcept { return bank_ ? &*bank_ : nullptr; }

  /// T x d audio tokens from a T x n_mels log-mel matrix.
  nd::Var audio_frames(Ctx& c, const nd::Array& log_mel);
  /// Generated queries, refined against the bank when enabled.
  QuerySet queries(Ctx& c, const nd::Array& log_mel, std::vector<nd::Array>* weights = nullptr);

  struct Output {
    nd::Var logits;     // {H, W}
    QuerySet queries;   // invalid when no stage injects audio
    std::vector<nd::Array> attention;
  };
  /// Audio is only read when some stage is scheduled for injection.
  Output forward(Ctx& c, const nd::Array& image, const nd::Array& log_mel,
                 bool keep_attention = false);

  /// InfoNCE between clean queries and those of the augmented clip.
  nd::Var contrastive(Ctx& c, const QuerySet& clean, const nd::Array& aug_log_mel);

  /// Frame mean of the audio tokens, 1 x d; used to seed the bank.
  nd::Array embed_audio(const nd::Array& log_mel);

 private:
  ModelConfig cfg_;
  ParamStore params_;
  std::optional<bank::PrototypeBank> bank_;
};

}  // namespace ddavs::model
