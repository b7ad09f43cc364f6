#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ddavs/audio/augment.hpp"
#include "ddavs/bank/bank.hpp"
#include "ddavs/harness/scene.hpp"
#include "ddavs/loss/losses.hpp"
#include "ddavs/model/model.hpp"

namespace ddavs::harness {

enum class LrSchedule { Constant, Cosine };

struct OptimConfig {
  double lr = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t batch = 8;
  std::size_t steps = 500;
  std::size_t warmup = 20;
  LrSchedule schedule = LrSchedule::Cosine;
  /// Global gradient-norm ceiling; 0 disables clipping.
  double clip_norm = 1.0;
};

struct DataConfig {
  std::size_t train = 400;
  std::size_t val = 100;
  std::size_t image_size = 64;
  int classes = 4;
  double duration_s = 1.0;
};

struct BankBuildConfig {
  std::size_t clips_per_class = 32;
  std::size_t k_per_class = 4;
  std::size_t m_nearest = 3;
  bool centroid_rows = false;
};

struct LogConfig {
  std::size_t eval_every = 50;
  std::size_t eval_subset = 20;
  std::size_t checkpoint_every = 0;
};

struct RunConfig {
  std::uint64_t seed = 0;
  model::ModelConfig model;
  loss::LossWeights loss;
  OptimConfig optim;
  DataConfig data;
  BankBuildConfig bank;
  audio::AugmentConfig augment;
  LogConfig log;
  /// Prebuilt .davb file; empty builds the bank in memory at start-up.
  std::string bank_path;
  std::string out_dir = "runs";

  void validate() const;
  SceneSpec scene_spec() const;
};

/// Parses the JSON form; unknown keys and wrongly typed values are errors.
RunConfig config_from_json(const std::string& text);
std::string config_to_json(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path);

/// The spec's full-scale optimiser preset: step size 1e-4, batch 64.
RunConfig full_scale_preset();

}  // namespace ddavs::harness
