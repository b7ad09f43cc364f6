#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <string>
#include <vector>

#include "ddavs/harness/checkpoint.hpp"
#include "ddavs/harness/config.hpp"
#include "ddavs/harness/scene.hpp"

namespace ddavs::harness {

/// Scenes with their clean log-mel matrices.
struct Split {
  std::vector<Scene> scenes;
  std::vector<nd::Array> mels;

  std::size_t size() const noexcept { return scenes.size(); }
};

Split make_split(const RunConfig& cfg, std::size_t count, std::uint64_t seed);
Split train_split(const RunConfig& cfg);
Split val_split(const RunConfig& cfg);

/// Frame-mean audio embeddings of clean single-source clips, per class.
std::vector<bank::EmbeddingSet> bank_embeddings(model::Model& m, const RunConfig& cfg);
/// Loads `cfg.bank_path`, or builds the bank from `bank_embeddings` when
/// the path is empty. A named but missing file is an error.
bank::PrototypeBank prepare_bank(model::Model& m, const RunConfig& cfg);
/// Model initialised from the run seed, with its bank attached when used.
model::Model make_model(const RunConfig& cfg);

/// Augmented copy of the scene audio as log-mel.
nd::Array augmented_log_mel(const Scene& scene, const RunConfig& cfg, std::uint64_t seed);

/// Full training objective for one scene on `c.tape`. `aug_mel` is only
/// read when the contrastive weight is positive.
loss::LossTerms item_loss(model::Model& m, model::Ctx& c, const Scene& scene, const nd::Array& mel,
                          const nd::Array* aug_mel, const RunConfig& cfg);

class AdamW {
 public:
  explicit AdamW(const OptimConfig& cfg) : cfg_(cfg) {}
  /// One update from the gradients currently held in `params`.
  void step(model::ParamStore& params, double lr);
  std::size_t steps_taken() const noexcept { return t_; }

 private:
  OptimConfig cfg_;
  std::size_t t_ = 0;
  std::map<std::string, std::pair<nd::Array, nd::Array>> moments_;
};

double learning_rate(const OptimConfig& cfg, std::size_t step);

struct LogRow {
  std::size_t step = 0;
  double lr = 0.0;
  double total = 0.0, ce = 0.0, focal = 0.0, dice = 0.0, iou = 0.0, con = 0.0;
  std::optional<double> val_jf;
};

std::string log_header();
std::string log_line(const LogRow& row);

struct TrainHooks {
  std::function<void(const LogRow&)> on_step;
  /// Called every `log.checkpoint_every` steps.
  std::function<void(const Checkpoint&)> on_checkpoint;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LogRow> log;
};

/// Deterministic given (cfg, model init, data). Throws EvaluationError on a
/// non-finite loss, naming the step and the term.
TrainResult train(model::Model& m, const Split& train, const Split& val, const RunConfig& cfg,
                  const TrainHooks& hooks = {});

/// Sigmoid probabilities at image resolution.
nd::Array predict(model::Model& m, const Scene& scene, const nd::Array& mel);

struct ScoreRow {
  std::string scenario;  // or "overall"
  std::size_t count = 0;
  double j = 0.0, f = 0.0, jf = 0.0;
  double fg_fraction = 0.0;  // mean share of pixels predicted foreground
};

struct Report {
  std::vector<ScoreRow> rows;  // one per scenario present, then overall

  const ScoreRow& overall() const { return rows.back(); }
  const ScoreRow* find(std::string_view scenario) const;
};

Report evaluate(model::Model& m, const Split& split, bool pooled = false);
std::string report_csv(const Report& r);
std::string report_table(const Report& r);

struct GradCheckResult {
  double max_error = 0.0;
  std::size_t probes = 0;
};

/// Central-difference check of the full objective on one scene, probing
/// up to `coords_per_tensor` seeded coordinates of every parameter.
GradCheckResult model_grad_check(model::Model& m, const Scene& scene, const nd::Array& mel,
                                 const RunConfig& cfg, double step = 1e-5,
                                 std::size_t coords_per_tensor = 3, std::uint64_t seed = 0);

/// Builds the model, trains on the train split, and scores the val split.
struct RunOutcome {
  TrainResult trained;
  Report report;
};
RunOutcome train_and_evaluate(const RunConfig& cfg, const TrainHooks& hooks = {});

/// "none" for the empty schedule, else stages joined by commas.
std::string schedule_label(const std::set<int>& stages);
std::set<int> parse_schedule(std::string_view text);

}  // namespace ddavs::harness
