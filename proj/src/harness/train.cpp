#include "ddavs/harness/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <sstream>

#include "ddavs/audio/synth.hpp"
#include "ddavs/error.hpp"
#include "ddavs/loss/metrics.hpp"
#include "ddavs/nd/gradcheck.hpp"
#include "ddavs/nd/ops.hpp"
#include "ddavs/random.hpp"

namespace ddavs::harness {

namespace {

enum Stream : std::uint64_t {
  kTrainScenes = 1,
  kValScenes = 2,
  kBankClips = 3,
  kShuffle = 4,
  kAugment = 5,
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Split make_split(const RunConfig& cfg, std::size_t count, std::uint64_t seed) {
  Split s;
  s.scenes = generate_split(cfg.scene_spec(), count, seed);
  for (const Scene& sc : s.scenes) s.mels.push_back(audio::log_mel_spectrogram(sc.waveform, cfg.model.mel));
  return s;
}

Split train_split(const RunConfig& cfg) {
  return make_split(cfg, cfg.data.train, derive_seed(cfg.seed, kTrainScenes));
}

Split val_split(const RunConfig& cfg) {
  return make_split(cfg, cfg.data.val, derive_seed(cfg.seed, kValScenes));
}

std::vector<bank::EmbeddingSet> bank_embeddings(model::Model& m, const RunConfig& cfg) {
  std::vector<bank::EmbeddingSet> sets;
  const std::size_t d = m.config().d;
  for (int c = 0; c < cfg.data.classes; ++c) {
    bank::EmbeddingSet s{static_cast<std::size_t>(c), nd::Array({cfg.bank.clips_per_class, d})};
    for (std::size_t i = 0; i < cfg.bank.clips_per_class; ++i) {
      const auto w = audio::synth_waveform(c, derive_seed(cfg.seed, kBankClips, c * 100003 + i),
                                           cfg.data.duration_s);
      const nd::Array e = m.embed_audio(audio::log_mel_spectrogram(w, cfg.model.mel));
      std::copy_n(e.data(), d, s.embeddings.data() + i * d);
    }
    sets.push_back(std::move(s));
  }
  return sets;
}

bank::PrototypeBank prepare_bank(model::Model& m, const RunConfig& cfg) {
  if (!cfg.bank_path.empty()) {
    if (!std::filesystem::exists(cfg.bank_path)) {
      throw ParameterError("prototype bank " + cfg.bank_path + " does not exist");
    }
    return bank::load_bank(cfg.bank_path);
  }
  const auto sets = bank_embeddings(m, cfg);
  bank::BankOptions opts;
  opts.k_per_class = cfg.bank.k_per_class;
  opts.m_nearest = cfg.bank.m_nearest;
  opts.seed = cfg.seed;
  opts.centroid_rows = cfg.bank.centroid_rows;
  return bank::build_bank(sets, opts);
}

model::Model make_model(const RunConfig& cfg) {
  cfg.validate();
  model::Model m(cfg.model, cfg.seed);
  if (cfg.model.use_bank) m.set_bank(prepare_bank(m, cfg));
  return m;
}

nd::Array augmented_log_mel(const Scene& scene, const RunConfig& cfg, std::uint64_t seed) {
  audio::AugmentConfig a = cfg.augment;
  a.seed = seed;
  return audio::log_mel_spectrogram(audio::augment_chain(scene.waveform, a), cfg.model.mel);
}

loss::LossTerms item_loss(model::Model& m, model::Ctx& c, const Scene& scene, const nd::Array& mel,
                          const nd::Array* aug_mel, const RunConfig& cfg) {
  model::Model::Output out = m.forward(c, scene.image, mel);
  nd::Var l_con;
  if (cfg.loss.con > 0.0) {
    if (aug_mel == nullptr) throw ParameterError("contrastive loss needs an augmented clip");
    const model::QuerySet clean = out.queries.vectors.valid() ? out.queries : m.queries(c, mel);
    l_con = m.contrastive(c, clean, *aug_mel);
  }
  return loss::total_loss(nd::sigmoid(out.logits), scene.gt, l_con, cfg.loss);
}

void AdamW::step(model::ParamStore& params, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& [name, p] : params.all()) {
    auto [it, fresh] = moments_.try_emplace(name);
    if (fresh) it->second = {nd::Array(p.value.shape()), nd::Array(p.value.shape())};
    nd::Array& mom = it->second.first;
    nd::Array& vel = it->second.second;
    // Decay only matrices; norms, biases and query slots are left alone.
    const bool decay = p.value.shape().size() == 2 && name != "aqm.queries";
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      mom[i] = cfg_.beta1 * mom[i] + (1.0 - cfg_.beta1) * g;
      vel[i] = cfg_.beta2 * vel[i] + (1.0 - cfg_.beta2) * g * g;
      double& v = p.value[i];
      if (decay) v -= lr * cfg_.weight_decay * v;
      v -= lr * (mom[i] / bc1) / (std::sqrt(vel[i] / bc2) + cfg_.eps);
    }
  }
}

double learning_rate(const OptimConfig& cfg, std::size_t step) {
  if (cfg.warmup > 0 && step <= cfg.warmup) {
    return cfg.lr * static_cast<double>(step) / static_cast<double>(cfg.warmup);
  }
  if (cfg.schedule == LrSchedule::Constant || cfg.steps <= cfg.warmup) return cfg.lr;
  const double progress =
      static_cast<double>(step - cfg.warmup) / static_cast<double>(cfg.steps - cfg.warmup);
  return cfg.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * std::min(1.0, progress)));
}

std::string log_header() { return "step,lr,total,ce,focal,dice,iou,con,val_jf"; }

std::string log_line(const LogRow& r) {
  std::string s = std::to_string(r.step);
  for (double v : {r.lr, r.total, r.ce, r.focal, r.dice, r.iou, r.con}) s += "," + fmt(v);
  s += ",";
  if (r.val_jf) s += fmt(*r.val_jf);
  return s;
}

TrainResult train(model::Model& m, const Split& train, const Split& val, const RunConfig& cfg,
                  const TrainHooks& hooks) {
  cfg.validate();
  if (train.size() == 0) throw ParameterError("training split is empty");
  model::ParamStore& params = m.params();
  AdamW opt(cfg.optim);
  TrainResult res;

  Split probe;
  for (std::size_t i = 0; i < std::min(cfg.log.eval_subset, val.size()); ++i) {
    probe.scenes.push_back(val.scenes[i]);
    probe.mels.push_back(val.mels[i]);
  }

  std::vector<std::size_t> order(train.size());
  std::size_t cursor = order.size(), epoch = 0;
  auto next_index = [&] {
    if (cursor == order.size()) {
      std::iota(order.begin(), order.end(), 0);
      Rng rng(derive_seed(cfg.seed, kShuffle, epoch++));
      std::shuffle(order.begin(), order.end(), rng.engine());
      cursor = 0;
    }
    return order[cursor++];
  };

  const double inv_batch = 1.0 / static_cast<double>(cfg.optim.batch);
  for (std::size_t step = 1; step <= cfg.optim.steps; ++step) {
    LogRow row;
    row.step = step;
    row.lr = learning_rate(cfg.optim, step);
    params.zero_grad();
    for (std::size_t b = 0; b < cfg.optim.batch; ++b) {
      const std::size_t idx = next_index();
      const Scene& sc = train.scenes[idx];
      std::optional<nd::Array> aug;
      if (cfg.loss.con > 0.0) aug = augmented_log_mel(sc, cfg, derive_seed(cfg.seed, kAugment, step * 4096 + b));
      nd::Tape tape;
      model::Ctx c{tape, params};
      const loss::LossTerms t = item_loss(m, c, sc, train.mels[idx], aug ? &*aug : nullptr, cfg);
      const std::pair<const char*, double> terms[] = {
          {"ce", t.ce}, {"focal", t.focal}, {"dice", t.dice}, {"iou", t.iou}, {"con", t.con},
          {"total", t.total.item()}};
      for (const auto& [name, v] : terms) {
        if (!std::isfinite(v)) {
          throw EvaluationError("non-finite loss at step " + std::to_string(step) + " in term '" +
                                name + "'");
        }
      }
      tape.backward(t.total);
      tape.accumulate_parameter_grads();
      row.total += t.total.item() * inv_batch;
      row.ce += t.ce * inv_batch;
      row.focal += t.focal * inv_batch;
      row.dice += t.dice * inv_batch;
      row.iou += t.iou * inv_batch;
      row.con += t.con * inv_batch;
    }
    double norm2 = 0.0;
    for (auto& [_, p] : params.all()) {
      for (double& g : p.grad.values()) {
        g *= inv_batch;
        norm2 += g * g;
      }
    }
    const double norm = std::sqrt(norm2);
    if (cfg.optim.clip_norm > 0.0 && norm > cfg.optim.clip_norm) {
      const double s = cfg.optim.clip_norm / norm;
      for (auto& [_, p] : params.all())
        for (double& g : p.grad.values()) g *= s;
    }
    opt.step(params, row.lr);

    const bool eval_now = probe.size() > 0 && ((cfg.log.eval_every > 0 && step % cfg.log.eval_every == 0) ||
                                               step == cfg.optim.steps);
    if (eval_now) row.val_jf = evaluate(m, probe).overall().jf;
    res.log.push_back(row);
    if (hooks.on_step) hooks.on_step(row);
    if (hooks.on_checkpoint && cfg.log.checkpoint_every > 0 && step % cfg.log.checkpoint_every == 0) {
      hooks.on_checkpoint(snapshot(params, step, config_to_json(cfg)));
    }
  }
  params.zero_grad();
  res.checkpoint = snapshot(params, cfg.optim.steps, config_to_json(cfg));
  return res;
}

nd::Array predict(model::Model& m, const Scene& scene, const nd::Array& mel) {
  nd::Tape tape;
  model::Ctx c{tape, m.params()};
  return nd::sigmoid(m.forward(c, scene.image, mel).logits).value();
}

const ScoreRow* Report::find(std::string_view scenario) const {
  for (const ScoreRow& r : rows) {
    if (r.scenario == scenario) return &r;
  }
  return nullptr;
}

Report evaluate(model::Model& m, const Split& split, bool pooled) {
  std::map<Scenario, loss::MetricAccumulator> acc;
  std::map<Scenario, double> fg;
  loss::MetricAccumulator all(pooled);
  double fg_all = 0.0;
  for (std::size_t i = 0; i < split.size(); ++i) {
    const Scene& sc = split.scenes[i];
    const nd::Array pred = loss::binarize(predict(m, sc, split.mels[i]));
    acc.try_emplace(sc.scenario, pooled).first->second.add(pred, sc.gt);
    all.add(pred, sc.gt);
    const double frac = std::accumulate(pred.values().begin(), pred.values().end(), 0.0) /
                        static_cast<double>(pred.size());
    fg[sc.scenario] += frac;
    fg_all += frac;
  }
  Report r;
  for (Scenario s : kScenarios) {
    auto it = acc.find(s);
    if (it == acc.end()) continue;
    const auto& a = it->second;
    r.rows.push_back({std::string(scenario_name(s)), a.count(), a.j(), a.f(), a.jf(),
                      fg[s] / static_cast<double>(a.count())});
  }
  const double n = std::max<double>(1.0, static_cast<double>(all.count()));
  r.rows.push_back({"overall", all.count(), all.j(), all.f(), all.jf(), fg_all / n});
  return r;
}

std::string report_csv(const Report& r) {
  std::string s = "scenario,count,j,f,jf,fg_fraction\n";
  for (const ScoreRow& row : r.rows) {
    s += row.scenario + "," + std::to_string(row.count) + "," + fmt(row.j) + "," + fmt(row.f) + "," +
         fmt(row.jf) + "," + fmt(row.fg_fraction) + "\n";
  }
  return s;
}

std::string report_table(const Report& r) {
  std::string s;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-15s %6s %7s %7s %7s %7s\n", "scenario", "count", "J", "F", "J&F", "fg");
  s += buf;
  for (const ScoreRow& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%-15s %6zu %7.4f %7.4f %7.4f %7.4f\n", row.scenario.c_str(),
                  row.count, row.j, row.f, row.jf, row.fg_fraction);
    s += buf;
  }
  return s;
}

GradCheckResult model_grad_check(model::Model& m, const Scene& scene, const nd::Array& mel,
                                 const RunConfig& cfg, double step, std::size_t coords_per_tensor,
                                 std::uint64_t seed) {
  model::ParamStore& params = m.params();
  std::optional<nd::Array> aug;
  if (cfg.loss.con > 0.0) aug = augmented_log_mel(scene, cfg, derive_seed(seed, kAugment));
  const nd::Array* aug_ptr = aug ? &*aug : nullptr;

  params.zero_grad();
  {
    nd::Tape tape;
    model::Ctx c{tape, params};
    const loss::LossTerms t = item_loss(m, c, scene, mel, aug_ptr, cfg);
    tape.backward(t.total);
    tape.accumulate_parameter_grads();
  }
  std::vector<nd::Probe> probes;
  for (auto& [name, p] : params.all()) {
    for (std::size_t i : nd::sample_coordinates(p.value.size(), coords_per_tensor,
                                                derive_seed(seed, hash_name(name)))) {
      probes.push_back({&p.value[i], p.grad[i]});
    }
  }
  auto objective = [&] {
    nd::Tape tape;
    model::Ctx c{tape, params};
    return item_loss(m, c, scene, mel, aug_ptr, cfg).total.item();
  };
  GradCheckResult r;
  r.max_error = nd::central_difference_error(objective, probes, step);
  r.probes = probes.size();
  params.zero_grad();
  return r;
}

RunOutcome train_and_evaluate(const RunConfig& cfg, const TrainHooks& hooks) {
  model::Model m = make_model(cfg);
  const Split tr = train_split(cfg);
  const Split va = val_split(cfg);
  RunOutcome out;
  out.trained = train(m, tr, va, cfg, hooks);
  out.report = evaluate(m, va);
  return out;
}

std::string schedule_label(const std::set<int>& stages) {
  if (stages.empty()) return "none";
  std::string s;
  for (int v : stages) s += (s.empty() ? "" : ",") + std::to_string(v);
  return s;
}

std::set<int> parse_schedule(std::string_view text) {
  std::set<int> out;
  if (text == "none" || text.empty()) return out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    const std::string part(text.substr(start, end - start));
    if (part.size() != 1 || part[0] < '1' || part[0] > '4') {
      throw ParameterError("injection schedule '" + std::string(text) + "' must list stages 1..4");
    }
    out.insert(part[0] - '0');
    start = end + 1;
  }
  return out;
}

}  // namespace ddavs::harness
