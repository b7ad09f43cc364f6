// Acceptance run: one PASS/FAIL line per criterion, thresholds from the
// calibration fixture. Pass criterion numbers to run a subset;
// `--calibrate <path>` also writes the measured values as JSON.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <set>
#include <string>

#include "ddavs/bank/bank.hpp"
#include "ddavs/bank/kmeans.hpp"
#include "ddavs/harness/train.hpp"
#include "ddavs/instrument.hpp"
#include "ddavs/loss/metrics.hpp"
#include "ddavs/nd/ops.hpp"
#include "ddavs/random.hpp"
#include "json.hpp"

using namespace ddavs;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Thresholds {
  double grad_rel_err = 1e-4;
  double grad_seconds = 60;
  double single_jf_min = 0.70;
  double overall_jf_min = 0.55;
  double train_seconds = 1200;
  double ablation_margin_min = 0.03;
  double offscreen_fg_ratio_max = 0.5;
  double untrained_single_jf_max = 0.4;
  double com_margin_min = 0.2;
  std::size_t determinism_steps = 30;
};

Thresholds load_thresholds(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw std::runtime_error("calibration fixture " + p.string() + " missing");
  const json j = json::parse(f).at("thresholds");
  Thresholds t;
  t.grad_rel_err = j.at("grad_rel_err");
  t.grad_seconds = j.at("grad_seconds");
  t.single_jf_min = j.at("single_jf_min");
  t.overall_jf_min = j.at("overall_jf_min");
  t.train_seconds = j.at("train_seconds");
  t.ablation_margin_min = j.at("ablation_margin_min");
  t.offscreen_fg_ratio_max = j.at("offscreen_fg_ratio_max");
  t.untrained_single_jf_max = j.at("untrained_single_jf_max");
  t.com_margin_min = j.at("com_margin_min");
  t.determinism_steps = j.at("determinism_steps");
  return t;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int failures = 0;
json measured;

void report(const std::string& id, bool pass, const std::string& name, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("%s  %-3s %-34s %s\n", pass ? "PASS" : "FAIL", id.c_str(), name.c_str(), detail.c_str());
  std::fflush(stdout);
}

template <class... T>
std::string fmt(const char* f, T... v) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, static_cast<double>(v)...);
  return buf;
}

nd::Array uniform(nd::Shape s, Rng& rng, double lo = 0.0, double hi = 1.0) {
  nd::Array a(s);
  for (double& v : a.values()) v = rng.uniform(lo, hi);
  return a;
}

nd::Array gaussian(nd::Shape s, Rng& rng, double scale = 1.0) {
  nd::Array a(s);
  for (double& v : a.values()) v = rng.normal() * scale;
  return a;
}

nd::Array binary(nd::Shape s, Rng& rng, double p = 0.4) {
  nd::Array a(s);
  for (double& v : a.values()) v = rng.uniform() < p ? 1.0 : 0.0;
  return a;
}

harness::Split single_split(const harness::RunConfig& cfg, std::size_t n, std::uint64_t seed) {
  harness::SceneSpec spec = cfg.scene_spec();
  spec.scenario = harness::Scenario::Single;
  harness::Split s;
  for (std::size_t i = 0; i < n; ++i) {
    s.scenes.push_back(harness::generate_scene(spec, derive_seed(seed, i)));
    s.mels.push_back(audio::log_mel_spectrogram(s.scenes.back().waveform, cfg.model.mel));
  }
  return s;
}

// ---- 1 ---------------------------------------------------------------------
void gradient_fidelity(const Thresholds& th) {
  const auto t0 = std::chrono::steady_clock::now();
  harness::RunConfig cfg;
  model::Model m = harness::make_model(cfg);
  harness::SceneSpec spec = cfg.scene_spec();
  spec.scenario = harness::Scenario::MultiClass;
  const auto sc = harness::generate_scene(spec, 11);
  const auto mel = audio::log_mel_spectrogram(sc.waveform, cfg.model.mel);
  const auto r = harness::model_grad_check(m, sc, mel, cfg, 1e-5, 3, 0);
  const double secs = seconds_since(t0);
  measured["grad_rel_err"] = r.max_error;
  report("1", r.max_error < th.grad_rel_err && secs < th.grad_seconds, "gradient fidelity",
         fmt("max rel err %.3e over %.0f probes (< %.0e), %.1f s (< %.0f s)", r.max_error,
             static_cast<double>(r.probes), th.grad_rel_err, secs, th.grad_seconds));
}

// ---- 2 ---------------------------------------------------------------------
double loop_ce(const nd::Array& p, const nd::Array& y) {
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    s += y[i] * std::log(p[i] + 1e-6) + (1 - y[i]) * std::log(1 - p[i] + 1e-6);
  return -s / static_cast<double>(p.size());
}
double loop_focal(const nd::Array& p, const nd::Array& y, double g, double a) {
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    s += a * y[i] * std::pow(1 - p[i], g) * std::log(p[i] + 1e-6) +
         (1 - a) * (1 - y[i]) * std::pow(p[i], g) * std::log(1 - p[i] + 1e-6);
  return -s / static_cast<double>(p.size());
}
std::array<double, 3> loop_sums(const nd::Array& p, const nd::Array& y) {
  std::array<double, 3> s{};
  for (std::size_t i = 0; i < p.size(); ++i) {
    s[0] += p[i] * y[i];
    s[1] += p[i];
    s[2] += y[i];
  }
  return s;
}

void loss_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2);
  double worst = 0.0, identity = 0.0, fr = 0.0;
  for (int k = 0; k < 100; ++k) {
    const nd::Array p = uniform({8, 8}, rng), y = binary({8, 8}, rng);
    const auto s = loop_sums(p, y);
    nd::Tape t;
    nd::Var v = t.constant(p);
    worst = std::max({worst, std::abs(loss::ce_loss(v, y).item() - loop_ce(p, y)),
                      std::abs(loss::focal_loss(v, y, 2.0, 0.25).item() - loop_focal(p, y, 2.0, 0.25)),
                      std::abs(loss::dice_loss(v, y).item() - (1 - (2 * s[0] + 1e-6) / (s[1] + s[2] + 1e-6))),
                      std::abs(loss::iou_loss(v, y).item() - (1 - (s[0] + 1e-6) / (s[1] + s[2] - s[0] + 1e-6)))});
    const nd::Array pb = binary({8, 8}, rng);
    nd::Var vb = t.constant(pb);
    const double i = 1 - loss::iou_loss(vb, y, 0.0).item();
    const double d = 1 - loss::dice_loss(vb, y, 0.0).item();
    identity = std::max(identity, std::abs(d - 2 * i / (1 + i)));
    // P = R = r: equal false positives and false negatives.
    const std::size_t tp = 1 + rng.index(30), miss = rng.index(17);
    nd::Array g({8, 8}), q({8, 8});
    for (std::size_t j = 0; j < tp + miss; ++j) g[j] = 1;
    for (std::size_t j = miss; j < tp + 2 * miss; ++j) q[j] = 1;
    const double r = static_cast<double>(tp) / static_cast<double>(tp + miss);
    fr = std::max(fr, std::abs(loss::f_score(q, g) - r));
  }
  const double secs = seconds_since(t0);
  report("2", worst < 1e-12 && identity < 1e-9 && fr < 1e-12 && secs < 5, "loss/metric oracles",
         fmt("loop err %.1e (< 1e-12), dice-IoU %.1e (< 1e-9), F=r %.1e (< 1e-12), %.2f s", worst, identity,
             fr, secs));
}

// ---- 3 ---------------------------------------------------------------------
void infonce_analytics() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(3);
  double same = 0.0, ortho = 0.0;
  for (std::size_t n : {2, 5, 8}) {
    nd::Tape t;
    nd::Array row = gaussian({1, 6}, rng);
    nd::Array z({n, 6});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < 6; ++j) z(i, j) = row(0, j);
    nd::Var zn = nd::normalize_rows(t.constant(z));
    for (double tau : {0.07, 0.5, 1.0}) {
      same = std::max(same, std::abs(model::info_nce(zn, zn, tau).item() - std::log(static_cast<double>(n))));
      nd::Var e = t.constant(nd::Array::identity(n));
      const double direct = std::log(1.0 + static_cast<double>(n - 1) * std::exp(-1.0 / tau));
      ortho = std::max(ortho, std::abs(model::info_nce(e, e, tau).item() - direct));
    }
  }
  const double secs = seconds_since(t0);
  report("3", same < 1e-9 && ortho < 1e-6 && secs < 1, "InfoNCE analytics",
         fmt("ln(n) err %.1e (< 1e-9), orthonormal err %.1e (< 1e-6), %.3f s", same, ortho, secs));
}

// ---- 4 ---------------------------------------------------------------------
double worst_row_error(const nd::Array& a) {
  double w = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) s += a(r, c);
    w = std::max(w, std::abs(s - 1.0));
  }
  return w;
}

void softmax_rows() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(4);
  double worst = 0.0;
  std::size_t rows = 0;
  const int cases = 250;
  for (int k = 0; k < cases; ++k) {
    const std::size_t d = 2 * (1 + rng.index(8));
    const std::size_t n = 1 + rng.index(8), p = 1 + rng.index(12), tokens = 1 + rng.index(24);
    const double spread = rng.uniform(0.1, 20.0);
    model::AqmConfig acfg;
    acfg.d = d;
    acfg.n_queries = n;
    model::ParamStore ps(static_cast<std::uint64_t>(k));
    model::add_aqm_params(ps, acfg);
    model::BackboneConfig bcfg;
    bcfg.widths = {d, d, d, d};
    bcfg.inject_at = {1};
    model::add_avam_params(ps, bcfg, d);
    for (auto& [_, prm] : ps.all())
      for (double& v : prm.value.values()) v *= spread;
    bank::PrototypeBank b;
    b.classes = 1;
    b.prototypes = gaussian({p, d}, rng, spread);
    b.per_class_counts = {static_cast<std::uint32_t>(p)};
    b.class_of.assign(p, 0);
    nd::Tape t;
    model::Ctx c{t, ps};
    const auto ref = model::refine_with_bank(
        c, acfg, {t.constant(gaussian({n, d}, rng, spread)), model::QueryStage::Generated}, b);
    model::VisualFeatureMap hv{t.constant(gaussian({tokens, d}, rng, spread)), tokens, 1, 1};
    nd::Array w7, w8;
    const bool literal = rng.uniform() < 0.5;
    nd::Var ha = model::audio_guided_filtering(c, "vis.s1.cab", ref.queries.vectors, hv, literal, &w7);
    model::visual_guided_enhancement(c, "vis.s1.cab", hv, ha, literal, &w8);
    for (const nd::Array* a : {&ref.attention, static_cast<const nd::Array*>(&w7), static_cast<const nd::Array*>(&w8)}) {
      worst = std::max(worst, worst_row_error(*a));
      rows += a->rows();
    }
  }
  const double secs = seconds_since(t0);
  report("4", worst < 1e-9 && secs < 10, "attention row normalisation",
         fmt("%.0f cases, %.0f rows, worst |sum-1| %.1e (< 1e-9), %.2f s", cases, static_cast<double>(rows),
             worst, secs));
}

// ---- 5 ---------------------------------------------------------------------
void structural_isolation() {
  const auto t0 = std::chrono::steady_clock::now();
  harness::RunConfig cfg;
  harness::SceneSpec spec = cfg.scene_spec();
  const auto a = harness::generate_scene(spec, 51);
  spec.scenario = harness::Scenario::MultiClass;
  const auto b = harness::generate_scene(spec, 52);
  const auto mel_a = audio::log_mel_spectrogram(a.waveform, cfg.model.mel);
  const auto mel_b = audio::log_mel_spectrogram(b.waveform, cfg.model.mel);
  auto logits = [&](model::Model& m, const nd::Array& mel) {
    nd::Tape t;
    model::Ctx c{t, m.params()};
    return m.forward(c, a.image, mel).logits.value();
  };

  harness::RunConfig none = cfg;
  none.model.backbone.inject_at = {};
  model::Model m0 = harness::make_model(none);
  const bool audio_free = logits(m0, mel_a) == logits(m0, mel_b);

  harness::RunConfig g0 = cfg;
  g0.model.aqm.gamma = 0.0;
  model::Model m1 = harness::make_model(g0);
  const nd::Array with_first = logits(m1, mel_a);
  bank::PrototypeBank other = *m1.bank();
  Rng rng(5);
  for (double& v : other.prototypes.values()) v = rng.normal();
  m1.set_bank(other);
  const bool bank_free = with_first == logits(m1, mel_a);

  harness::RunConfig nocon = cfg;
  nocon.loss.con = 0.0;
  nocon.optim.steps = 2;
  nocon.data.train = 16;
  nocon.data.val = 5;
  nocon.log.eval_subset = 5;
  model::Model m2 = harness::make_model(nocon);
  const auto tr = harness::train_split(nocon), va = harness::val_split(nocon);
  counters().reset();
  harness::train(m2, tr, va, nocon);
  harness::evaluate(m2, va);
  const std::uint64_t ops = counters().augment_calls + counters().projection_calls + counters().contrastive_calls;
  const double secs = seconds_since(t0);
  report("5", audio_free && bank_free && ops == 0 && secs < 10, "structural isolation",
         std::string("empty schedule audio-invariant ") + (audio_free ? "yes" : "NO") + ", gamma=0 bank-invariant " +
             (bank_free ? "yes" : "NO") + ", con=0 augment/COM ops " + std::to_string(ops) +
             fmt(", %.2f s (< 10 s)", secs));
}

// ---- 6 ---------------------------------------------------------------------
void bank_construction() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(6);
  nd::Array pts({400, 4});
  const double centre[2][4] = {{0, 0, 0, 0}, {2, -1, 1, 3}};
  for (std::size_t i = 0; i < 400; ++i)
    for (std::size_t j = 0; j < 4; ++j) pts(i, j) = centre[i % 2][j] + 0.1 * rng.normal();
  const auto km = bank::kmeans_pp(pts, 2, 6);
  double err = 0.0;
  for (int b = 0; b < 2; ++b) {
    double best = 1e300;
    for (std::size_t k = 0; k < 2; ++k) {
      double d = 0;
      for (std::size_t j = 0; j < 4; ++j) d += std::pow(km.centroids(k, j) - centre[b][j], 2);
      best = std::min(best, std::sqrt(d));
    }
    err = std::max(err, best);
  }

  harness::RunConfig cfg;
  cfg.optim.steps = 1;
  cfg.optim.batch = 2;
  cfg.data.train = 4;
  cfg.data.val = 2;
  cfg.log.eval_subset = 0;
  model::Model m = harness::make_model(cfg);
  const fs::path p = fs::temp_directory_path() / "ddavs_acceptance_bank.davb";
  bank::save_bank(*m.bank(), p);
  const bool round_trip = bank::load_bank(p) == *m.bank();

  const bank::PrototypeBank before = *m.bank();
  harness::train(m, harness::train_split(cfg), harness::val_split(cfg), cfg);
  bool no_param = true;
  for (const auto& [name, prm] : m.params().all()) {
    if (prm.value.shape() == before.prototypes.shape()) {
      no_param = no_param && !(prm.value == before.prototypes);
    }
  }
  nd::Tape t;
  model::Ctx c{t, m.params()};
  const auto sc = harness::generate_scene(cfg.scene_spec(), 61);
  const auto out = m.forward(c, sc.image, audio::log_mel_spectrogram(sc.waveform, cfg.model.mel));
  t.backward(nd::sum(out.logits));
  std::size_t bank_grads = 0;
  for (std::size_t id = 0; id < t.size(); ++id) {
    if (t.value(static_cast<std::int32_t>(id)) == before.prototypes && t.has_grad(static_cast<std::int32_t>(id))) {
      ++bank_grads;
    }
  }
  const bool untouched = *m.bank() == before;
  const double secs = seconds_since(t0);
  report("6", err < 0.1 && round_trip && untouched && no_param && bank_grads == 0 && secs < 5, "bank construction",
         fmt("blob mean err %.4f (< 0.1), round trip ", err) + (round_trip ? "bit-exact" : "DIFFERS") +
             ", bank after step " + (untouched ? "unchanged" : "CHANGED") + ", bank grads " +
             std::to_string(bank_grads) + fmt(", %.2f s (< 5 s)", secs));
}

// ---- 7-9 -------------------------------------------------------------------
struct Trained {
  harness::Report report;
  double seconds = 0.0;
  std::optional<harness::Checkpoint> at_200;
};

Trained run(const harness::RunConfig& cfg, bool keep_200) {
  const auto t0 = std::chrono::steady_clock::now();
  Trained out;
  harness::RunConfig c = cfg;
  harness::TrainHooks hooks;
  if (keep_200) {
    c.log.checkpoint_every = 200;
    hooks.on_checkpoint = [&](const harness::Checkpoint& ck) {
      if (ck.step == 200) out.at_200 = ck;
    };
  }
  out.report = harness::train_and_evaluate(c, hooks).report;
  out.seconds = seconds_since(t0);
  return out;
}

double jf_of(const harness::Report& r, const char* name) {
  const auto* row = r.find(name);
  return row ? row->jf : 0.0;
}

double fg_of(const harness::Report& r, const char* name) {
  const auto* row = r.find(name);
  return row ? row->fg_fraction : 0.0;
}

json report_json(const harness::Report& r) {
  json j;
  for (const auto& row : r.rows) j[row.scenario] = {{"jf", row.jf}, {"fg", row.fg_fraction}};
  return j;
}

// Mean clean/augmented similarity on matching minus non-matching query indices.
double contrastive_margin(const harness::Checkpoint& ck, const harness::RunConfig& cfg) {
  model::Model m = harness::make_model(cfg);
  harness::restore(ck, m.params());
  const auto held = harness::make_split(cfg, 40, derive_seed(cfg.seed, 77));
  double total = 0.0;
  for (std::size_t i = 0; i < held.size(); ++i) {
    const auto aug = harness::augmented_log_mel(held.scenes[i], cfg, derive_seed(cfg.seed, 78, i));
    nd::Tape t;
    model::Ctx c{t, m.params()};
    const auto zc = model::project_normalize(c, cfg.model.com, m.queries(c, held.mels[i])).vectors.value();
    const auto za = model::project_normalize(c, cfg.model.com, m.queries(c, aug)).vectors.value();
    const std::size_t n = zc.rows();
    double diag = 0, off = 0;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) {
        double s = 0;
        for (std::size_t k = 0; k < zc.cols(); ++k) s += zc(a, k) * za(b, k);
        (a == b ? diag : off) += s;
      }
    total += diag / static_cast<double>(n) - (n > 1 ? off / static_cast<double>(n * (n - 1)) : 0.0);
  }
  return total / static_cast<double>(held.size());
}

void learning_and_ablation(const Thresholds& th, const std::set<int>& want) {
  const harness::RunConfig cfg;
  const Trained full = run(cfg, true);
  measured["default"] = report_json(full.report);
  measured["default_seconds"] = full.seconds;
  const double single = jf_of(full.report, "single"), overall = full.report.overall().jf;
  if (want.count(7)) {
    report("7", single >= th.single_jf_min && overall >= th.overall_jf_min && full.seconds < th.train_seconds,
           "desk-scale learning",
           fmt("single J&F %.4f (>= %.2f), overall %.4f (>= %.2f), %.0f s", single, th.single_jf_min, overall,
               th.overall_jf_min, full.seconds));
  }
  if (want.count(9)) {
    const double off = fg_of(full.report, "off_screen"), on = fg_of(full.report, "single");
    const double ratio = on > 0 ? off / on : INFINITY;
    measured["offscreen_fg_ratio"] = ratio;
    report("9", ratio <= th.offscreen_fg_ratio_max, "off-screen suppression",
           fmt("fg off_screen %.4f / single %.4f = %.3f (<= %.2f)", off, on, ratio, th.offscreen_fg_ratio_max));
  }
  if (want.count(8)) {
    harness::RunConfig base = cfg;
    base.model.backbone.inject_at = {};
    base.model.use_bank = false;
    base.loss.con = 0.0;
    harness::RunConfig s1 = cfg;
    s1.model.backbone.inject_at = {1};
    const Trained b = run(base, false), one = run(s1, false);
    measured["baseline"] = report_json(b.report);
    measured["schedule_1"] = report_json(one.report);
    const double margin = overall - b.report.overall().jf;
    const double s1jf = one.report.overall().jf;
    report("8", margin >= th.ablation_margin_min && overall >= s1jf, "ablation directionality",
           fmt("full %.4f vs baseline %.4f (+%.2f pts, >= %.0f); {3,4} %.4f vs {1} %.4f (need >=)", overall,
               b.report.overall().jf, 100 * margin, 100 * th.ablation_margin_min, overall, s1jf));
  }
  if (full.at_200) {
    const double margin = contrastive_margin(*full.at_200, cfg);
    measured["com_margin_step200"] = margin;
    report("aux", margin > th.com_margin_min, "contrastive margin at step 200",
           fmt("mean s_ii - s_ij %.4f (> %.2f)", margin, th.com_margin_min));
  }
}

// ---- 10 --------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

void determinism(const Thresholds& th) {
  const auto t0 = std::chrono::steady_clock::now();
  harness::RunConfig cfg;
  cfg.seed = 1;
  cfg.optim.steps = th.determinism_steps;
  cfg.log.eval_every = 10;
  std::string ck[2], logs[2], reps[2];
  for (int r = 0; r < 2; ++r) {
    std::string log = harness::log_header() + "\n";
    harness::TrainHooks hooks;
    hooks.on_step = [&](const harness::LogRow& row) { log += harness::log_line(row) + "\n"; };
    const auto out = harness::train_and_evaluate(cfg, hooks);
    const fs::path p = fs::temp_directory_path() / ("ddavs_acceptance_det_" + std::to_string(r) + ".davc");
    harness::save_checkpoint(out.trained.checkpoint, p);
    ck[r] = slurp(p);
    logs[r] = log;
    reps[r] = harness::report_csv(out.report);
  }
  const bool same = ck[0] == ck[1] && logs[0] == logs[1] && reps[0] == reps[1];
  report("10", same, "determinism",
         std::string("checkpoints ") + (ck[0] == ck[1] ? "identical" : "DIFFER") + fmt(" (%.0f bytes), ", static_cast<double>(ck[0].size())) +
             "logs " + (logs[0] == logs[1] ? "identical" : "DIFFER") + ", reports " +
             (reps[0] == reps[1] ? "identical" : "DIFFER") + fmt(", %.0f s", seconds_since(t0)));
}

void untrained_bound(const Thresholds& th) {
  double worst = 0.0;
  json vals = json::array();
  for (std::uint64_t s = 0; s < 5; ++s) {
    harness::RunConfig cfg;
    cfg.seed = s;
    model::Model m = harness::make_model(cfg);
    const double jf = harness::evaluate(m, single_split(cfg, 20, derive_seed(s, 2))).overall().jf;
    vals.push_back(jf);
    worst = std::max(worst, jf);
  }
  measured["untrained_single_jf"] = vals;
  report("aux", worst < th.untrained_single_jf_max, "untrained single-source J&F",
         fmt("max over 5 seeds %.4f (< %.2f)", worst, th.untrained_single_jf_max));
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> want;
  std::optional<fs::path> calibrate;
  fs::path fixture = DDAVS_FIXTURE_DIR "/calibration.json";
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--calibrate") && i + 1 < argc) {
      calibrate = argv[++i];
    } else if (!std::strcmp(argv[i], "--fixture") && i + 1 < argc) {
      fixture = argv[++i];
    } else {
      want.insert(std::atoi(argv[i]));
    }
  }
  if (want.empty()) want = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  try {
    const Thresholds th = load_thresholds(fixture);
    if (want.count(1)) gradient_fidelity(th);
    if (want.count(2)) loss_oracles();
    if (want.count(3)) infonce_analytics();
    if (want.count(4)) softmax_rows();
    if (want.count(5)) structural_isolation();
    if (want.count(6)) bank_construction();
    if (want.count(7) || want.count(8) || want.count(9)) learning_and_ablation(th, want);
    if (want.count(10)) determinism(th);
    if (want.count(7)) untrained_bound(th);
  } catch (const std::exception& e) {
    std::printf("FAIL  acceptance aborted: %s\n", e.what());
    return 1;
  }
  if (calibrate) std::ofstream(*calibrate) << measured.dump(2) << "\n";
  std::printf("%d failing\n", failures);
  return failures == 0 ? 0 : 1;
}
