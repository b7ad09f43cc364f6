#include "ddavs/harness/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "ddavs/error.hpp"

namespace ddavs::harness {

using nlohmann::json;

namespace {

// Reads the keys of one JSON object and rejects any it was not asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ParameterError("config: '" + where() + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ParameterError("config: '" + where(key) + "' has the wrong type");
    }
  }

  Section sub(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    auto it = j_.find(key);
    return Section(it == j_.end() ? empty : *it, where(key));
  }

  void range(const char* key, audio::Range& r) {
    std::vector<double> v{r.lo, r.hi};
    get(key, v);
    if (v.size() != 2) throw ParameterError("config: '" + where(key) + "' must be [low, high]");
    r = {v[0], v[1]};
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ParameterError("config: unknown key '" + where(it.key()) + "'");
    }
  }

 private:
  std::string where(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string decoder_name(model::DecoderKind k) {
  return k == model::DecoderKind::Fused ? "fused" : "linear";
}

std::string schedule_name(LrSchedule s) { return s == LrSchedule::Cosine ? "cosine" : "constant"; }

}  // namespace

void RunConfig::validate() const {
  model.validate();
  loss.validate();
  augment.validate();
  if (optim.batch == 0) throw ParameterError("batch size must be positive");
  if (!(optim.lr > 0.0) || !(optim.weight_decay >= 0.0)) throw ParameterError("bad optimiser step size or decay");
  if (!(optim.beta1 >= 0.0 && optim.beta1 < 1.0 && optim.beta2 >= 0.0 && optim.beta2 < 1.0)) {
    throw ParameterError("optimiser betas must lie in [0, 1)");
  }
  if (!(optim.eps > 0.0) || !(optim.clip_norm >= 0.0)) throw ParameterError("bad optimiser eps or clip norm");
  if (data.train == 0) throw ParameterError("training split is empty");
  if (data.image_size != model.backbone.image_size) {
    throw ParameterError("data image size " + std::to_string(data.image_size) +
                         " differs from model image size " + std::to_string(model.backbone.image_size));
  }
  if (data.classes < 2 || data.classes > 4) {
    throw ParameterError("data classes must lie in [2, 4] so off-screen scenes have a hidden class");
  }
  if (bank.k_per_class == 0 || bank.m_nearest == 0 || bank.clips_per_class < bank.k_per_class) {
    throw ParameterError("bank needs k, m >= 1 and at least k clips per class");
  }
}

SceneSpec RunConfig::scene_spec() const {
  SceneSpec s;
  s.image_size = data.image_size;
  s.classes = data.classes;
  s.duration_s = data.duration_s;
  return s;
}

RunConfig config_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
  RunConfig c;
  Section r(root, "");
  r.get("seed", c.seed);
  r.get("bank_path", c.bank_path);
  r.get("out_dir", c.out_dir);

  Section m = r.sub("model");
  m.get("d", c.model.d);
  c.model.aqm.d = c.model.d;
  m.get("n_queries", c.model.aqm.n_queries);
  m.get("gamma", c.model.aqm.gamma);
  m.get("qg_layers", c.model.aqm.layers);
  m.get("qg_heads", c.model.aqm.heads);
  m.get("qg_ffn", c.model.aqm.ffn_hidden);
  m.get("use_bank", c.model.use_bank);
  m.get("tau", c.model.com.tau);
  m.get("d_proj", c.model.com.d_proj);
  m.get("symmetric_con", c.model.com.symmetric);
  std::vector<int> inject(c.model.backbone.inject_at.begin(), c.model.backbone.inject_at.end());
  m.get("inject_at", inject);
  c.model.backbone.inject_at = {inject.begin(), inject.end()};
  m.get("widths", c.model.backbone.widths);
  m.get("depths", c.model.backbone.depths);
  m.get("heads", c.model.backbone.heads);
  m.get("patch", c.model.backbone.patch);
  m.get("literal_cab", c.model.backbone.literal_cab);
  std::string decoder = decoder_name(c.model.backbone.decoder);
  m.get("decoder", decoder);
  if (decoder == "fused") {
    c.model.backbone.decoder = model::DecoderKind::Fused;
  } else if (decoder == "linear") {
    c.model.backbone.decoder = model::DecoderKind::Linear;
  } else {
    throw ParameterError("config: model.decoder must be 'fused' or 'linear'");
  }
  m.get("d_dec", c.model.backbone.d_dec);
  m.get("n_mels", c.model.mel.n_mels);
  m.get("win", c.model.mel.win);
  m.get("hop", c.model.mel.hop);
  m.finish();

  Section l = r.sub("loss");
  l.get("ce", c.loss.ce);
  l.get("focal", c.loss.focal);
  l.get("dice", c.loss.dice);
  l.get("iou", c.loss.iou);
  l.get("con", c.loss.con);
  l.get("focal_gamma", c.loss.focal_gamma);
  l.get("focal_alpha", c.loss.focal_alpha);
  l.finish();

  Section o = r.sub("optim");
  o.get("lr", c.optim.lr);
  o.get("weight_decay", c.optim.weight_decay);
  o.get("beta1", c.optim.beta1);
  o.get("beta2", c.optim.beta2);
  o.get("eps", c.optim.eps);
  o.get("batch", c.optim.batch);
  o.get("steps", c.optim.steps);
  o.get("warmup", c.optim.warmup);
  std::string sched = schedule_name(c.optim.schedule);
  o.get("schedule", sched);
  if (sched == "cosine") {
    c.optim.schedule = LrSchedule::Cosine;
  } else if (sched == "constant") {
    c.optim.schedule = LrSchedule::Constant;
  } else {
    throw ParameterError("config: optim.schedule must be 'cosine' or 'constant'");
  }
  o.get("clip_norm", c.optim.clip_norm);
  o.finish();

  Section d = r.sub("data");
  d.get("train", c.data.train);
  d.get("val", c.data.val);
  d.get("image_size", c.data.image_size);
  c.model.backbone.image_size = c.data.image_size;
  d.get("classes", c.data.classes);
  d.get("duration_s", c.data.duration_s);
  d.finish();

  Section b = r.sub("bank");
  b.get("clips_per_class", c.bank.clips_per_class);
  b.get("k_per_class", c.bank.k_per_class);
  b.get("m_nearest", c.bank.m_nearest);
  b.get("centroid_rows", c.bank.centroid_rows);
  b.finish();

  Section a = r.sub("augment");
  a.range("reverb", c.augment.reverb_range);
  a.range("pitch_cents", c.augment.pitch_cents_range);
  a.range("snr_db", c.augment.snr_db_range);
  a.range("gain_db", c.augment.gain_jitter_db_range);
  a.finish();

  Section g = r.sub("log");
  g.get("eval_every", c.log.eval_every);
  g.get("eval_subset", c.log.eval_subset);
  g.get("checkpoint_every", c.log.checkpoint_every);
  g.finish();

  r.finish();
  c.validate();
  return c;
}

std::string config_to_json(const RunConfig& c) {
  const auto& bb = c.model.backbone;
  json j;
  j["seed"] = c.seed;
  j["bank_path"] = c.bank_path;
  j["out_dir"] = c.out_dir;
  j["model"] = {{"d", c.model.d},
                {"n_queries", c.model.aqm.n_queries},
                {"gamma", c.model.aqm.gamma},
                {"qg_layers", c.model.aqm.layers},
                {"qg_heads", c.model.aqm.heads},
                {"qg_ffn", c.model.aqm.ffn_hidden},
                {"use_bank", c.model.use_bank},
                {"tau", c.model.com.tau},
                {"d_proj", c.model.com.d_proj},
                {"symmetric_con", c.model.com.symmetric},
                {"inject_at", std::vector<int>(bb.inject_at.begin(), bb.inject_at.end())},
                {"widths", bb.widths},
                {"depths", bb.depths},
                {"heads", bb.heads},
                {"patch", bb.patch},
                {"literal_cab", bb.literal_cab},
                {"decoder", decoder_name(bb.decoder)},
                {"d_dec", bb.d_dec},
                {"n_mels", c.model.mel.n_mels},
                {"win", c.model.mel.win},
                {"hop", c.model.mel.hop}};
  j["loss"] = {{"ce", c.loss.ce},     {"focal", c.loss.focal},
               {"dice", c.loss.dice}, {"iou", c.loss.iou},
               {"con", c.loss.con},   {"focal_gamma", c.loss.focal_gamma},
               {"focal_alpha", c.loss.focal_alpha}};
  j["optim"] = {{"lr", c.optim.lr},         {"weight_decay", c.optim.weight_decay},
                {"beta1", c.optim.beta1},   {"beta2", c.optim.beta2},
                {"eps", c.optim.eps},       {"batch", c.optim.batch},
                {"steps", c.optim.steps},   {"warmup", c.optim.warmup},
                {"schedule", schedule_name(c.optim.schedule)},
                {"clip_norm", c.optim.clip_norm}};
  j["data"] = {{"train", c.data.train},
               {"val", c.data.val},
               {"image_size", c.data.image_size},
               {"classes", c.data.classes},
               {"duration_s", c.data.duration_s}};
  j["bank"] = {{"clips_per_class", c.bank.clips_per_class},
               {"k_per_class", c.bank.k_per_class},
               {"m_nearest", c.bank.m_nearest},
               {"centroid_rows", c.bank.centroid_rows}};
  auto pair = [](const audio::Range& r) { return std::vector<double>{r.lo, r.hi}; };
  j["augment"] = {{"reverb", pair(c.augment.reverb_range)},
                  {"pitch_cents", pair(c.augment.pitch_cents_range)},
                  {"snr_db", pair(c.augment.snr_db_range)},
                  {"gain_db", pair(c.augment.gain_jitter_db_range)}};
  j["log"] = {{"eval_every", c.log.eval_every},
              {"eval_subset", c.log.eval_subset},
              {"checkpoint_every", c.log.checkpoint_every}};
  return j.dump(2);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ParameterError("config file " + path.string() + " not found");
  std::stringstream ss;
  ss << f.rdbuf();
  return config_from_json(ss.str());
}

RunConfig full_scale_preset() {
  RunConfig c;
  c.optim.lr = 1e-4;
  c.optim.batch = 64;
  return c;
}

}  // namespace ddavs::harness
