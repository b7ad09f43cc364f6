#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ddavs/audio/augment.hpp"
#include "ddavs/audio/features.hpp"
#include "ddavs/audio/synth.hpp"
#include "ddavs/bank/bank.hpp"
#include "ddavs/bank/kmeans.hpp"
#include "ddavs/error.hpp"
#include "ddavs/harness/train.hpp"
#include "ddavs/instrument.hpp"
#include "ddavs/loss/losses.hpp"
#include "ddavs/loss/metrics.hpp"
#include "ddavs/random.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace ddavs;

namespace {

using NpArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

nd::Array to_array(const NpArray& a) {
  nd::Shape shape(a.shape(), a.shape() + a.ndim());
  return nd::Array(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

NpArray to_numpy(const nd::Array& a) {
  std::vector<py::ssize_t> shape(a.shape().begin(), a.shape().end());
  NpArray out(shape);
  std::copy(a.values().begin(), a.values().end(), out.mutable_data());
  return out;
}

NpArray to_numpy(const std::vector<double>& v) {
  NpArray out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

audio::Waveform to_waveform(const NpArray& samples, int sample_rate) {
  if (samples.ndim() != 1) throw DimensionError("waveform must be one-dimensional");
  audio::Waveform w;
  w.sample_rate = sample_rate;
  w.samples.assign(samples.data(), samples.data() + samples.size());
  return w;
}

harness::RunConfig parse_config(const std::string& json) {
  harness::RunConfig cfg = json.empty() ? harness::RunConfig{} : harness::config_from_json(json);
  cfg.validate();
  return cfg;
}

double scalar_loss(nd::Var (*fn)(nd::Var, const nd::Array&), const NpArray& p, const NpArray& gt) {
  nd::Tape t;
  return fn(t.constant(to_array(p)), to_array(gt)).item();
}

py::dict report_dict(const harness::Report& r) {
  py::dict out;
  for (const auto& row : r.rows) {
    out[py::str(row.scenario)] =
        py::dict("count"_a = row.count, "j"_a = row.j, "f"_a = row.f, "jf"_a = row.jf, "fg_fraction"_a = row.fg_fraction);
  }
  return out;
}

py::dict scene_dict(const harness::Scene& sc) {
  py::list sources;
  for (const auto& s : sc.sources) {
    sources.append(py::dict("class_id"_a = s.class_id, "cx"_a = s.cx, "cy"_a = s.cy, "radius"_a = s.radius,
                            "sounding"_a = s.sounding, "on_screen"_a = s.on_screen));
  }
  return py::dict("scenario"_a = std::string(harness::scenario_name(sc.scenario)), "image"_a = to_numpy(sc.image),
                  "gt"_a = to_numpy(sc.gt), "waveform"_a = to_numpy(sc.waveform.samples), "sources"_a = sources);
}

/// A model bound to its run configuration, with the bank attached.
struct PyModel {
  harness::RunConfig cfg;
  model::Model model;

  explicit PyModel(const harness::RunConfig& c) : cfg(c), model(harness::make_model(c)) {}

  NpArray predict(const NpArray& image, const NpArray& waveform) {
    harness::Scene sc;
    sc.image = to_array(image);
    sc.waveform = to_waveform(waveform, audio::kSampleRate);
    return to_numpy(harness::predict(model, sc, audio::log_mel_spectrogram(sc.waveform, cfg.model.mel)));
  }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Audio-visual segmentation core: features, prototype bank, losses, model and harness.";

  auto base = py::register_exception<Error>(m, "DdavsError", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<EvaluationError>(m, "EvaluationError", base.ptr());
  py::register_exception<InsufficientDataError>(m, "InsufficientDataError", base.ptr());
  py::register_exception<DecodeError>(m, "DecodeError", base.ptr());

  m.attr("SAMPLE_RATE") = audio::kSampleRate;

  // audio
  m.def("synth_waveform", [](int c, std::uint64_t seed, double dur) { return to_numpy(audio::synth_waveform(c, seed, dur).samples); },
        "class_id"_a, "seed"_a, "duration_s"_a = 1.0);
  m.def(
      "log_mel",
      [](const NpArray& w, int n_mels, int win, int hop) {
        audio::MelConfig cfg;
        cfg.n_mels = n_mels;
        cfg.win = win;
        cfg.hop = hop;
        return to_numpy(audio::log_mel_spectrogram(to_waveform(w, audio::kSampleRate), cfg));
      },
      "waveform"_a, "n_mels"_a = 32, "win"_a = 400, "hop"_a = 160, "Log-mel matrix, frames x mels.");
  m.def(
      "augment",
      [](const NpArray& w, std::uint64_t seed) {
        audio::AugmentConfig cfg;
        cfg.seed = seed;
        audio::AugmentRecord rec;
        const auto out = audio::augment_chain(to_waveform(w, audio::kSampleRate), cfg, &rec);
        return py::make_tuple(to_numpy(out.samples),
                              py::dict("reverb"_a = rec.reverb, "pitch_cents"_a = rec.pitch_cents,
                                       "snr_db"_a = rec.snr_db, "gain_db"_a = rec.gain_db));
      },
      "waveform"_a, "seed"_a, "Augmented copy and the drawn effect parameters.");

  // bank
  m.def(
      "kmeans",
      [](const NpArray& pts, std::size_t k, std::uint64_t seed) {
        const auto r = bank::kmeans_pp(to_array(pts), k, seed);
        return py::dict("centroids"_a = to_numpy(r.centroids), "assignments"_a = r.assignments,
                        "inertia"_a = r.inertia, "inertia_history"_a = r.inertia_history, "iterations"_a = r.iterations);
      },
      "points"_a, "k"_a, "seed"_a = 0);

  py::class_<bank::PrototypeBank>(m, "PrototypeBank")
      .def_property_readonly("prototypes", [](const bank::PrototypeBank& b) { return to_numpy(b.prototypes); })
      .def_readonly("class_of", &bank::PrototypeBank::class_of)
      .def_readonly("per_class_counts", &bank::PrototypeBank::per_class_counts)
      .def_readonly("classes", &bank::PrototypeBank::classes)
      .def("__len__", &bank::PrototypeBank::size)
      .def("__eq__", [](const bank::PrototypeBank& a, const bank::PrototypeBank& b) { return a == b; })
      .def_property_readonly("dim", &bank::PrototypeBank::dim);
  m.def(
      "build_bank",
      [](const std::vector<NpArray>& per_class, std::size_t k, std::size_t m_nearest, std::uint64_t seed) {
        std::vector<bank::EmbeddingSet> sets;
        for (std::size_t c = 0; c < per_class.size(); ++c) sets.push_back({c, to_array(per_class[c])});
        bank::BankOptions o;
        o.k_per_class = k;
        o.m_nearest = m_nearest;
        o.seed = seed;
        return bank::build_bank(sets, o);
      },
      "embeddings"_a, "k_per_class"_a = 4, "m_nearest"_a = 3, "seed"_a = 0,
      "embeddings[c] holds class c's rows.");
  m.def("save_bank", [](const bank::PrototypeBank& b, const std::string& p) { return bank::save_bank(b, p); });
  m.def("load_bank", [](const std::string& p) { return bank::load_bank(p); });

  // losses and metrics
  m.def("ce_loss", [](const NpArray& p, const NpArray& y) { return scalar_loss(loss::ce_loss, p, y); });
  m.def(
      "focal_loss",
      [](const NpArray& p, const NpArray& y, double gamma, double alpha) {
        nd::Tape t;
        return loss::focal_loss(t.constant(to_array(p)), to_array(y), gamma, alpha).item();
      },
      "p"_a, "gt"_a, "gamma"_a = 2.0, "alpha"_a = 0.25);
  m.def(
      "dice_loss",
      [](const NpArray& p, const NpArray& y, double eps) {
        nd::Tape t;
        return loss::dice_loss(t.constant(to_array(p)), to_array(y), eps).item();
      },
      "p"_a, "gt"_a, "eps"_a = loss::kEps);
  m.def(
      "iou_loss",
      [](const NpArray& p, const NpArray& y, double eps) {
        nd::Tape t;
        return loss::iou_loss(t.constant(to_array(p)), to_array(y), eps).item();
      },
      "p"_a, "gt"_a, "eps"_a = loss::kEps);
  m.def("jaccard", [](const NpArray& p, const NpArray& y) { return loss::jaccard(to_array(p), to_array(y)); });
  m.def(
      "f_score", [](const NpArray& p, const NpArray& y, double b2) { return loss::f_score(to_array(p), to_array(y), b2); },
      "pred"_a, "gt"_a, "beta2"_a = loss::kBeta2);
  m.def("jf", [](const NpArray& p, const NpArray& y) { return loss::jf(to_array(p), to_array(y)); });
  m.def(
      "info_nce",
      [](const NpArray& a, const NpArray& b, double tau, bool symmetric) {
        nd::Tape t;
        return model::info_nce(t.constant(to_array(a)), t.constant(to_array(b)), tau, symmetric).item();
      },
      "z_clean"_a, "z_aug"_a, "tau"_a = 0.07, "symmetric"_a = false, "Expects unit rows.");

  // harness
  m.def("default_config", [] { return harness::config_to_json(harness::RunConfig{}); });
  m.def("load_config", [](const std::string& p) { return harness::config_to_json(harness::load_config(p)); });
  m.def("validate_config", [](const std::string& j) { return harness::config_to_json(parse_config(j)); }, "config_json"_a);
  m.def(
      "generate_scene",
      [](const std::string& scenario, std::uint64_t seed, std::size_t size, int classes) {
        harness::SceneSpec s;
        s.scenario = harness::parse_scenario(scenario);
        s.image_size = size;
        s.classes = classes;
        return scene_dict(harness::generate_scene(s, seed));
      },
      "scenario"_a, "seed"_a, "image_size"_a = 64, "classes"_a = 4);

  py::class_<PyModel>(m, "Model")
      .def(py::init([](const std::string& j) { return std::make_unique<PyModel>(parse_config(j)); }), "config_json"_a = "")
      .def("predict", &PyModel::predict, "image"_a, "waveform"_a, "Foreground probabilities at image size.")
      .def_property_readonly("parameter_count", [](const PyModel& p) { return p.model.params().scalar_count(); })
      .def_property_readonly("bank", [](const PyModel& p) -> py::object {
        return p.model.bank() ? py::cast(*p.model.bank()) : py::none();
      })
      .def("load_checkpoint", [](PyModel& p, const std::string& path) {
        harness::restore(harness::load_checkpoint(path), p.model.params());
      })
      .def("evaluate", [](PyModel& p, const std::string& split) {
        const auto data = split == "train" ? harness::train_split(p.cfg) : harness::val_split(p.cfg);
        return report_dict(harness::evaluate(p.model, data));
      }, "split"_a = "val")
      .def("grad_check", [](PyModel& p, std::size_t coords, std::uint64_t seed) {
        harness::SceneSpec s = p.cfg.scene_spec();
        s.scenario = harness::Scenario::MultiClass;
        const auto sc = harness::generate_scene(s, derive_seed(seed, 99));
        return harness::model_grad_check(p.model, sc, audio::log_mel_spectrogram(sc.waveform, p.cfg.model.mel),
                                         p.cfg, 1e-5, coords, seed).max_error;
      }, "coords_per_tensor"_a = 2, "seed"_a = 0);

  m.def(
      "train",
      [](const std::string& j, const std::string& checkpoint_path, const std::function<void(py::dict)>& on_step) {
        const auto cfg = parse_config(j);
        harness::TrainHooks hooks;
        py::list log;
        hooks.on_step = [&](const harness::LogRow& r) {
          py::dict row("step"_a = r.step, "lr"_a = r.lr, "total"_a = r.total, "ce"_a = r.ce, "focal"_a = r.focal,
                       "dice"_a = r.dice, "iou"_a = r.iou, "con"_a = r.con,
                       "val_jf"_a = r.val_jf ? py::cast(*r.val_jf) : py::none());
          log.append(row);
          if (on_step) on_step(row);
        };
        const auto out = harness::train_and_evaluate(cfg, hooks);
        if (!checkpoint_path.empty()) harness::save_checkpoint(out.trained.checkpoint, checkpoint_path);
        return py::make_tuple(log, report_dict(out.report));
      },
      "config_json"_a = "", "checkpoint_path"_a = "", "on_step"_a = nullptr,
      "Trains, scores the validation split and returns (log rows, report).");

  m.def("counters", [] {
    const auto& c = counters();
    return py::dict("augment_calls"_a = c.augment_calls.load(), "projection_calls"_a = c.projection_calls.load(),
                    "contrastive_calls"_a = c.contrastive_calls.load());
  });
  m.def("reset_counters", [] { counters().reset(); });
}
