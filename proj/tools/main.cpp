#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ddavs/audio/augment.hpp"
#include "ddavs/audio/synth.hpp"
#include "ddavs/error.hpp"
#include "ddavs/harness/train.hpp"
#include "ddavs/instrument.hpp"
#include "ddavs/random.hpp"

namespace fs = std::filesystem;
using namespace ddavs;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

harness::RunConfig resolve(const Globals& g) {
  harness::RunConfig cfg = g.config_path.empty() ? harness::RunConfig{} : harness::load_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
  cfg.validate();
  return cfg;
}

fs::path out_path(const harness::RunConfig& cfg, const fs::path& name) {
  fs::create_directories(cfg.out_dir);
  return fs::path(cfg.out_dir) / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + p.string());
  f << text;
}

/// Binary PPM (channels 3) or PGM (channels 1) from values in [0, 1].
void write_pnm(const fs::path& p, const nd::Array& a, std::size_t channels) {
  const std::size_t h = a.shape()[0], w = a.shape()[1];
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + p.string());
  f << (channels == 3 ? "P6" : "P5") << "\n" << w << " " << h << "\n255\n";
  for (double v : a.values()) {
    f.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
  }
}

/// Image, ground truth and prediction side by side as one RGB image.
nd::Array triptych(const harness::Scene& sc, const nd::Array& pred) {
  const std::size_t h = sc.image.shape()[0], w = sc.image.shape()[1];
  nd::Array out({h, 3 * w, 3});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        out[(y * 3 * w + x) * 3 + c] = sc.image[(y * w + x) * 3 + c];
        out[(y * 3 * w + w + x) * 3 + c] = sc.gt[y * w + x];
        out[(y * 3 * w + 2 * w + x) * 3 + c] = pred[y * w + x];
      }
    }
  }
  return out;
}

model::Model model_from_checkpoint(const fs::path& path, harness::RunConfig& cfg) {
  const harness::Checkpoint ck = harness::load_checkpoint(path);
  harness::RunConfig stored = harness::config_from_json(ck.config_json);
  stored.out_dir = cfg.out_dir;
  cfg = stored;
  model::Model m = harness::make_model(cfg);
  harness::restore(ck, m.params());
  return m;
}

std::string sweep_header() { return "setting,j,f,jf,single_jf,off_screen_fg,single_fg\n"; }

std::string sweep_row(const std::string& label, const harness::Report& r) {
  const auto* single = r.find("single");
  const auto* off = r.find("off_screen");
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", label.c_str(), r.overall().j,
                r.overall().f, r.overall().jf, single ? single->jf : 0.0, off ? off->fg_fraction : 0.0,
                single ? single->fg_fraction : 0.0);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ddavs: audio-visual segmentation on synthetic scenes"};
  app.require_subcommand(1);
  Globals g;
  auto add_globals = [&](CLI::App* sub) {
    sub->add_option("--config", g.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", g.seed, "Override the run seed");
    sub->add_option("--out-dir", g.out_dir, "Directory for every output");
  };

  // synth generate
  auto* synth = app.add_subcommand("synth", "Synthetic data");
  synth->require_subcommand(1);
  auto* gen = synth->add_subcommand("generate", "Write scenes as PPM/PGM/WAV");
  add_globals(gen);
  std::string scenario = "all";
  std::size_t count = 5;
  gen->add_option("--scenario", scenario, "Scenario name or 'all'");
  gen->add_option("--count", count, "Number of scenes");

  // bank build / inspect
  auto* bankc = app.add_subcommand("bank", "Prototype bank");
  bankc->require_subcommand(1);
  auto* bbuild = bankc->add_subcommand("build", "Cluster per-class embeddings into a .davb file");
  add_globals(bbuild);
  std::string emb_dir, bank_out = "bank.davb";
  bool emit = false;
  bbuild->add_option("--embeddings", emb_dir, "Directory of class_<id>.txt embedding files");
  bbuild->add_flag("--emit-embeddings", emit, "Also write the model's embeddings to --out-dir");
  bbuild->add_option("--output", bank_out, "Bank file name under --out-dir");
  auto* binspect = bankc->add_subcommand("inspect", "Summarise a .davb file");
  add_globals(binspect);
  std::string bank_file;
  binspect->add_option("bank", bank_file, "Bank file")->required();

  // train / eval
  auto* trainc = app.add_subcommand("train", "Train and write log.csv plus final.davc");
  add_globals(trainc);
  std::optional<std::size_t> steps;
  trainc->add_option("--steps", steps, "Override the optimiser step count");
  bool quiet = false;
  trainc->add_flag("--quiet", quiet, "Suppress per-step progress");

  auto* evalc = app.add_subcommand("eval", "Score a checkpoint and write report.csv");
  add_globals(evalc);
  std::string ckpt_path, split = "val";
  std::size_t export_n = 0;
  evalc->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required();
  evalc->add_option("--split", split, "val or train")->check(CLI::IsMember({"val", "train"}));
  evalc->add_option("--export", export_n, "Write triptych images for the first N scenes");

  // augment
  auto* aug = app.add_subcommand("augment", "Run the augmentation chain on a WAV file");
  add_globals(aug);
  std::string wav_in, wav_out = "augmented.wav";
  aug->add_option("input", wav_in, "16 kHz mono WAV")->required();
  aug->add_option("--output", wav_out, "Output WAV name under --out-dir");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of the full objective");
  add_globals(gc);
  std::size_t coords = 3;
  gc->add_option("--coords", coords, "Probed coordinates per tensor");

  // ablate
  auto* abl = app.add_subcommand("ablate", "Training sweeps");
  abl->require_subcommand(1);
  auto* ainj = abl->add_subcommand("inject", "Sweep injection schedules");
  auto* aq = abl->add_subcommand("queries", "Sweep the query count");
  std::vector<std::string> schedules{"none", "1", "2", "3", "4", "3,4", "1,2,3,4"};
  std::vector<std::size_t> query_counts{1, 3, 5, 8, 12};
  std::optional<std::size_t> ablate_steps;
  for (auto* sub : {ainj, aq}) {
    add_globals(sub);
    sub->add_option("--steps", ablate_steps, "Override the optimiser step count");
  }
  ainj->add_option("--schedules", schedules, "Schedules such as none 1 3,4")->delimiter(' ');
  aq->add_option("--counts", query_counts, "Query counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    harness::RunConfig cfg = resolve(g);

    if (gen->parsed()) {
      harness::SceneSpec spec = cfg.scene_spec();
      for (std::size_t i = 0; i < count; ++i) {
        spec.scenario = scenario == "all" ? harness::kScenarios[i % harness::kScenarios.size()]
                                          : harness::parse_scenario(scenario);
        const harness::Scene sc = harness::generate_scene(spec, derive_seed(cfg.seed, i));
        const std::string stem = "scene_" + std::to_string(i);
        write_pnm(out_path(cfg, stem + "_image.ppm"), sc.image, 3);
        write_pnm(out_path(cfg, stem + "_gt.pgm"), sc.gt, 1);
        audio::write_wav(sc.waveform, out_path(cfg, stem + ".wav"));
        std::cout << stem << " " << harness::scenario_name(sc.scenario) << " sources:";
        for (const auto& s : sc.sources) {
          std::cout << " [class " << s.class_id << (s.sounding ? " sounding" : " silent")
                    << (s.on_screen ? "" : " off-screen") << "]";
        }
        std::cout << "\n";
      }
    } else if (bbuild->parsed()) {
      std::vector<bank::EmbeddingSet> sets;
      if (emb_dir.empty()) {
        model::Model m(cfg.model, cfg.seed);
        sets = harness::bank_embeddings(m, cfg);
        if (emit) {
          for (const auto& s : sets) {
            bank::write_embeddings(s.embeddings, out_path(cfg, "class_" + std::to_string(s.class_id) + ".txt"));
          }
        }
      } else {
        for (int c = 0;; ++c) {
          const fs::path p = fs::path(emb_dir) / ("class_" + std::to_string(c) + ".txt");
          if (!fs::exists(p)) break;
          sets.push_back({static_cast<std::size_t>(c), bank::read_embeddings(p)});
        }
        if (sets.empty()) throw ParameterError("no class_<id>.txt files in " + emb_dir);
      }
      bank::BankOptions opts;
      opts.k_per_class = cfg.bank.k_per_class;
      opts.m_nearest = cfg.bank.m_nearest;
      opts.seed = cfg.seed;
      opts.centroid_rows = cfg.bank.centroid_rows;
      const auto b = bank::build_bank(sets, opts);
      const std::size_t bytes = bank::save_bank(b, out_path(cfg, bank_out));
      std::cout << "wrote " << (fs::path(cfg.out_dir) / bank_out).string() << " (" << b.size()
                << " prototypes, " << bytes << " bytes)\n";
    } else if (binspect->parsed()) {
      const auto b = bank::load_bank(bank_file);
      std::cout << "classes " << b.classes << "\ndim " << b.dim() << "\n";
      std::size_t row = 0;
      for (std::size_t c = 0; c < b.classes; ++c) {
        std::cout << "class " << c << " K=" << b.per_class_counts[c] << " norms:";
        for (std::size_t k = 0; k < b.per_class_counts[c]; ++k, ++row) {
          double n2 = 0.0;
          for (std::size_t j = 0; j < b.dim(); ++j) n2 += b.prototypes[row * b.dim() + j] * b.prototypes[row * b.dim() + j];
          std::printf(" %.6f", std::sqrt(n2));
        }
        std::cout << "\n";
      }
    } else if (trainc->parsed()) {
      if (steps) cfg.optim.steps = *steps;
      cfg.validate();
      std::ofstream log(out_path(cfg, "log.csv"), std::ios::binary);
      log << harness::log_header() << "\n";
      harness::TrainHooks hooks;
      hooks.on_step = [&](const harness::LogRow& r) {
        log << harness::log_line(r) << "\n";
        if (!quiet && (r.val_jf || r.step % 10 == 0)) {
          std::fprintf(stderr, "step %zu loss %.4f%s\n", r.step, r.total,
                       r.val_jf ? (" val J&F " + std::to_string(*r.val_jf)).c_str() : "");
        }
      };
      hooks.on_checkpoint = [&](const harness::Checkpoint& ck) {
        harness::save_checkpoint(ck, out_path(cfg, "step_" + std::to_string(ck.step) + ".davc"));
      };
      model::Model m = harness::make_model(cfg);
      if (m.bank()) bank::save_bank(*m.bank(), out_path(cfg, "bank.davb"));
      const auto tr = harness::train_split(cfg);
      const auto va = harness::val_split(cfg);
      const auto res = harness::train(m, tr, va, cfg, hooks);
      harness::save_checkpoint(res.checkpoint, out_path(cfg, "final.davc"));
      std::cout << "wrote " << (fs::path(cfg.out_dir) / "final.davc").string() << "\n";
    } else if (evalc->parsed()) {
      model::Model m = model_from_checkpoint(ckpt_path, cfg);
      const auto data = split == "val" ? harness::val_split(cfg) : harness::train_split(cfg);
      const auto rep = harness::evaluate(m, data);
      write_text(out_path(cfg, "report.csv"), harness::report_csv(rep));
      std::cout << harness::report_table(rep);
      for (std::size_t i = 0; i < std::min(export_n, data.size()); ++i) {
        const nd::Array pred = harness::predict(m, data.scenes[i], data.mels[i]);
        write_pnm(out_path(cfg, "triptych_" + std::to_string(i) + ".ppm"), triptych(data.scenes[i], pred), 3);
      }
    } else if (aug->parsed()) {
      audio::AugmentConfig a = cfg.augment;
      a.seed = cfg.seed;
      audio::AugmentRecord rec;
      const auto out = audio::augment_chain(audio::read_wav(wav_in), a, &rec);
      audio::write_wav(out, out_path(cfg, wav_out));
      std::printf("reverb %.3f%% pitch %.3f cents snr %.3f dB gain %.3f dB\n", rec.reverb, rec.pitch_cents,
                  rec.snr_db, rec.gain_db);
    } else if (gc->parsed()) {
      model::Model m = harness::make_model(cfg);
      harness::SceneSpec spec = cfg.scene_spec();
      spec.scenario = harness::Scenario::MultiClass;
      const auto sc = harness::generate_scene(spec, derive_seed(cfg.seed, 99));
      const auto mel = audio::log_mel_spectrogram(sc.waveform, cfg.model.mel);
      const auto r = harness::model_grad_check(m, sc, mel, cfg, 1e-5, coords, cfg.seed);
      std::printf("max relative error %.3e over %zu probes\n", r.max_error, r.probes);
      return r.max_error < 1e-4 ? 0 : 1;
    } else if (ainj->parsed() || aq->parsed()) {
      if (ablate_steps) cfg.optim.steps = *ablate_steps;
      const bool inject = ainj->parsed();
      std::string csv = (inject ? "schedule" : "queries") + sweep_header().substr(7);
      const std::size_t n = inject ? schedules.size() : query_counts.size();
      for (std::size_t i = 0; i < n; ++i) {
        harness::RunConfig run = cfg;
        std::string label;
        if (inject) {
          run.model.backbone.inject_at = harness::parse_schedule(schedules[i]);
          label = "\"" + harness::schedule_label(run.model.backbone.inject_at) + "\"";
        } else {
          run.model.aqm.n_queries = query_counts[i];
          label = std::to_string(query_counts[i]);
        }
        run.validate();
        const auto out = harness::train_and_evaluate(run);
        csv += sweep_row(label, out.report);
        std::fprintf(stderr, "%s J&F %.4f\n", label.c_str(), out.report.overall().jf);
      }
      write_text(out_path(cfg, inject ? "ablate_inject.csv" : "ablate_queries.csv"), csv);
      std::cout << csv;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
