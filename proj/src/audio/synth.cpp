#include "ddavs/audio/synth.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "ddavs/error.hpp"
#include "ddavs/random.hpp"

namespace ddavs::audio {

namespace {

enum class Envelope { Steady, Tremolo, Pulsed, Bursts, Vibrato, Ramps };

struct Signature {
  std::vector<double> freqs;
  std::vector<double> amps;
  Envelope envelope;
  double rate;  // envelope / modulation rate in Hz
};

const std::array<Signature, kSynthClasses>& signatures() {
  static const std::array<Signature, kSynthClasses> table = {{
      {{440.0, 880.0}, {1.0, 0.35}, Envelope::Steady, 0.0},
      {{1250.0, 1875.0}, {1.0, 0.5}, Envelope::Tremolo, 6.0},
      {{300.0, 2100.0}, {1.0, 0.6}, Envelope::Pulsed, 4.0},
      {{3100.0, 4650.0}, {1.0, 0.4}, Envelope::Bursts, 3.0},
      {{700.0, 1050.0, 1400.0}, {1.0, 0.6, 0.4}, Envelope::Vibrato, 5.0},
      {{5200.0, 6100.0}, {1.0, 0.7}, Envelope::Ramps, 2.0},
  }};
  return table;
}

void check_class(int class_id) {
  if (class_id < 0 || class_id >= kSynthClasses) {
    throw ParameterError("class " + std::to_string(class_id) + " outside [0, " +
                         std::to_string(kSynthClasses) + ")");
  }
}

}  // namespace

double class_base_frequency(int class_id) {
  check_class(class_id);
  return signatures()[class_id].freqs.front();
}

Waveform synth_waveform(int class_id, std::uint64_t seed, double duration_s,
                        const SynthOptions& options) {
  check_class(class_id);
  if (!(duration_s >= 0.5 && duration_s <= 4.0)) {
    throw ParameterError("duration " + std::to_string(duration_s) + " s outside [0.5, 4.0]");
  }
  const Signature& sig = signatures()[class_id];
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(class_id)));
  const double detune =
      std::exp2(rng.uniform(-1.0, 1.0) * options.detune_cents / 1200.0);
  const double env_phase = rng.uniform();
  std::vector<double> phases, amps;
  for (std::size_t k = 0; k < sig.freqs.size(); ++k) {
    phases.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
    amps.push_back(sig.amps[k] * (k == 0 ? 1.0 : rng.uniform(0.9, 1.1)));
  }

  const auto n = static_cast<std::size_t>(std::lround(duration_s * kSampleRate));
  Waveform w;
  w.samples.resize(n);
  const double dt = 1.0 / kSampleRate;
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> acc(phases);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double cyc = t * sig.rate + env_phase;
    double env = 1.0;
    double fm = 1.0;
    switch (sig.envelope) {
      case Envelope::Steady:
        break;
      case Envelope::Tremolo:
        env = 1.0 - 0.8 * (0.5 + 0.5 * std::sin(two_pi * cyc));
        break;
      case Envelope::Pulsed: {
        const double ph = cyc - std::floor(cyc);
        env = ph < 0.5 ? std::pow(std::sin(std::numbers::pi * ph / 0.5), 2.0) : 0.0;
        break;
      }
      case Envelope::Bursts:
        env = std::exp(-6.0 * (cyc - std::floor(cyc)));
        break;
      case Envelope::Vibrato:
        fm = 1.0 + 0.02 * std::sin(two_pi * cyc);
        break;
      case Envelope::Ramps:
        env = cyc - std::floor(cyc);
        break;
    }
    double s = 0.0;
    for (std::size_t k = 0; k < sig.freqs.size(); ++k) {
      s += amps[k] * std::sin(acc[k]);
      acc[k] += two_pi * sig.freqs[k] * detune * fm * dt;
    }
    w.samples[i] = env * s;
  }
  // 10 ms fades avoid clicks at the clip edges.
  const std::size_t fade = std::min<std::size_t>(n / 2, kSampleRate / 100);
  for (std::size_t i = 0; i < fade; ++i) {
    const double g = static_cast<double>(i) / static_cast<double>(fade);
    w.samples[i] *= g;
    w.samples[n - 1 - i] *= g;
  }
  peak_normalize(w);
  return w;
}

}  // namespace ddavs::audio
