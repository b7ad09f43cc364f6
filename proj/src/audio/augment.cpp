#include "ddavs/audio/augment.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "ddavs/error.hpp"
#include "ddavs/instrument.hpp"
#include "ddavs/random.hpp"
#include "fft.hpp"

namespace ddavs::audio {

namespace {

constexpr double kReverbSeconds = 0.3;
constexpr double kThresholdDb = -20.0;
constexpr double kRatio = 4.0;
constexpr double kKneeDb = 6.0;

constexpr std::size_t kWsolaFrame = 512;
constexpr std::size_t kWsolaHop = kWsolaFrame / 2;
constexpr std::ptrdiff_t kWsolaTolerance = 128;

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void check_range(const Range& r, const char* name) {
  if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
    throw ParameterError(std::string(name) + " range [" + std::to_string(r.lo) + ", " +
                         std::to_string(r.hi) + "] is not ordered");
  }
}

double sample_at(const std::vector<double>& y, std::ptrdiff_t i) {
  return (i >= 0 && static_cast<std::size_t>(i) < y.size()) ? y[static_cast<std::size_t>(i)]
                                                            : 0.0;
}

// WSOLA: overlap-add Hann frames taken near their nominal positions, each
// shifted within a tolerance to best continue the previously placed frame.
std::vector<double> wsola_stretch(const std::vector<double>& y, std::size_t out_len) {
  const double ha = static_cast<double>(kWsolaHop) * static_cast<double>(y.size()) /
                    static_cast<double>(out_len);
  std::vector<double> win(kWsolaFrame);
  for (std::size_t i = 0; i < kWsolaFrame; ++i) {
    win[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                  static_cast<double>(kWsolaFrame));
  }
  std::vector<double> out(out_len + kWsolaFrame, 0.0);
  std::vector<double> wsum(out_len + kWsolaFrame, 0.0);
  const std::size_t frames = out_len / kWsolaHop + 1;
  std::ptrdiff_t prev = 0;
  const std::size_t cmp = kWsolaHop;
  for (std::size_t k = 0; k < frames; ++k) {
    const auto nominal = static_cast<std::ptrdiff_t>(std::lround(static_cast<double>(k) * ha));
    std::ptrdiff_t pos = nominal;
    if (k > 0) {
      const std::ptrdiff_t target = prev + static_cast<std::ptrdiff_t>(kWsolaHop);
      double best = -1e300;
      for (std::ptrdiff_t d = -kWsolaTolerance; d <= kWsolaTolerance; ++d) {
        const std::ptrdiff_t cand = nominal + d;
        if (cand < 0) continue;
        double c = 0.0, e = 1e-12;
        for (std::size_t i = 0; i < cmp; ++i) {
          const double a = sample_at(y, cand + static_cast<std::ptrdiff_t>(i));
          c += a * sample_at(y, target + static_cast<std::ptrdiff_t>(i));
          e += a * a;
        }
        const double score = c / std::sqrt(e);
        if (score > best) {
          best = score;
          pos = cand;
        }
      }
    }
    const std::size_t at = k * kWsolaHop;
    for (std::size_t i = 0; i < kWsolaFrame && at + i < out.size(); ++i) {
      out[at + i] += win[i] * sample_at(y, pos + static_cast<std::ptrdiff_t>(i));
      wsum[at + i] += win[i];
    }
    prev = pos;
  }
  out.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    if (wsum[i] > 1e-3) out[i] /= wsum[i];
  }
  return out;
}

// Static soft-knee gain curve, all quantities in dB.
double compressed_level(double level) {
  const double over = level - kThresholdDb;
  if (2.0 * over < -kKneeDb) return level;
  if (2.0 * std::abs(over) <= kKneeDb) {
    const double x = over + kKneeDb / 2.0;
    return level + (1.0 / kRatio - 1.0) * x * x / (2.0 * kKneeDb);
  }
  return kThresholdDb + over / kRatio;
}

}  // namespace

void AugmentConfig::validate() const {
  check_range(reverb_range, "reverb");
  check_range(pitch_cents_range, "pitch");
  check_range(snr_db_range, "snr");
  check_range(gain_jitter_db_range, "gain jitter");
  if (!(snr_db_range.lo > 0.0)) throw ParameterError("snr range must be positive");
  if (reverb_range.lo < 0.0 || reverb_range.hi > 100.0) {
    throw ParameterError("reverberance must lie in [0, 100] percent");
  }
}

Waveform reverberate(const Waveform& w, double reverb_percent, std::uint64_t seed) {
  const std::size_t n = w.samples.size();
  if (n == 0) return w;
  const auto ir_len = static_cast<std::size_t>(kReverbSeconds * w.sample_rate);
  Rng rng(seed);
  std::vector<double> ir(ir_len);
  double energy = 0.0;
  const double decay = std::log(1000.0) / (kReverbSeconds * w.sample_rate);  // -60 dB at the tail
  for (std::size_t i = 0; i < ir_len; ++i) {
    ir[i] = rng.normal() * std::exp(-decay * static_cast<double>(i));
    energy += ir[i] * ir[i];
  }
  for (double& v : ir) v /= std::sqrt(energy);

  const std::size_t m = next_pow2(n + ir_len - 1);
  detail::RealFft fft(m);
  std::vector<std::complex<double>> xs(fft.bins()), hs(fft.bins());
  fft.forward(w.samples, xs);
  fft.forward(ir, hs);
  for (std::size_t k = 0; k < xs.size(); ++k) xs[k] *= hs[k];
  std::vector<double> wet(m);
  fft.inverse(xs, wet);

  const double mix = reverb_percent / 100.0;
  Waveform out = w;
  for (std::size_t i = 0; i < n; ++i) {
    out.samples[i] = (1.0 - mix) * w.samples[i] + mix * wet[i] / static_cast<double>(m);
  }
  return out;
}

Waveform pitch_shift(const Waveform& w, double cents) {
  if (!(std::abs(cents) <= 1200.0)) {
    throw ParameterError("pitch shift of " + std::to_string(cents) + " cents exceeds an octave");
  }
  const std::size_t n = w.samples.size();
  if (cents == 0.0 || n < 2) return w;
  const double ratio = std::exp2(cents / 1200.0);
  const auto m = static_cast<std::size_t>(std::floor(static_cast<double>(n - 1) / ratio)) + 1;
  std::vector<double> resampled(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double src = static_cast<double>(j) * ratio;
    const auto i0 = static_cast<std::size_t>(src);
    const std::size_t i1 = std::min(i0 + 1, n - 1);
    const double f = src - static_cast<double>(i0);
    resampled[j] = (1.0 - f) * w.samples[i0] + f * w.samples[i1];
  }
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples = wsola_stretch(resampled, n);
  return out;
}

Waveform compress(const Waveform& w) {
  const double sr = w.sample_rate;
  const double attack = std::exp(-1.0 / (0.005 * sr));
  const double release = std::exp(-1.0 / (0.050 * sr));
  Waveform out = w;
  double env = 0.0;
  for (double& s : out.samples) {
    const double a = std::abs(s);
    const double coeff = a > env ? attack : release;
    env = coeff * env + (1.0 - coeff) * a;
    const double level = 20.0 * std::log10(std::max(env, 1e-9));
    s *= std::pow(10.0, (compressed_level(level) - level) / 20.0);
  }
  return out;
}

Waveform augment_chain(const Waveform& w, const AugmentConfig& cfg, AugmentRecord* record) {
  cfg.validate();
  ++counters().augment_calls;
  Rng rng(cfg.seed);
  AugmentRecord rec;
  rec.reverb = rng.uniform(cfg.reverb_range.lo, cfg.reverb_range.hi);
  rec.pitch_cents = rng.uniform(cfg.pitch_cents_range.lo, cfg.pitch_cents_range.hi);
  rec.snr_db = rng.uniform(cfg.snr_db_range.lo, cfg.snr_db_range.hi);
  rec.gain_db = rng.uniform(cfg.gain_jitter_db_range.lo, cfg.gain_jitter_db_range.hi);
  const std::uint64_t ir_seed = rng.engine()();

  Waveform out = reverberate(w, rec.reverb, ir_seed);
  out = pitch_shift(out, rec.pitch_cents);
  out = compress(out);

  const std::size_t n = out.samples.size();
  rec.noise.resize(n);
  double drawn = 0.0;
  for (double& v : rec.noise) {
    v = rng.normal();
    drawn += v * v;
  }
  const double signal_power = out.power();
  const double target_power = signal_power / std::pow(10.0, rec.snr_db / 10.0);
  const double noise_scale =
      drawn > 0.0 ? std::sqrt(target_power * static_cast<double>(n) / drawn) : 0.0;
  const double gain = std::pow(10.0, rec.gain_db / 20.0);
  for (std::size_t i = 0; i < n; ++i) {
    rec.noise[i] *= noise_scale * gain;
    out.samples[i] = out.samples[i] * gain + rec.noise[i];
  }
  const double peak = out.peak();
  if (peak > 1.0) {
    for (std::size_t i = 0; i < n; ++i) {
      out.samples[i] /= peak;
      rec.noise[i] /= peak;
    }
  }
  if (record) *record = std::move(rec);
  return out;
}

}  // namespace ddavs::audio
