#include "ddavs/audio/features.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "ddavs/error.hpp"
#include "ddavs/nd/ops.hpp"
#include "fft.hpp"

namespace ddavs::audio {

void MelConfig::validate() const {
  if (n_mels < 8) throw ParameterError("n_mels must be at least 8, got " + std::to_string(n_mels));
  if (hop == 0 || win < hop) {
    throw ParameterError("window " + std::to_string(win) + " must be at least hop " +
                         std::to_string(hop));
  }
  if (!(f_min >= 0.0 && f_max > f_min)) throw ParameterError("mel band edges out of order");
}

std::size_t MelConfig::n_fft() const noexcept {
  std::size_t n = 1;
  while (n < win) n <<= 1;
  return n;
}

std::size_t frame_count(std::size_t n_samples, const MelConfig& cfg) {
  cfg.validate();
  if (n_samples < cfg.win) {
    throw ParameterError("waveform too short: " + std::to_string(n_samples) +
                         " samples, window needs " + std::to_string(cfg.win));
  }
  return (n_samples - cfg.win) / cfg.hop + 1;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

std::vector<double> band_edges(const MelConfig& cfg) {
  const double lo = hz_to_mel(cfg.f_min);
  const double hi = hz_to_mel(cfg.f_max);
  std::vector<double> edges(cfg.n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) /
                                  static_cast<double>(cfg.n_mels + 1));
  }
  return edges;
}

}  // namespace

std::vector<double> mel_center_frequencies(const MelConfig& cfg) {
  cfg.validate();
  const auto edges = band_edges(cfg);
  return {edges.begin() + 1, edges.end() - 1};
}

nd::Array mel_filterbank(const MelConfig& cfg, int sample_rate) {
  cfg.validate();
  const std::size_t n_fft = cfg.n_fft();
  const std::size_t bins = n_fft / 2 + 1;
  const auto edges = band_edges(cfg);
  nd::Array fb({cfg.n_mels, bins});
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      double v = 0.0;
      if (f > left && f <= center) {
        v = (f - left) / (center - left);
      } else if (f > center && f < right) {
        v = (right - f) / (right - center);
      }
      fb(m, k) = v;
    }
  }
  return fb;
}

nd::Array log_mel_spectrogram(const Waveform& w, const MelConfig& cfg) {
  const std::size_t frames = frame_count(w.samples.size(), cfg);
  const std::size_t n_fft = cfg.n_fft();
  const std::size_t bins = n_fft / 2 + 1;
  const nd::Array fb = mel_filterbank(cfg, w.sample_rate);

  std::vector<double> window(cfg.win);
  for (std::size_t i = 0; i < cfg.win; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                     static_cast<double>(cfg.win));
  }
  detail::RealFft fft(n_fft);
  std::vector<double> buf(cfg.win);
  std::vector<std::complex<double>> spec(bins);
  nd::Array mag({frames, bins});
  for (std::size_t t = 0; t < frames; ++t) {
    const double* src = w.samples.data() + t * cfg.hop;
    for (std::size_t i = 0; i < cfg.win; ++i) buf[i] = src[i] * window[i];
    fft.forward(buf, spec);
    for (std::size_t k = 0; k < bins; ++k) mag(t, k) = std::abs(spec[k]);
  }
  nd::Array out({frames, cfg.n_mels});
  nd::gemm(mag, false, fb, true, out, 1.0, 0.0);
  for (double& v : out.values()) v = std::log(v + 1e-6);
  return out;
}

AudioFeatures project_log_mel(nd::Tape& tape, const nd::Array& log_mel, nd::Parameter& proj) {
  if (proj.value.rows() != log_mel.cols()) {
    throw DimensionError("projection " + nd::shape_str(proj.value.shape()) +
                         " does not accept log-mel " + nd::shape_str(log_mel.shape()));
  }
  AudioFeatures f;
  f.frames = nd::matmul(tape.constant(log_mel), tape.parameter(proj));
  f.n_frames = log_mel.rows();
  f.n_mels = log_mel.cols();
  return f;
}

AudioFeatures log_mel(nd::Tape& tape, const Waveform& w, const MelConfig& cfg,
                      nd::Parameter& proj) {
  return project_log_mel(tape, log_mel_spectrogram(w, cfg), proj);
}

}  // namespace ddavs::audio
