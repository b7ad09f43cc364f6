#pragma once

#include <cstddef>
#include <vector>

#include "ddavs/audio/waveform.hpp"
#include "ddavs/nd/array.hpp"
#include "ddavs/nd/tape.hpp"

namespace ddavs::audio {

/// STFT and mel filterbank settings. The FFT length is the smallest power
/// of two holding one window.
struct MelConfig {
  std::size_t n_mels = 32;
  std::size_t win = 400;
  std::size_t hop = 160;
  double f_min = 0.0;
  double f_max = kSampleRate / 2.0;

  void validate() const;
  std::size_t n_fft() const noexcept;
};

/// Frames in a clip of `n_samples`; throws ParameterError when shorter than a window.
std::size_t frame_count(std::size_t n_samples, const MelConfig& cfg);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular HTK filterbank, n_mels x (n_fft/2 + 1).
nd::Array mel_filterbank(const MelConfig& cfg, int sample_rate = kSampleRate);
/// Peak frequency of each filter in Hz.
std::vector<double> mel_center_frequencies(const MelConfig& cfg);

/// log(mel energy + 1e-6) of the Hann-windowed magnitude STFT, T x n_mels.
nd::Array log_mel_spectrogram(const Waveform& w, const MelConfig& cfg);

struct AudioFeatures {
  nd::Var frames;  // T x d
  std::size_t n_frames = 0;
  std::size_t n_mels = 0;
};

/// Per-frame linear map of precomputed log-mel rows through `proj` (n_mels x d).
AudioFeatures project_log_mel(nd::Tape& tape, const nd::Array& log_mel, nd::Parameter& proj);

AudioFeatures log_mel(nd::Tape& tape, const Waveform& w, const MelConfig& cfg,
                      nd::Parameter& proj);

}  // namespace ddavs::audio
