#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace ddavs::audio {

inline constexpr int kSampleRate = 16000;

/// Mono audio at the fixed 16 kHz rate.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  std::size_t duration_samples() const noexcept { return samples.size(); }
  double peak() const noexcept;
  double power() const noexcept;

  friend bool operator==(const Waveform&, const Waveform&) = default;
};

/// Scales so that max |sample| = 1; silence is left untouched.
void peak_normalize(Waveform& w);

/// 16-bit PCM, 16 kHz mono, little-endian RIFF/WAVE.
void write_wav(const Waveform& w, const std::filesystem::path& path);
Waveform read_wav(const std::filesystem::path& path);

}  // namespace ddavs::audio
