#pragma once

#include <cstdint>
#include <vector>

#include "ddavs/audio/waveform.hpp"

namespace ddavs::audio {

struct Range {
  double lo;
  double hi;
};

/// Parameter ranges for the waveform augmentation chain. Each effect
/// parameter is drawn uniformly from its range per call.
struct AugmentConfig {
  Range reverb_range{20.0, 40.0};       // reverberance, percent wet
  Range pitch_cents_range{-150.0, 150.0};
  Range snr_db_range{10.0, 20.0};
  Range gain_jitter_db_range{-3.0, 3.0};
  std::uint64_t seed = 0;

  /// Throws ParameterError unless every range is ordered and SNRs positive.
  void validate() const;
};

/// What one augment_chain call drew, plus the noise it injected, scaled
/// exactly as it appears in the output.
struct AugmentRecord {
  double reverb = 0.0;
  double pitch_cents = 0.0;
  double snr_db = 0.0;
  double gain_db = 0.0;
  std::vector<double> noise;
};

/// Exponential-decay impulse response mixed wet/dry at `reverb / 100`.
Waveform reverberate(const Waveform& w, double reverb_percent, std::uint64_t seed);

/// Shifts pitch by `cents` keeping duration: linear-interpolation resample
/// followed by a WSOLA time stretch back to the original length.
Waveform pitch_shift(const Waveform& w, double cents);

/// Fixed soft-knee compressor: threshold -20 dBFS, ratio 4:1, knee 6 dB.
Waveform compress(const Waveform& w);

/// reverb -> pitch shift -> compression -> noise at a drawn SNR plus gain
/// jitter; scaled back into [-1, 1] if it clips. Length is preserved.
Waveform augment_chain(const Waveform& w, const AugmentConfig& cfg,
                       AugmentRecord* record = nullptr);

}  // namespace ddavs::audio
