#pragma once

#include <cstdint>

#include "ddavs/audio/waveform.hpp"

namespace ddavs::audio {

/// Number of distinct class signatures the synthesiser knows.
inline constexpr int kSynthClasses = 6;

struct SynthOptions {
  /// Seeded detune is drawn uniformly from [-detune_cents, detune_cents].
  double detune_cents = 20.0;
};

/// Lowest carrier of each class, before detune.
double class_base_frequency(int class_id);

/// Deterministic single-source clip for a class: a class-specific carrier
/// set under a class-specific amplitude envelope, with seeded detune and
/// phases, peak normalised.
Waveform synth_waveform(int class_id, std::uint64_t seed, double duration_s,
                        const SynthOptions& options = {});

}  // namespace ddavs::audio
