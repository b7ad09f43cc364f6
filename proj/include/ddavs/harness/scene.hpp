#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ddavs/audio/waveform.hpp"
#include "ddavs/nd/array.hpp"

namespace ddavs::harness {

enum class Scenario { Single, MultiClass, MultiInstance, SmallDistant, OffScreen };

inline constexpr std::array<Scenario, 5> kScenarios{Scenario::Single, Scenario::MultiClass,
                                                    Scenario::MultiInstance, Scenario::SmallDistant,
                                                    Scenario::OffScreen};

std::string_view scenario_name(Scenario s);
/// Throws ParameterError for names outside the five scenarios.
Scenario parse_scenario(std::string_view name);

enum class ShapeKind { Circle, Square, Triangle, Diamond, Hexagon, Cross };

/// Canonical shape and RGB colour of a class.
ShapeKind class_shape(int class_id);
std::array<double, 3> class_colour(int class_id);

struct Source {
  int class_id = 0;
  ShapeKind shape = ShapeKind::Circle;
  double cx = 0.0, cy = 0.0;  // centre in pixels
  double radius = 0.0;        // circumradius in pixels
  bool sounding = false;
  bool on_screen = true;
  std::uint64_t audio_seed = 0;
};

struct Scene {
  Scenario scenario = Scenario::Single;
  nd::Array image;  // H x W x 3 in [0, 1]
  audio::Waveform waveform;
  nd::Array gt;  // H x W in {0, 1}
  std::vector<Source> sources;
};

struct SceneSpec {
  Scenario scenario = Scenario::Single;
  std::size_t image_size = 64;
  int classes = 4;
  double duration_s = 1.0;
};

/// Fraction of each pixel covered by the shape, from 4 x 4 supersampling.
nd::Array coverage(const Source& s, std::size_t size);

/// Renders `sources` over a seeded textured background and mixes the
/// sounding ones into a peak-normalised waveform.
Scene compose_scene(std::vector<Source> sources, Scenario scenario, const SceneSpec& spec,
                    std::uint64_t seed);

/// Random scene of the given scenario; a pure function of (spec, seed).
Scene generate_scene(const SceneSpec& spec, std::uint64_t seed);

/// `count` scenes cycling through the five scenarios in order.
std::vector<Scene> generate_split(const SceneSpec& base, std::size_t count, std::uint64_t seed);

}  // namespace ddavs::harness
