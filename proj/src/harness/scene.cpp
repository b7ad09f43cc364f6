#include "ddavs/harness/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ddavs/audio/synth.hpp"
#include "ddavs/error.hpp"
#include "ddavs/random.hpp"

namespace ddavs::harness {

namespace {

constexpr std::array<std::string_view, 5> kNames{"single", "multi_class", "multi_instance",
                                                 "small_distant", "off_screen"};

// Area of a unit-circumradius shape.
double unit_area(ShapeKind k) {
  switch (k) {
    case ShapeKind::Circle: return std::numbers::pi;
    case ShapeKind::Square: return 2.0;
    case ShapeKind::Triangle: return 3.0 * std::sqrt(3.0) / 4.0;
    case ShapeKind::Diamond: return 2.0;
    case ShapeKind::Hexagon: return 3.0 * std::sqrt(3.0) / 2.0;
    case ShapeKind::Cross: return 1.8;
  }
  return 1.0;
}

bool inside(const Source& s, double x, double y) {
  const double dx = (x - s.cx) / s.radius, dy = (y - s.cy) / s.radius;
  const double ax = std::abs(dx), ay = std::abs(dy);
  switch (s.shape) {
    case ShapeKind::Circle:
      return dx * dx + dy * dy <= 1.0;
    case ShapeKind::Square:
      return std::max(ax, ay) <= std::numbers::sqrt2 / 2.0;
    case ShapeKind::Diamond:
      return ax + ay <= 1.0;
    case ShapeKind::Triangle: {
      // Upward equilateral triangle inscribed in the unit circle.
      if (dy > 0.5) return false;
      return ax <= (dy + 1.0) / std::sqrt(3.0);
    }
    case ShapeKind::Hexagon:
      return ay <= std::sqrt(3.0) / 2.0 && std::sqrt(3.0) * ax + ay <= std::sqrt(3.0);
    case ShapeKind::Cross:
      return (ax <= 0.3 && ay <= 0.9) || (ay <= 0.3 && ax <= 0.9);
  }
  return false;
}

struct Placer {
  Rng& rng;
  std::size_t size;
  std::vector<Source> placed;

  // Rejection-samples a centre so the new shape stays inside the frame and
  // clear of every shape already placed.
  bool place(Source& s) {
    const double lo = s.radius + 1.0, hi = static_cast<double>(size) - s.radius - 1.0;
    for (int attempt = 0; attempt < 200; ++attempt) {
      s.cx = rng.uniform(lo, hi);
      s.cy = rng.uniform(lo, hi);
      bool clear = true;
      for (const Source& o : placed) {
        if (!o.on_screen) continue;
        clear &= std::hypot(s.cx - o.cx, s.cy - o.cy) > s.radius + o.radius + 3.0;
      }
      if (clear) {
        placed.push_back(s);
        return true;
      }
    }
    return false;
  }
};

Source make_source(int class_id, double radius, bool sounding, Rng& rng) {
  Source s;
  s.class_id = class_id;
  s.shape = class_shape(class_id);
  s.radius = radius;
  s.sounding = sounding;
  s.audio_seed = rng.engine()();
  return s;
}

std::vector<int> distinct_classes(int count, int classes, Rng& rng) {
  std::vector<int> all(classes);
  for (int i = 0; i < classes; ++i) all[i] = i;
  std::shuffle(all.begin(), all.end(), rng.engine());
  all.resize(count);
  return all;
}

}  // namespace

std::string_view scenario_name(Scenario s) { return kNames[static_cast<std::size_t>(s)]; }

Scenario parse_scenario(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return kScenarios[i];
  }
  throw ParameterError("unknown scenario '" + std::string(name) +
                       "' (expected single, multi_class, multi_instance, small_distant or off_screen)");
}

ShapeKind class_shape(int class_id) {
  if (class_id < 0 || class_id >= audio::kSynthClasses) {
    throw ParameterError("class " + std::to_string(class_id) + " has no shape");
  }
  return static_cast<ShapeKind>(class_id);
}

std::array<double, 3> class_colour(int class_id) {
  static constexpr std::array<std::array<double, 3>, 6> table{{{0.90, 0.15, 0.15},
                                                               {0.15, 0.80, 0.20},
                                                               {0.20, 0.30, 0.95},
                                                               {0.95, 0.85, 0.10},
                                                               {0.85, 0.20, 0.85},
                                                               {0.10, 0.85, 0.85}}};
  class_shape(class_id);
  return table[static_cast<std::size_t>(class_id)];
}

nd::Array coverage(const Source& s, std::size_t size) {
  nd::Array cov({size, size});
  if (!s.on_screen) return cov;
  const auto x0 = static_cast<std::size_t>(std::max(0.0, std::floor(s.cx - s.radius - 1.0)));
  const auto y0 = static_cast<std::size_t>(std::max(0.0, std::floor(s.cy - s.radius - 1.0)));
  const auto x1 = std::min(size, static_cast<std::size_t>(std::max(0.0, std::ceil(s.cx + s.radius + 1.0))));
  const auto y1 = std::min(size, static_cast<std::size_t>(std::max(0.0, std::ceil(s.cy + s.radius + 1.0))));
  for (std::size_t y = y0; y < y1; ++y) {
    for (std::size_t x = x0; x < x1; ++x) {
      int hits = 0;
      for (int sy = 0; sy < 4; ++sy)
        for (int sx = 0; sx < 4; ++sx)
          hits += inside(s, static_cast<double>(x) + (sx + 0.5) / 4.0,
                         static_cast<double>(y) + (sy + 0.5) / 4.0);
      cov(y, x) = hits / 16.0;
    }
  }
  return cov;
}

Scene compose_scene(std::vector<Source> sources, Scenario scenario, const SceneSpec& spec,
                    std::uint64_t seed) {
  const std::size_t n = spec.image_size;
  Rng rng(derive_seed(seed, 0x7e47));
  Scene sc;
  sc.scenario = scenario;
  sc.image = nd::Array({n, n, 3});
  sc.gt = nd::Array({n, n});

  // Grey base with two oriented sinusoidal gratings and pixel noise.
  const double base = rng.uniform(0.35, 0.6);
  const double f1 = rng.uniform(0.1, 0.4), f2 = rng.uniform(0.1, 0.4);
  const double a1 = rng.uniform(0.0, std::numbers::pi), a2 = rng.uniform(0.0, std::numbers::pi);
  const double p1 = rng.uniform(0.0, 6.3), p2 = rng.uniform(0.0, 6.3);
  const std::array<double, 3> tint{rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05),
                                   rng.uniform(-0.05, 0.05)};
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double u = static_cast<double>(x), v = static_cast<double>(y);
      const double tex = 0.06 * std::sin(f1 * (u * std::cos(a1) + v * std::sin(a1)) + p1) +
                         0.04 * std::sin(f2 * (u * std::cos(a2) + v * std::sin(a2)) + p2);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        sc.image[(y * n + x) * 3 + ch] =
            std::clamp(base + tint[ch] + tex + rng.normal(0.0, 0.02), 0.0, 1.0);
      }
    }
  }

  std::vector<double> mix(static_cast<std::size_t>(std::lround(spec.duration_s * audio::kSampleRate)), 0.0);
  for (const Source& s : sources) {
    if (s.on_screen) {
      const nd::Array cov = coverage(s, n);
      auto colour = class_colour(s.class_id);
      for (double& c : colour) c = std::clamp(c + rng.uniform(-0.05, 0.05), 0.0, 1.0);
      for (std::size_t i = 0; i < n * n; ++i) {
        if (cov[i] == 0.0) continue;
        for (std::size_t ch = 0; ch < 3; ++ch) {
          double& px = sc.image[i * 3 + ch];
          px = (1.0 - cov[i]) * px + cov[i] * colour[ch];
        }
        if (s.sounding && cov[i] >= 0.5) sc.gt[i] = 1.0;
      }
    }
    if (s.sounding) {
      const audio::Waveform w = audio::synth_waveform(s.class_id, s.audio_seed, spec.duration_s);
      for (std::size_t i = 0; i < mix.size(); ++i) mix[i] += w.samples[i];
    }
  }
  sc.waveform.samples = std::move(mix);
  audio::peak_normalize(sc.waveform);
  sc.sources = std::move(sources);
  return sc;
}

Scene generate_scene(const SceneSpec& spec, std::uint64_t seed) {
  if (spec.classes < 2 || spec.classes > audio::kSynthClasses) {
    throw ParameterError("scene classes must lie in [2, " + std::to_string(audio::kSynthClasses) + "]");
  }
  if (spec.image_size < 32) throw ParameterError("scene images must be at least 32 pixels");
  Rng rng(derive_seed(seed, 0x5ce7e));
  const double sz = static_cast<double>(spec.image_size);
  auto normal_radius = [&] { return rng.uniform(0.11, 0.17) * sz; };
  Placer placer{rng, spec.image_size, {}};
  std::vector<Source> sources;
  auto add = [&](Source s) {
    if (s.on_screen && !placer.place(s)) return;
    sources.push_back(s);
  };

  switch (spec.scenario) {
    case Scenario::Single: {
      add(make_source(static_cast<int>(rng.index(spec.classes)), normal_radius(), true, rng));
      break;
    }
    case Scenario::MultiClass: {
      const int k = spec.classes >= 3 ? 2 + static_cast<int>(rng.index(2)) : 2;
      const auto cls = distinct_classes(k, spec.classes, rng);
      const int n_sounding = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(k - 1)));
      for (int i = 0; i < k; ++i) add(make_source(cls[i], normal_radius() * 0.85, i < n_sounding, rng));
      break;
    }
    case Scenario::MultiInstance: {
      const auto cls = distinct_classes(2, spec.classes, rng);
      for (int i = 0; i < 2; ++i) add(make_source(cls[0], normal_radius() * 0.8, true, rng));
      if (rng.uniform() < 0.5) add(make_source(cls[1], normal_radius() * 0.8, false, rng));
      break;
    }
    case Scenario::SmallDistant: {
      const int c = static_cast<int>(rng.index(spec.classes));
      const double area = rng.uniform(0.008, 0.016) * sz * sz;
      add(make_source(c, std::sqrt(area / unit_area(class_shape(c))), true, rng));
      break;
    }
    case Scenario::OffScreen: {
      const int k = 1 + static_cast<int>(rng.index(2));
      const auto cls = distinct_classes(k + 1, spec.classes, rng);
      for (int i = 0; i < k; ++i) add(make_source(cls[i], normal_radius(), false, rng));
      Source hidden = make_source(cls[k], normal_radius(), true, rng);
      hidden.on_screen = false;
      add(hidden);
      break;
    }
  }
  return compose_scene(std::move(sources), spec.scenario, spec, seed);
}

std::vector<Scene> generate_split(const SceneSpec& base, std::size_t count, std::uint64_t seed) {
  std::vector<Scene> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SceneSpec spec = base;
    spec.scenario = kScenarios[i % kScenarios.size()];
    out.push_back(generate_scene(spec, derive_seed(seed, i)));
  }
  return out;
}

}  // namespace ddavs::harness
