#include "specseg/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "specseg/random.hpp"

namespace specseg {

std::string_view to_string(DependencyRule rule) noexcept {
  switch (rule) {
    case DependencyRule::none:
      return "none";
    case DependencyRule::ring_around_core:
      return "ring_around_core";
    case DependencyRule::satellite_adjacent:
      return "satellite_adjacent";
  }
  return "none";
}

DependencyRule parse_dependency_rule(std::string_view text) {
  for (const auto rule : {DependencyRule::none, DependencyRule::ring_around_core,
                          DependencyRule::satellite_adjacent}) {
    if (text == to_string(rule)) return rule;
  }
  throw ConfigError("unknown dependency rule '" + std::string(text) + "'");
}

std::string_view to_string(DomainTag tag) noexcept { return tag == DomainTag::iid ? "iid" : "ood"; }

DomainTag parse_domain_tag(std::string_view text) {
  if (text == "iid") return DomainTag::iid;
  if (text == "ood") return DomainTag::ood;
  throw ConfigError("unknown domain tag '" + std::string(text) + "'");
}

void SceneConfig::validate() const {
  if (std::min(height, width) < 16) {
    throw ConfigError("scene dimensions must be at least 16 pixels, got " +
                      std::to_string(height) + "x" + std::to_string(width));
  }
  if (num_classes < 2 || num_classes > 8) {
    throw ConfigError("num_classes must be in [2, 8]");
  }
  if (intensity_means.size() != static_cast<std::size_t>(num_classes)) {
    throw ConfigError("intensity_means needs one entry per class (" +
                      std::to_string(num_classes) + "), got " +
                      std::to_string(intensity_means.size()));
  }
  for (const double m : intensity_means) {
    if (!(m >= 0.0 && m <= 1.0)) throw ConfigError("intensity means must lie in [0, 1]");
  }
  if (!(size_jitter >= 0.0 && size_jitter < 1.0)) throw ConfigError("size_jitter must be in [0, 1)");
  if (!(shape_jitter >= 0.0 && shape_jitter < 1.0)) {
    throw ConfigError("shape_jitter must be in [0, 1)");
  }
  if (!(intensity_noise_sigma >= 0.0) || !std::isfinite(intensity_noise_sigma)) {
    throw ConfigError("intensity_noise_sigma must be non-negative");
  }
  if (!(texture_contrast >= 0.0) || !std::isfinite(texture_contrast)) {
    throw ConfigError("texture_contrast must be non-negative");
  }
  if (!(size_scale > 0.0) || !std::isfinite(size_scale)) {
    throw ConfigError("size_scale must be positive");
  }
}

double Ellipse::radius_at(double row, double col) const noexcept {
  const double dr = row - center_row;
  const double dc = col - center_col;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double u = c * dr + s * dc;
  const double v = -s * dr + c * dc;
  return std::sqrt((u / semi_a) * (u / semi_a) + (v / semi_b) * (v / semi_b));
}

namespace {

constexpr int kPlacementAttempts = 10;
constexpr int kMaxRegenerations = 64;

Ellipse jittered_ellipse(SplitMix64& rng, double radius, double shape_jitter) {
  const double ratio = 1.0 + 0.6 * shape_jitter * rng.uniform(-1.0, 1.0);
  Ellipse e;
  e.semi_a = radius * std::sqrt(ratio);
  e.semi_b = radius / std::sqrt(ratio);
  e.angle = rng.uniform(0.0, std::numbers::pi);
  return e;
}

double extent(const Ellipse& e) noexcept { return std::max(e.semi_a, e.semi_b); }

double place_coordinate(SplitMix64& rng, std::size_t size, double margin) {
  const double lo = std::min(margin, 0.5 * static_cast<double>(size) - 1.0);
  const double hi = static_cast<double>(size) - 1.0 - lo;
  return rng.uniform(lo, hi);
}

struct Placement {
  LabelMask mask;
  SceneLayout layout;
};

Placement place(const SceneConfig& cfg, SplitMix64& rng) {
  const double base = 0.14 * static_cast<double>(std::min(cfg.height, cfg.width)) * cfg.size_scale;
  SceneLayout layout;
  layout.core_radius = base * (1.0 + cfg.size_jitter * rng.uniform(-1.0, 1.0));
  layout.core = jittered_ellipse(rng, layout.core_radius, cfg.shape_jitter);

  double outer = extent(layout.core);
  const bool has_dependent = cfg.num_classes >= 3;
  if (has_dependent && cfg.dependency_rule == DependencyRule::ring_around_core) {
    layout.ring_width = 0.45 * layout.core_radius * (1.0 + 0.5 * cfg.size_jitter * rng.uniform(-1.0, 1.0));
    outer += layout.ring_width;
  }
  // Integral core centers make the core pixel count a function of its axes only.
  layout.core.center_row = std::round(place_coordinate(rng, cfg.height, outer + 1.0));
  layout.core.center_col = std::round(place_coordinate(rng, cfg.width, outer + 1.0));

  if (has_dependent) {
    switch (cfg.dependency_rule) {
      case DependencyRule::ring_around_core:
        layout.ring_outer = layout.core;
        layout.ring_outer.semi_a += layout.ring_width;
        layout.ring_outer.semi_b += layout.ring_width;
        break;
      case DependencyRule::satellite_adjacent: {
        layout.dependent = jittered_ellipse(rng, 0.55 * layout.core_radius, cfg.shape_jitter);
        const double dist = layout.core_radius * rng.uniform(1.1, 1.5);
        const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
        layout.dependent.center_row = layout.core.center_row + dist * std::sin(theta);
        layout.dependent.center_col = layout.core.center_col + dist * std::cos(theta);
        break;
      }
      case DependencyRule::none: {
        layout.dependent = jittered_ellipse(rng, 0.55 * layout.core_radius, cfg.shape_jitter);
        layout.dependent.center_row = place_coordinate(rng, cfg.height, extent(layout.dependent));
        layout.dependent.center_col = place_coordinate(rng, cfg.width, extent(layout.dependent));
        break;
      }
    }
  }
  for (int c = 3; c < cfg.num_classes; ++c) {
    Ellipse e = jittered_ellipse(rng, 0.5 * base, cfg.shape_jitter);
    e.center_row = place_coordinate(rng, cfg.height, extent(e));
    e.center_col = place_coordinate(rng, cfg.width, extent(e));
    layout.extra.push_back(e);
  }

  LabelMask mask(cfg.height, cfg.width, cfg.num_classes);
  for (std::size_t r = 0; r < cfg.height; ++r) {
    const auto row = static_cast<double>(r);
    for (std::size_t c = 0; c < cfg.width; ++c) {
      const auto col = static_cast<double>(c);
      int label = 0;
      if (layout.core.radius_at(row, col) <= 1.0) {
        label = 1;
      } else if (has_dependent) {
        const Ellipse& dep = cfg.dependency_rule == DependencyRule::ring_around_core
                                 ? layout.ring_outer
                                 : layout.dependent;
        if (dep.radius_at(row, col) <= 1.0) label = 2;
      }
      if (label == 0) {
        for (std::size_t k = 0; k < layout.extra.size(); ++k) {
          if (layout.extra[k].radius_at(row, col) <= 1.0) {
            label = static_cast<int>(k) + 3;
            break;
          }
        }
      }
      if (label != 0) mask.set(r, c, label);
    }
  }
  return {std::move(mask), std::move(layout)};
}

bool counts_ok(const LabelMask& mask) {
  for (int c = 1; c < mask.num_classes(); ++c) {
    if (mask.count(c) < kMinClassPixels) return false;
  }
  return true;
}

Grid render(const SceneConfig& cfg, const LabelMask& mask, SplitMix64& rng) {
  const auto classes = static_cast<std::size_t>(cfg.num_classes);
  struct Texture {
    double freq_row, freq_col, phase;
  };
  std::vector<Texture> textures(classes);
  for (auto& t : textures) {
    const double cycles = rng.uniform(2.0, 6.0);
    const double theta = rng.uniform(0.0, std::numbers::pi);
    t.freq_row = cycles * std::sin(theta) / static_cast<double>(cfg.height);
    t.freq_col = cycles * std::cos(theta) / static_cast<double>(cfg.width);
    t.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  Grid image(cfg.height, cfg.width);
  for (std::size_t r = 0; r < cfg.height; ++r) {
    for (std::size_t c = 0; c < cfg.width; ++c) {
      const std::size_t label = mask(r, c);
      const Texture& t = textures[label];
      const double wave = std::sin(2.0 * std::numbers::pi *
                                       (t.freq_row * static_cast<double>(r) +
                                        t.freq_col * static_cast<double>(c)) +
                                   t.phase);
      double v = cfg.intensity_means[label] + cfg.texture_contrast * wave;
      if (cfg.intensity_noise_sigma > 0.0) v += cfg.intensity_noise_sigma * rng.normal();
      image(r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return image;
}

}  // namespace

SceneSample generate_scene(const SceneConfig& cfg, std::uint64_t index) {
  cfg.validate();
  std::uint64_t stream_seed = derive_seed(cfg.seed, index);
  for (int round = 0; round < kMaxRegenerations; ++round) {
    SplitMix64 rng(stream_seed);
    for (int attempt = 1; attempt <= kPlacementAttempts; ++attempt) {
      auto placed = place(cfg, rng);
      if (!counts_ok(placed.mask)) continue;
      placed.layout.attempts = round * kPlacementAttempts + attempt;
      SceneSample sample;
      sample.image = render(cfg, placed.mask, rng);
      sample.mask = std::move(placed.mask);
      sample.seed = stream_seed;
      sample.domain_tag = cfg.domain;
      sample.layout = std::move(placed.layout);
      return sample;
    }
    stream_seed = derive_seed(stream_seed, static_cast<std::uint64_t>(round) + 1);
  }
  throw ConfigError("could not place structures with at least " +
                    std::to_string(kMinClassPixels) + " pixels per class");
}

SceneConfig domain_shift(const SceneConfig& cfg) {
  SceneConfig out = cfg;
  for (double& m : out.intensity_means) m = std::clamp(m + 0.15, 0.0, 1.0);
  out.size_scale *= 1.3;
  out.texture_contrast *= 1.5;
  out.seed = derive_seed(cfg.seed, 0x0D0D0D0DULL);
  out.domain = DomainTag::ood;
  return out;
}

Grid add_gaussian_noise(const Grid& image, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ArgumentError("noise sigma must be non-negative");
  if (sigma == 0.0) return image;
  SplitMix64 rng(seed);
  Grid out = image;
  for (float& v : out.values()) {
    v = static_cast<float>(std::clamp(static_cast<double>(v) + sigma * rng.normal(), 0.0, 1.0));
  }
  return out;
}

Grid add_bernoulli_noise(const Grid& image, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("noise probability must lie in [0, 1]");
  if (p == 0.0) return image;
  SplitMix64 rng(seed);
  Grid out = image;
  const double half = 0.5 * p;
  for (float& v : out.values()) {
    const double u = rng.uniform();
    if (u < half) {
      v = 0.0F;
    } else if (u < p) {
      v = 1.0F;
    }
  }
  return out;
}

}  // namespace specseg
