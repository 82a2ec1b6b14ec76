#pragma once

// Procedural segmentation scenes with controllable intra-class variation
// (size and shape jitter) and inter-class spatial dependency.
//
// Class 0 is background and class 1 a rotated elliptical core. Class 2 is
// the dependent structure: a ring hugging the core, a satellite blob next to
// it, or (rule `none`) a blob placed independently. Classes >= 3 are
// independent blobs. Everything is a pure function of (config, index).

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "specseg/grid.hpp"

namespace specseg {

enum class DependencyRule { none, ring_around_core, satellite_adjacent };
enum class DomainTag { iid, ood };

[[nodiscard]] std::string_view to_string(DependencyRule rule) noexcept;
[[nodiscard]] DependencyRule parse_dependency_rule(std::string_view text);
[[nodiscard]] std::string_view to_string(DomainTag tag) noexcept;
[[nodiscard]] DomainTag parse_domain_tag(std::string_view text);

struct SceneConfig {
  std::size_t height = 64;
  std::size_t width = 64;
  int num_classes = 3;
  double size_jitter = 0.3;      // relative radius variation, [0, 1)
  double shape_jitter = 0.3;     // relative axis-ratio variation, [0, 1)
  std::vector<double> intensity_means{0.2, 0.6, 0.4};
  double intensity_noise_sigma = 0.08;
  double texture_contrast = 0.08;  // amplitude of the in-region sinusoidal texture
  double size_scale = 1.0;         // multiplies every structure radius
  DependencyRule dependency_rule = DependencyRule::ring_around_core;
  DomainTag domain = DomainTag::iid;
  std::uint64_t seed = 1;

  /// Throws ConfigError when the configuration cannot produce scenes.
  void validate() const;
};

/// Rotated ellipse: points with (u/a)^2 + (v/b)^2 <= 1 in the frame rotated by `angle`.
struct Ellipse {
  double center_row = 0.0;
  double center_col = 0.0;
  double semi_a = 1.0;
  double semi_b = 1.0;
  double angle = 0.0;

  /// Normalized elliptical radius; <= 1 inside.
  [[nodiscard]] double radius_at(double row, double col) const noexcept;
};

/// Geometry the generator placed, exposed for verification.
struct SceneLayout {
  Ellipse core;
  double core_radius = 0.0;   // mean radius before eccentricity
  double ring_width = 0.0;    // ring rule only
  Ellipse ring_outer;         // ring rule only: core axes grown by ring_width
  Ellipse dependent;          // satellite / independent rules
  std::vector<Ellipse> extra; // classes >= 3
  int attempts = 1;
};

struct SceneSample {
  Grid image;  // intensities in [0, 1]
  LabelMask mask;
  std::uint64_t seed = 0;  // seed of the stream that produced the final scene
  DomainTag domain_tag = DomainTag::iid;
  SceneLayout layout;
};

/// Minimum pixel count of every foreground class in a generated scene.
inline constexpr std::size_t kMinClassPixels = 25;

[[nodiscard]] SceneSample generate_scene(const SceneConfig& cfg, std::uint64_t index);

/// Appearance shift for out-of-distribution testing: intensities +0.15
/// (clamped to [0, 1]), structure sizes x1.3, texture contrast x1.5, a new
/// derived seed and domain tag `ood`. Geometry rules are unchanged.
[[nodiscard]] SceneConfig domain_shift(const SceneConfig& cfg);

/// Additive N(0, sigma^2) per pixel, clamped to [0, 1].
[[nodiscard]] Grid add_gaussian_noise(const Grid& image, double sigma, std::uint64_t seed);

/// Salt-and-pepper: each pixel becomes 0 with probability p/2, 1 with
/// probability p/2, and is kept otherwise.
[[nodiscard]] Grid add_bernoulli_noise(const Grid& image, double p, std::uint64_t seed);

}  // namespace specseg
