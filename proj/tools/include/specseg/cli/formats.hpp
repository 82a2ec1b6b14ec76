#pragma once

// On-disk formats used by the command-line tool.
//
// Masks: binary PGM ("P5"), maxval = num_classes - 1, one byte per pixel.
// Images and probability maps: SGF1 =
//   "SGF1" | u32 height | u32 width | u32 channels | f32 values
// with all integers and floats little-endian, channels stored one after
// another, each channel row-major.
// Spectrum renderings: 8-bit PGM with maxval 255.
// Configs: flat "key = value" lines; '#' starts a comment.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "specseg/grid.hpp"
#include "specseg/synth.hpp"
#include "specseg/trainer.hpp"

namespace specseg::cli {

void write_pgm_mask(std::ostream& out, const LabelMask& mask);
[[nodiscard]] LabelMask read_pgm_mask(std::istream& in);
void save_pgm_mask(const std::filesystem::path& path, const LabelMask& mask);
[[nodiscard]] LabelMask load_pgm_mask(const std::filesystem::path& path);

/// Values in [0, 1] are scaled to 0..255 and rounded.
void save_pgm_image(const std::filesystem::path& path, const Grid& image);

void write_sgf(std::ostream& out, const Channels& channels);
[[nodiscard]] Channels read_sgf(std::istream& in);
void save_sgf(const std::filesystem::path& path, const Channels& channels);
[[nodiscard]] Channels load_sgf(const std::filesystem::path& path);

/// Ordered key/value pairs from a config file.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, std::string value);
  [[nodiscard]] bool has(const std::string& key) const;
  [[nodiscard]] std::string get(const std::string& key, const std::string& fallback) const;
  [[nodiscard]] double get_double(const std::string& key, double fallback) const;
  [[nodiscard]] long long get_int(const std::string& key, long long fallback) const;
  [[nodiscard]] std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;
  [[nodiscard]] std::vector<double> get_doubles(const std::string& key,
                                                std::vector<double> fallback) const;

  /// Throws ConfigError naming the first key not in `known`.
  void require_known(const std::vector<std::string>& known) const;

  [[nodiscard]] const std::map<std::string, std::string>& entries() const noexcept { return entries_; }
  void write(std::ostream& out) const;

 private:
  std::map<std::string, std::string> entries_;
};

/// Shortest round-trip text of a double ("%.17g" trimmed).
[[nodiscard]] std::string format_exact(double v);
/// Six significant digits, '.' decimal separator.
[[nodiscard]] std::string format_g6(double v);

[[nodiscard]] SceneConfig scene_config_from(const KeyValueConfig& kv);
[[nodiscard]] KeyValueConfig to_key_values(const SceneConfig& cfg);

/// Training keys plus network keys (widths, depth, binary_head).
[[nodiscard]] TrainConfig train_config_from(const KeyValueConfig& kv);
[[nodiscard]] NetSpec net_spec_from(const KeyValueConfig& kv, int num_classes);
[[nodiscard]] KeyValueConfig to_key_values(const TrainConfig& cfg, const NetSpec& net);

}  // namespace specseg::cli
