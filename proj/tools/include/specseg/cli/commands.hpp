#pragma once

// Experiment commands. Each cmd_* throws on failure; run() maps exceptions
// to exit codes: 0 success, 2 usage/config/file errors, 3 numerical failure.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "specseg/synth.hpp"
#include "specseg/trainer.hpp"

namespace specseg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr const char* kToolkitVersion = "0.1.0";

namespace fs = std::filesystem;

/// A dataset directory: dataset.cfg, images/NNNNN.sgf, masks/NNNNN.pgm.
struct Dataset {
  SceneConfig config;
  std::uint64_t start_index = 0;
  std::vector<SceneSample> samples;
};

[[nodiscard]] Dataset load_dataset(const fs::path& dir);
void save_dataset(const fs::path& dir, const Dataset& dataset);

struct SynthOptions {
  fs::path config;  // optional; defaults when empty
  std::size_t count = 0;
  std::uint64_t start_index = 0;
  bool ood = false;  // apply domain_shift before generating
  fs::path out_dir;
};

struct TrainOptions {
  fs::path data;
  fs::path val_data;          // optional
  double val_fraction = 0.1;  // tail split when val_data is empty
  fs::path config;            // optional
  std::optional<int> epochs;
  std::optional<double> lambda;
  std::optional<std::uint64_t> seed;
  fs::path out_dir;
};

enum class NoiseKind { none, gaussian, bernoulli };

struct EvalOptions {
  fs::path checkpoint;
  fs::path data;
  fs::path config;  // network keys; optional
  NoiseKind noise = NoiseKind::none;
  double noise_level = 0.01;
  std::uint64_t noise_seed = 0;
  int bins = 10;
  fs::path out_dir;
};

struct SweepOptions {
  fs::path data;
  fs::path val_data;
  double val_fraction = 0.1;
  fs::path test_data;
  fs::path config;
  std::vector<double> lambdas{0.1, 0.2, 0.3, 0.5, 0.9};
  std::optional<int> epochs;
  fs::path out_dir;
};

struct SpectrumOptions {
  fs::path mask;                   // ground-truth (or any) mask
  fs::path pred;                   // predicted mask
  fs::path checkpoint;             // with image: prediction from the network
  fs::path image;
  fs::path config;
  std::optional<int> class_index;  // default: foreground (label != 0)
  fs::path out;
};

struct CalibOptions {
  fs::path checkpoint;
  fs::path data;
  fs::path config;
  int bins = 10;
  fs::path out_dir;
};

void cmd_synth(const SynthOptions& opts, std::ostream& log);
void cmd_train(const TrainOptions& opts, std::ostream& log);
void cmd_eval(const EvalOptions& opts, std::ostream& log);
void cmd_sweep(const SweepOptions& opts, std::ostream& log);
/// Returns the spectral correlation when both truth and prediction were given.
std::optional<double> cmd_spectrum(const SpectrumOptions& opts, std::ostream& log);
void cmd_calib(const CalibOptions& opts, std::ostream& log);

/// Noisy copy of an image; the stream for sample `index` is derive_seed(seed, index).
[[nodiscard]] Grid apply_noise(const Grid& image, NoiseKind kind, double level, std::uint64_t seed,
                               std::uint64_t index);
[[nodiscard]] NoiseKind parse_noise_kind(const std::string& text);

/// Parses arguments (without the program name) and dispatches.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace specseg::cli
