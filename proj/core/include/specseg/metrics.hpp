#pragma once

// Evaluation metrics over hard label masks and probability maps.
//
// Ratio metrics return 1.0 when their denominator is zero (the class is
// absent from both masks). HD95 returns 0 when both masks lack the class and
// the image diagonal when exactly one does.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "specseg/fft.hpp"
#include "specseg/grid.hpp"

namespace specseg {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  [[nodiscard]] std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

[[nodiscard]] ConfusionCounts confusion(const LabelMask& pred, const LabelMask& truth,
                                        int class_index);

[[nodiscard]] double dsc(const ConfusionCounts& c) noexcept;
[[nodiscard]] double iou(const ConfusionCounts& c) noexcept;
[[nodiscard]] double sensitivity(const ConfusionCounts& c) noexcept;
[[nodiscard]] double specificity(const ConfusionCounts& c) noexcept;
[[nodiscard]] double accuracy(const ConfusionCounts& c) noexcept;

/// Exact squared Euclidean distance from every pixel to the nearest pixel
/// where `inside` is true. Returns an empty vector when no pixel is inside.
[[nodiscard]] std::vector<std::int64_t> squared_distance_transform(
    std::span<const std::uint8_t> inside, std::size_t height, std::size_t width);

/// 95th-percentile symmetric Hausdorff distance in pixels. The percentile is
/// the order statistic at index ceil(0.95 n) - 1 of the sorted distances.
[[nodiscard]] double hd95(const LabelMask& pred, const LabelMask& truth, int class_index);

struct ReliabilityBin {
  double confidence_mean = 0.0;
  double accuracy = 0.0;
  std::uint64_t count = 0;
};

struct CalibrationReport {
  double ece = 0.0;
  double mce = 0.0;
  int num_bins = 10;
  std::vector<ReliabilityBin> per_bin;
};

/// Pools confidence/correctness statistics over any number of images.
class CalibrationAccumulator {
 public:
  explicit CalibrationAccumulator(int num_bins = 10);

  /// `probs` holds one channel per class, or one foreground channel for a
  /// two-class mask. Throws ArgumentError for probabilities outside [0, 1].
  void add(const Channels& probs, const LabelMask& truth);

  [[nodiscard]] CalibrationReport report() const;
  [[nodiscard]] int num_bins() const noexcept { return static_cast<int>(conf_sum_.size()); }

 private:
  std::vector<double> conf_sum_;
  std::vector<std::uint64_t> correct_;
  std::vector<std::uint64_t> count_;
};

[[nodiscard]] CalibrationReport calibration(const Channels& probs, const LabelMask& truth,
                                            int num_bins = 10);

/// SCC between the one-hot grids of one class; 1.0 when both are empty.
[[nodiscard]] double spectral_correlation_metric(const LabelMask& pred, const LabelMask& truth,
                                                 int class_index, const FftPlan& plan);

}  // namespace specseg
