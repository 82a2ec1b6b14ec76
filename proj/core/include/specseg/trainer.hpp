#pragma once

// SGD training and evaluation of the segmenter.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "specseg/fft.hpp"
#include "specseg/losses.hpp"
#include "specseg/network.hpp"
#include "specseg/synth.hpp"

namespace specseg {

struct TrainConfig {
  std::size_t batch_size = 8;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int epochs = 30;
  std::uint64_t seed = 1;
  LossConfig loss;
  bool augment = true;

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double spatial_loss = 0.0;
  /// Mean unweighted spectral term; NaN when lambda == 0 (not evaluated).
  double spectral_loss = 0.0;
  double total_loss = 0.0;
  double val_dsc = 0.0;
};

struct TrainResult {
  NetParams params;  // parameters of the best validation epoch
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_dsc = 0.0;
};

/// Mean-reduced loss and parameter gradient over a batch.
template <class T>
struct BasicBatchGradient {
  double total = 0.0;
  double spatial = 0.0;
  double spectral = 0.0;
  std::vector<T> grads;
};

/// Flip / rotate-by-90 variant `code` of a scene: bit 0 flips columns, bit 1
/// flips rows, bit 2 transposes (square scenes only).
[[nodiscard]] SceneSample augment_sample(const SceneSample& sample, unsigned code);

template <class T>
[[nodiscard]] BasicBatchGradient<T> batch_gradient(const BasicNetParams<T>& params,
                                                   std::span<const SceneSample> batch,
                                                   const LossConfig& loss, const FftPlan& plan);

/// Momentum SGD with decoupled weight decay:
///   v <- momentum v + g;  w <- w - lr v - lr wd w.
void sgd_step(NetParams& params, std::span<const float> grads, const TrainConfig& cfg);

/// Mean foreground DSC of the argmax prediction against the mask.
[[nodiscard]] double foreground_dsc(const LabelMask& pred, const LabelMask& truth);

[[nodiscard]] TrainResult train(std::span<const SceneSample> train_set,
                                std::span<const SceneSample> val_set, const NetSpec& net,
                                const TrainConfig& cfg,
                                const std::function<void(const EpochLog&)>& on_epoch = {});

struct ClassMetrics {
  int class_index = 0;
  double dsc = 0.0;
  double iou = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double accuracy = 0.0;
  double hd95 = 0.0;
  double spectral_corr = 0.0;
};

struct SampleMetrics {
  std::size_t index = 0;
  std::vector<ClassMetrics> classes;  // foreground classes 1..C-1
  double ece = 0.0;
  double mce = 0.0;
};

struct MetricTable {
  std::vector<SampleMetrics> samples;
  std::vector<ClassMetrics> mean_per_class;  // mean over samples
  double mean_dsc = 0.0;   // over samples and foreground classes
  double mean_iou = 0.0;
  double mean_hd95 = 0.0;
  double mean_spectral_corr = 0.0;
  double ece = 0.0;        // mean of per-sample ECE
  double mce = 0.0;        // mean of per-sample MCE
};

/// Metrics of given probability maps. Sample i is scored against truths[i].
[[nodiscard]] MetricTable evaluate_predictions(std::span<const Channels> probs,
                                               std::span<const LabelMask> truths,
                                               const FftPlan& plan, int num_bins = 10);

[[nodiscard]] Channels predict(const NetParams& params, const Grid& image);

[[nodiscard]] MetricTable evaluate(const NetParams& params, std::span<const SceneSample> dataset,
                                   const FftPlan& plan, int num_bins = 10);

}  // namespace specseg
