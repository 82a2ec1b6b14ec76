#include "specseg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "specseg/metrics.hpp"
#include "specseg/random.hpp"

namespace specseg {

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(momentum > 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in (0, 1)");
  if (!(weight_decay > 0.0)) throw ConfigError("weight_decay must be positive");
  if (epochs < 1) throw ConfigError("epochs must be positive");
  loss.validate();
}

SceneSample augment_sample(const SceneSample& sample, unsigned code) {
  const std::size_t h = sample.image.height();
  const std::size_t w = sample.image.width();
  const bool transpose = (code & 4U) != 0 && h == w;
  const bool flip_cols = (code & 1U) != 0;
  const bool flip_rows = (code & 2U) != 0;
  if (!transpose && !flip_cols && !flip_rows) return sample;

  SceneSample out = sample;
  std::vector<std::uint8_t> labels(sample.mask.size());
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      std::size_t sr = flip_rows ? h - 1 - r : r;
      std::size_t sc = flip_cols ? w - 1 - c : c;
      if (transpose) std::swap(sr, sc);
      out.image(r, c) = sample.image(sr, sc);
      labels[r * w + c] = sample.mask(sr, sc);
    }
  }
  out.mask = LabelMask(h, w, sample.mask.num_classes(), std::move(labels));
  return out;
}

template <class T>
BasicBatchGradient<T> batch_gradient(const BasicNetParams<T>& params,
                                     std::span<const SceneSample> batch, const LossConfig& loss,
                                     const FftPlan& plan) {
  if (batch.empty()) throw ArgumentError("batch_gradient: empty batch");
  BasicBatchGradient<T> out;
  std::vector<double> acc(params.count(), 0.0);
  for (const auto& sample : batch) {
    const auto fwd = forward(params, sample.image);
    const auto l = final_loss(fwd.probs, sample.mask, loss, plan);
    const auto g = backward(params, fwd.cache, l.grad);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += static_cast<double>(g[i]);
    out.total += l.value;
    out.spatial += l.spatial;
    out.spectral += l.spectral;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.total *= inv;
  out.spatial *= inv;
  out.spectral *= inv;
  out.grads.resize(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) out.grads[i] = static_cast<T>(acc[i] * inv);
  return out;
}

template BasicBatchGradient<float> batch_gradient<float>(const NetParams&,
                                                         std::span<const SceneSample>,
                                                         const LossConfig&, const FftPlan&);
template BasicBatchGradient<double> batch_gradient<double>(const BasicNetParams<double>&,
                                                           std::span<const SceneSample>,
                                                           const LossConfig&, const FftPlan&);

void sgd_step(NetParams& params, std::span<const float> grads, const TrainConfig& cfg) {
  if (grads.size() != params.count()) throw InternalError("gradient size does not match parameters");
  const auto lr = static_cast<float>(cfg.learning_rate);
  const auto mu = static_cast<float>(cfg.momentum);
  const auto decay = static_cast<float>(cfg.learning_rate * cfg.weight_decay);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    float& v = params.momentum[i];
    float& w = params.values[i];
    v = mu * v + grads[i];
    w = w - lr * v - decay * w;
  }
}

double foreground_dsc(const LabelMask& pred, const LabelMask& truth) {
  double acc = 0.0;
  for (int c = 1; c < truth.num_classes(); ++c) acc += dsc(confusion(pred, truth, c));
  return acc / static_cast<double>(truth.num_classes() - 1);
}

Channels predict(const NetParams& params, const Grid& image) {
  return forward(params, image).probs;
}

namespace {

double mean_val_dsc(const NetParams& params, std::span<const SceneSample> val_set) {
  if (val_set.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : val_set) acc += foreground_dsc(argmax(predict(params, s.image)), s.mask);
  return acc / static_cast<double>(val_set.size());
}

}  // namespace

TrainResult train(std::span<const SceneSample> train_set, std::span<const SceneSample> val_set,
                  const NetSpec& net, const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  net.validate();
  if (train_set.empty()) throw ArgumentError("training set is empty");
  const std::size_t h = train_set.front().image.height();
  const std::size_t w = train_set.front().image.width();
  for (const auto& s : train_set) {
    if (s.image.height() != h || s.image.width() != w) {
      throw ArgumentError("training scenes differ in size");
    }
    if (s.mask.num_classes() != net.num_classes) {
      throw ArgumentError("scene class count does not match the network");
    }
  }
  const FftPlan plan(h, w);

  TrainResult result;
  NetParams params = init_params<float>(net, cfg.seed);
  result.params = params;
  result.best_val_dsc = -std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train_set.size());
  const unsigned augment_codes = h == w ? 8U : 4U;
  std::size_t batch_index = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    SplitMix64 rng(derive_seed(cfg.seed, 0x5EED0000ULL + static_cast<std::uint64_t>(epoch)));
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i-- > 1;) {
      std::swap(order[i], order[rng.uniform_index(i + 1)]);
    }

    EpochLog log;
    log.epoch = epoch;
    std::size_t batches = 0;
    std::vector<SceneSample> batch;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) {
        const auto& s = train_set[order[k]];
        if (cfg.augment) {
          batch.push_back(augment_sample(s, static_cast<unsigned>(rng.uniform_index(augment_codes))));
        } else {
          batch.push_back(s);
        }
      }
      const auto bg = batch_gradient(params, batch, cfg.loss, plan);
      if (!std::isfinite(bg.total)) {
        throw NumericalError("non-finite loss at batch " + std::to_string(batch_index) +
                             " (epoch " + std::to_string(epoch) + ")");
      }
      sgd_step(params, bg.grads, cfg);
      log.spatial_loss += bg.spatial;
      log.spectral_loss += bg.spectral;
      log.total_loss += bg.total;
      ++batches;
      ++batch_index;
    }
    const double inv = 1.0 / static_cast<double>(batches);
    log.spatial_loss *= inv;
    log.spectral_loss = cfg.loss.lambda == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                               : log.spectral_loss * inv;
    log.total_loss *= inv;
    log.val_dsc = val_set.empty() ? std::numeric_limits<double>::quiet_NaN()
                                  : mean_val_dsc(params, val_set);
    // Without a validation set the last epoch is kept.
    if (val_set.empty() || log.val_dsc > result.best_val_dsc) {
      result.best_val_dsc = log.val_dsc;
      result.best_epoch = epoch;
      result.params = params;
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

MetricTable evaluate_predictions(std::span<const Channels> probs, std::span<const LabelMask> truths,
                                 const FftPlan& plan, int num_bins) {
  if (probs.size() != truths.size()) {
    throw ArgumentError("evaluate: prediction and truth counts differ");
  }
  MetricTable table;
  if (truths.empty()) return table;
  const int classes = truths.front().num_classes();
  table.mean_per_class.resize(static_cast<std::size_t>(classes - 1));
  for (int c = 1; c < classes; ++c) table.mean_per_class[static_cast<std::size_t>(c - 1)].class_index = c;

  for (std::size_t i = 0; i < truths.size(); ++i) {
    const auto& truth = truths[i];
    if (truth.num_classes() != classes) throw ArgumentError("evaluate: class counts differ");
    LabelMask pred = argmax(probs[i]);
    if (probs[i].size() == 1) {
      // Single foreground channel: threshold at 0.5.
      std::vector<std::uint8_t> labels(truth.size());
      for (std::size_t p = 0; p < labels.size(); ++p) labels[p] = probs[i][0][p] > 0.5F ? 1 : 0;
      pred = LabelMask(truth.height(), truth.width(), 2, std::move(labels));
    }
    SampleMetrics sm;
    sm.index = i;
    for (int c = 1; c < classes; ++c) {
      const auto cc = confusion(pred, truth, c);
      ClassMetrics m;
      m.class_index = c;
      m.dsc = dsc(cc);
      m.iou = iou(cc);
      m.sensitivity = sensitivity(cc);
      m.specificity = specificity(cc);
      m.accuracy = accuracy(cc);
      m.hd95 = hd95(pred, truth, c);
      m.spectral_corr = spectral_correlation_metric(pred, truth, c, plan);
      sm.classes.push_back(m);
    }
    const auto report = calibration(probs[i], truth, num_bins);
    sm.ece = report.ece;
    sm.mce = report.mce;
    table.samples.push_back(std::move(sm));
  }

  // Sums first, one division at the end, so means of exact values stay exact.
  const auto n = static_cast<double>(table.samples.size());
  const auto fg = static_cast<double>(classes - 1);
  for (const auto& sm : table.samples) {
    for (std::size_t k = 0; k < sm.classes.size(); ++k) {
      auto& agg = table.mean_per_class[k];
      const auto& m = sm.classes[k];
      agg.dsc += m.dsc;
      agg.iou += m.iou;
      agg.sensitivity += m.sensitivity;
      agg.specificity += m.specificity;
      agg.accuracy += m.accuracy;
      agg.hd95 += m.hd95;
      agg.spectral_corr += m.spectral_corr;
    }
    table.ece += sm.ece;
    table.mce += sm.mce;
  }
  table.ece /= n;
  table.mce /= n;
  for (auto& agg : table.mean_per_class) {
    table.mean_dsc += agg.dsc;
    table.mean_iou += agg.iou;
    table.mean_hd95 += agg.hd95;
    table.mean_spectral_corr += agg.spectral_corr;
    agg.dsc /= n;
    agg.iou /= n;
    agg.sensitivity /= n;
    agg.specificity /= n;
    agg.accuracy /= n;
    agg.hd95 /= n;
    agg.spectral_corr /= n;
  }
  table.mean_dsc /= n * fg;
  table.mean_iou /= n * fg;
  table.mean_hd95 /= n * fg;
  table.mean_spectral_corr /= n * fg;
  return table;
}

MetricTable evaluate(const NetParams& params, std::span<const SceneSample> dataset,
                     const FftPlan& plan, int num_bins) {
  std::vector<Channels> probs;
  std::vector<LabelMask> truths;
  probs.reserve(dataset.size());
  truths.reserve(dataset.size());
  for (const auto& s : dataset) {
    probs.push_back(predict(params, s.image));
    truths.push_back(s.mask);
  }
  return evaluate_predictions(probs, truths, plan, num_bins);
}

}  // namespace specseg
