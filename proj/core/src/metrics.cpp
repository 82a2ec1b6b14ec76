#include "specseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "specseg/losses.hpp"

namespace specseg {

namespace {

void check_class(const LabelMask& m, int class_index, const char* what) {
  if (class_index < 0 || class_index >= m.num_classes()) {
    throw ArgumentError(std::string(what) + ": class index " + std::to_string(class_index) +
                        " out of range");
  }
}

double ratio_or_one(double num, double den) noexcept { return den == 0.0 ? 1.0 : num / den; }

}  // namespace

ConfusionCounts confusion(const LabelMask& pred, const LabelMask& truth, int class_index) {
  require_same_shape(pred, truth, "confusion");
  check_class(pred, class_index, "confusion");
  check_class(truth, class_index, "confusion");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == class_index;
    const bool t = truth[i] == class_index;
    if (p && t) {
      ++c.tp;
    } else if (p) {
      ++c.fp;
    } else if (t) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

double dsc(const ConfusionCounts& c) noexcept {
  return ratio_or_one(2.0 * static_cast<double>(c.tp), static_cast<double>(2 * c.tp + c.fp + c.fn));
}

double iou(const ConfusionCounts& c) noexcept {
  return ratio_or_one(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp + c.fn));
}

double sensitivity(const ConfusionCounts& c) noexcept {
  return ratio_or_one(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
}

double specificity(const ConfusionCounts& c) noexcept {
  return ratio_or_one(static_cast<double>(c.tn), static_cast<double>(c.tn + c.fp));
}

double accuracy(const ConfusionCounts& c) noexcept {
  return ratio_or_one(static_cast<double>(c.tp + c.tn), static_cast<double>(c.total()));
}

namespace {

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) over the finite
// sites of one line. `f` holds squared distances or -1 for "no site".
void distance_1d(std::vector<std::int64_t>& f, std::vector<std::int64_t>& out,
                 std::vector<std::int64_t>& sites, std::vector<double>& bounds) {
  const auto n = static_cast<std::int64_t>(f.size());
  sites.clear();
  bounds.clear();
  for (std::int64_t q = 0; q < n; ++q) {
    if (f[q] < 0) continue;
    const double fq = static_cast<double>(f[q] + q * q);
    while (!sites.empty()) {
      const std::int64_t v = sites.back();
      const double s = (fq - static_cast<double>(f[v] + v * v)) / static_cast<double>(2 * (q - v));
      if (s <= bounds.back()) {
        sites.pop_back();
        bounds.pop_back();
        continue;
      }
      sites.push_back(q);
      bounds.push_back(s);
      break;
    }
    if (sites.empty()) {
      sites.push_back(q);
      bounds.push_back(-std::numeric_limits<double>::infinity());
    }
  }
  if (sites.empty()) {
    std::fill(out.begin(), out.end(), -1);
    return;
  }
  std::size_t k = 0;
  for (std::int64_t q = 0; q < n; ++q) {
    while (k + 1 < sites.size() && bounds[k + 1] < static_cast<double>(q)) ++k;
    const std::int64_t v = sites[k];
    out[q] = (q - v) * (q - v) + f[v];
  }
}

}  // namespace

std::vector<std::int64_t> squared_distance_transform(std::span<const std::uint8_t> inside,
                                                     std::size_t height, std::size_t width) {
  if (inside.size() != height * width) {
    throw ArgumentError("distance transform: data length does not match dimensions");
  }
  if (std::none_of(inside.begin(), inside.end(), [](std::uint8_t v) { return v != 0; })) {
    return {};
  }
  std::vector<std::int64_t> dist(height * width);
  std::vector<std::int64_t> line;
  std::vector<std::int64_t> line_out;
  std::vector<std::int64_t> sites;
  std::vector<double> bounds;

  line.resize(height);
  line_out.resize(height);
  for (std::size_t c = 0; c < width; ++c) {
    for (std::size_t r = 0; r < height; ++r) line[r] = inside[r * width + c] ? 0 : -1;
    distance_1d(line, line_out, sites, bounds);
    for (std::size_t r = 0; r < height; ++r) dist[r * width + c] = line_out[r];
  }
  line.resize(width);
  line_out.resize(width);
  for (std::size_t r = 0; r < height; ++r) {
    std::copy_n(dist.begin() + static_cast<std::ptrdiff_t>(r * width), width, line.begin());
    distance_1d(line, line_out, sites, bounds);
    std::copy(line_out.begin(), line_out.end(), dist.begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  return dist;
}

namespace {

/// Percentile of distances from pixels of `from` to the set encoded by `dist`.
double directed_p95(const std::vector<std::uint8_t>& from, const std::vector<std::int64_t>& dist) {
  std::vector<std::int64_t> d;
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (from[i]) d.push_back(dist[i]);
  }
  const auto n = d.size();
  const auto idx = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n))) - 1;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(idx), d.end());
  return std::sqrt(static_cast<double>(d[idx]));
}

}  // namespace

double hd95(const LabelMask& pred, const LabelMask& truth, int class_index) {
  require_same_shape(pred, truth, "hd95");
  check_class(pred, class_index, "hd95");
  check_class(truth, class_index, "hd95");
  const std::size_t h = pred.height();
  const std::size_t w = pred.width();
  std::vector<std::uint8_t> a(pred.size());
  std::vector<std::uint8_t> b(pred.size());
  bool any_a = false;
  bool any_b = false;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    a[i] = pred[i] == class_index;
    b[i] = truth[i] == class_index;
    any_a = any_a || a[i];
    any_b = any_b || b[i];
  }
  if (!any_a && !any_b) return 0.0;
  if (!any_a || !any_b) {
    return std::sqrt(static_cast<double>(h * h + w * w));
  }
  const auto dist_to_a = squared_distance_transform(a, h, w);
  const auto dist_to_b = squared_distance_transform(b, h, w);
  return std::max(directed_p95(a, dist_to_b), directed_p95(b, dist_to_a));
}

CalibrationAccumulator::CalibrationAccumulator(int num_bins) {
  if (num_bins < 1) throw ArgumentError("calibration needs at least one bin");
  const auto n = static_cast<std::size_t>(num_bins);
  conf_sum_.assign(n, 0.0);
  correct_.assign(n, 0);
  count_.assign(n, 0);
}

void CalibrationAccumulator::add(const Channels& probs, const LabelMask& truth) {
  const auto classes = static_cast<std::size_t>(truth.num_classes());
  const bool binary = probs.size() == 1 && classes == 2;
  if (!binary && probs.size() != classes) {
    throw ArgumentError("calibration: channel count does not match class count");
  }
  for (const auto& ch : probs) {
    require_same_shape(ch, truth, "calibration");
    for (const float v : ch.values()) {
      if (!(v >= 0.0F && v <= 1.0F)) {
        throw ArgumentError("calibration: probability outside [0, 1]");
      }
    }
  }
  const auto bins = conf_sum_.size();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    double conf = 0.0;
    std::size_t label = 0;
    if (binary) {
      const double p = probs[0][i];
      label = p > 0.5 ? 1 : 0;
      conf = label == 1 ? p : 1.0 - p;
    } else {
      conf = probs[0][i];
      for (std::size_t c = 1; c < probs.size(); ++c) {
        if (probs[c][i] > conf) {
          conf = probs[c][i];
          label = c;
        }
      }
    }
    const auto bin = std::min(static_cast<std::size_t>(conf * static_cast<double>(bins)), bins - 1);
    conf_sum_[bin] += conf;
    count_[bin] += 1;
    correct_[bin] += label == truth[i] ? 1 : 0;
  }
}

CalibrationReport CalibrationAccumulator::report() const {
  CalibrationReport r;
  r.num_bins = num_bins();
  std::uint64_t total = 0;
  for (const auto c : count_) total += c;
  for (std::size_t b = 0; b < count_.size(); ++b) {
    ReliabilityBin bin;
    bin.count = count_[b];
    if (bin.count > 0) {
      const auto n = static_cast<double>(bin.count);
      bin.confidence_mean = conf_sum_[b] / n;
      bin.accuracy = static_cast<double>(correct_[b]) / n;
      const double gap = std::abs(bin.accuracy - bin.confidence_mean);
      r.ece += n / static_cast<double>(total) * gap;
      r.mce = std::max(r.mce, gap);
    }
    r.per_bin.push_back(bin);
  }
  return r;
}

CalibrationReport calibration(const Channels& probs, const LabelMask& truth, int num_bins) {
  CalibrationAccumulator acc(num_bins);
  acc.add(probs, truth);
  return acc.report();
}

double spectral_correlation_metric(const LabelMask& pred, const LabelMask& truth, int class_index,
                                   const FftPlan& plan) {
  require_same_shape(pred, truth, "spectral_correlation_metric");
  check_class(truth, class_index, "spectral_correlation_metric");
  const auto p = one_hot<double>(pred, class_index);
  const auto t = one_hot<double>(truth, class_index);
  if (squared_norm(p) == 0.0 && squared_norm(t) == 0.0) return 1.0;
  return scc(p, t, plan);
}

}  // namespace specseg
