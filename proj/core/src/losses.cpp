#include "specseg/losses.hpp"

#include <cmath>
#include <string>

namespace specseg {

void LossConfig::validate() const {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw ArgumentError("lambda must be finite and non-negative");
  }
  if (!(dice_epsilon > 0.0) || !std::isfinite(dice_epsilon)) {
    throw ArgumentError("dice_epsilon must be positive");
  }
  if (!(bce_clamp > 0.0 && bce_clamp < 0.5)) {
    throw ArgumentError("bce_clamp must lie in (0, 0.5)");
  }
}

template <class T>
BasicLossResult<T> bce(const BasicGrid<T>& pred, const BasicGrid<T>& target, double clamp) {
  require_same_shape(pred, target, "bce");
  const double lo = clamp;
  const double hi = 1.0 - clamp;
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  BasicLossResult<T> out;
  out.grad.emplace_back(pred.height(), pred.width());
  auto& grad = out.grad.front();
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double raw = static_cast<double>(pred[i]);
    const double t = static_cast<double>(target[i]);
    const bool clamped = raw < lo || raw > hi;
    const double p = clamped ? (raw < lo ? lo : hi) : raw;
    acc -= t * std::log(p) + (1.0 - t) * std::log1p(-p);
    grad[i] = clamped ? T{0} : static_cast<T>((p - t) / (p * (1.0 - p)) * inv_n);
  }
  out.value = acc * inv_n;
  return out;
}

template <class T>
BasicLossResult<T> soft_dice(const BasicGrid<T>& pred, const BasicGrid<T>& target,
                             double epsilon) {
  require_same_shape(pred, target, "soft_dice");
  double inter = 0.0;
  double sum_p = 0.0;
  double sum_t = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = static_cast<double>(pred[i]);
    const double t = static_cast<double>(target[i]);
    inter += p * t;
    sum_p += p;
    sum_t += t;
  }
  const double num = 2.0 * inter + epsilon;
  const double den = sum_p + sum_t + epsilon;
  if (den == 0.0) throw DegenerateInputError("soft_dice: zero denominator (epsilon = 0, empty inputs)");
  BasicLossResult<T> out;
  out.value = num / den;
  out.grad.emplace_back(pred.height(), pred.width());
  auto& grad = out.grad.front();
  const double inv_den2 = 1.0 / (den * den);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double t = static_cast<double>(target[i]);
    grad[i] = static_cast<T>((2.0 * t * den - num) * inv_den2);
  }
  return out;
}

namespace {

/// Targets matching the prediction channel layout: one-hot per class, or the
/// foreground indicator for a single-channel binary head.
template <class T>
BasicChannels<T> channel_targets(std::size_t channels, const LabelMask& target,
                                 const char* what) {
  const auto classes = static_cast<std::size_t>(target.num_classes());
  if (channels == classes) return one_hot_channels<T>(target);
  if (channels == 1 && classes == 2) return {one_hot<T>(target, 1)};
  throw ArgumentError(std::string(what) + ": " + std::to_string(channels) +
                      " prediction channels for " + std::to_string(classes) + " classes");
}

template <class T>
void accumulate(BasicGrid<T>& into, const BasicGrid<T>& g, double weight) {
  for (std::size_t i = 0; i < into.size(); ++i) {
    into[i] = static_cast<T>(static_cast<double>(into[i]) + weight * static_cast<double>(g[i]));
  }
}

}  // namespace

template <class T>
BasicLossResult<T> spatial_loss(const BasicChannels<T>& pred, const LabelMask& target,
                                const LossConfig& cfg) {
  const auto targets = channel_targets<T>(pred.size(), target, "spatial_loss");
  const double inv_c = 1.0 / static_cast<double>(pred.size());
  BasicLossResult<T> out;
  out.grad.reserve(pred.size());
  for (std::size_t c = 0; c < pred.size(); ++c) {
    require_same_shape(pred[c], target, "spatial_loss");
    auto b = bce(pred[c], targets[c], cfg.bce_clamp);
    const auto d = soft_dice(pred[c], targets[c], cfg.dice_epsilon);
    out.value += inv_c * (b.value + 1.0 - d.value);
    auto& g = b.grad.front();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] = static_cast<T>(inv_c * (static_cast<double>(g[i]) - static_cast<double>(d.grad[0][i])));
    }
    out.grad.push_back(std::move(g));
  }
  return out;
}

namespace {

struct SccParts {
  SpectrumGrid target_spec;
  SpectrumGrid pred_spec;
  double numerator = 0.0;
  double denominator = 0.0;
};

template <class T>
SccParts scc_parts(const BasicGrid<T>& pred, const BasicGrid<T>& target, const FftPlan& plan) {
  require_same_shape(pred, target, "scc");
  SccParts parts{fft2(plan, target), fft2(plan, pred)};
  for (std::size_t k = 0; k < parts.target_spec.size(); ++k) {
    const auto y = parts.target_spec[k];
    const auto p = parts.pred_spec[k];
    parts.numerator += 2.0 * (y.real() * p.real() + y.imag() * p.imag());
    parts.denominator += std::norm(y) + std::norm(p);
  }
  if (parts.denominator == 0.0) {
    throw DegenerateInputError("scc: prediction and target are both identically zero");
  }
  return parts;
}

}  // namespace

template <class T>
double scc(const BasicGrid<T>& pred, const BasicGrid<T>& target, const FftPlan& plan) {
  const auto parts = scc_parts(pred, target, plan);
  return parts.numerator / parts.denominator;
}

template <class T>
BasicLossResult<T> spectral_loss(const BasicGrid<T>& pred, const BasicGrid<T>& target,
                                 const FftPlan& plan) {
  const auto parts = scc_parts(pred, target, plan);
  const double u = parts.numerator;
  const double v = parts.denominator;

  // d(u/v)/dP as a complex gradient (d/dRe + i d/dIm): (2 Y v - 2 u P) / v^2.
  SpectrumGrid dscc(pred.height(), pred.width());
  const double inv_v2 = 1.0 / (v * v);
  for (std::size_t k = 0; k < dscc.size(); ++k) {
    dscc[k] = (2.0 * v * parts.target_spec[k] - 2.0 * u * parts.pred_spec[k]) * inv_v2;
  }
  // Adjoint of the unnormalized forward transform is H W * ifft2.
  const SpectrumGrid back = ifft2(plan, dscc);
  const double hw = static_cast<double>(pred.size());

  BasicLossResult<T> out;
  out.value = 1.0 - u / v;
  out.grad.emplace_back(pred.height(), pred.width());
  auto& grad = out.grad.front();
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad[i] = static_cast<T>(-hw * back[i].real());
  }
  return out;
}

template <class T>
BasicFinalLoss<T> final_loss(const BasicChannels<T>& pred, const LabelMask& target,
                             const LossConfig& cfg, const FftPlan& plan) {
  cfg.validate();
  auto spatial = spatial_loss(pred, target, cfg);
  BasicFinalLoss<T> out;
  out.spatial = spatial.value;
  out.value = spatial.value;
  out.grad = std::move(spatial.grad);
  if (cfg.lambda == 0.0) return out;

  const auto targets = channel_targets<T>(pred.size(), target, "final_loss");
  std::vector<std::size_t> active;
  for (std::size_t c = 0; c < pred.size(); ++c) {
    const bool pred_zero = squared_norm(pred[c]) == 0.0;
    const bool target_zero = squared_norm(targets[c]) == 0.0;
    if (!(pred_zero && target_zero)) active.push_back(c);
  }
  if (active.empty()) return out;

  const double inv_active = 1.0 / static_cast<double>(active.size());
  double spectral_sum = 0.0;
  for (const std::size_t c : active) {
    const auto s = spectral_loss(pred[c], targets[c], plan);
    spectral_sum += s.value;
    accumulate(out.grad[c], s.grad.front(), cfg.lambda * inv_active);
  }
  out.spectral = spectral_sum * inv_active;
  out.spectral_channels = active.size();
  out.value = out.spatial + cfg.lambda * out.spectral;
  return out;
}

#define SPECSEG_INSTANTIATE_LOSSES(T)                                                          \
  template BasicLossResult<T> bce<T>(const BasicGrid<T>&, const BasicGrid<T>&, double);        \
  template BasicLossResult<T> soft_dice<T>(const BasicGrid<T>&, const BasicGrid<T>&, double);  \
  template BasicLossResult<T> spatial_loss<T>(const BasicChannels<T>&, const LabelMask&,       \
                                              const LossConfig&);                              \
  template double scc<T>(const BasicGrid<T>&, const BasicGrid<T>&, const FftPlan&);            \
  template BasicLossResult<T> spectral_loss<T>(const BasicGrid<T>&, const BasicGrid<T>&,       \
                                               const FftPlan&);                                \
  template BasicFinalLoss<T> final_loss<T>(const BasicChannels<T>&, const LabelMask&,          \
                                           const LossConfig&, const FftPlan&);

SPECSEG_INSTANTIATE_LOSSES(float)
SPECSEG_INSTANTIATE_LOSSES(double)

#undef SPECSEG_INSTANTIATE_LOSSES

}  // namespace specseg
