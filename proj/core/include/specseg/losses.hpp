#pragma once

// Differentiable segmentation losses. Every function returns its value and
// the exact gradient with respect to the predicted probabilities. Inputs may
// be stored in float or double; all arithmetic runs in double.

#include <cstddef>
#include <vector>

#include "specseg/fft.hpp"
#include "specseg/grid.hpp"

namespace specseg {

struct LossConfig {
  double lambda = 0.2;         // weight of the spectral term
  double dice_epsilon = 1.0;   // additive smoothing in numerator and denominator
  double bce_clamp = 1e-7;     // probabilities are clipped to [c, 1 - c]

  void validate() const;
};

template <class T>
struct BasicLossResult {
  double value = 0.0;
  BasicChannels<T> grad;  // one grid per prediction channel
};
using LossResult = BasicLossResult<float>;

/// Final loss with its two components broken out for logging.
template <class T>
struct BasicFinalLoss : BasicLossResult<T> {
  double spatial = 0.0;
  /// Mean of (1 - SCC) over active channels; 0 when no spectral term was evaluated.
  double spectral = 0.0;
  /// Channels that entered the spectral mean (0 when lambda == 0).
  std::size_t spectral_channels = 0;
};
using FinalLoss = BasicFinalLoss<float>;

/// Mean binary cross-entropy over pixels.
template <class T>
[[nodiscard]] BasicLossResult<T> bce(const BasicGrid<T>& pred, const BasicGrid<T>& target,
                                     double clamp = 1e-7);

/// Soft Dice coefficient (2 sum pt + eps) / (sum p + sum t + eps). The value
/// is the coefficient itself; callers form 1 - Dice.
template <class T>
[[nodiscard]] BasicLossResult<T> soft_dice(const BasicGrid<T>& pred, const BasicGrid<T>& target,
                                           double epsilon = 1.0);

/// Mean over channels of BCE + (1 - Dice) against one-hot targets.
///
/// `pred` holds one channel per class, or a single foreground channel when
/// the mask has two classes.
template <class T>
[[nodiscard]] BasicLossResult<T> spatial_loss(const BasicChannels<T>& pred,
                                              const LabelMask& target, const LossConfig& cfg);

/// Spectral correlation coefficient of two real fields:
///
///   2 sum_k Re(Y_k conj(P_k)) / sum_k (|Y_k|^2 + |P_k|^2)
///
/// with Y = fft2(target), P = fft2(pred), summed over every frequency bin.
/// Throws DegenerateInputError when both inputs are identically zero.
template <class T>
[[nodiscard]] double scc(const BasicGrid<T>& pred, const BasicGrid<T>& target,
                         const FftPlan& plan);

/// 1 - scc(pred, target) with its gradient pulled back through the FFT adjoint.
template <class T>
[[nodiscard]] BasicLossResult<T> spectral_loss(const BasicGrid<T>& pred,
                                               const BasicGrid<T>& target, const FftPlan& plan);

/// spatial_loss + lambda * mean_c spectral_loss(pred_c, onehot_c), where the
/// mean skips channels whose prediction and target are both identically
/// zero. With lambda == 0 no transform is executed.
template <class T>
[[nodiscard]] BasicFinalLoss<T> final_loss(const BasicChannels<T>& pred, const LabelMask& target,
                                           const LossConfig& cfg, const FftPlan& plan);

}  // namespace specseg
