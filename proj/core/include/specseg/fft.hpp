#pragma once

// Two-dimensional discrete Fourier transform of arbitrary size.
//
// Convention: the forward transform is unnormalized,
//   F[k,l] = sum_{m,n} g[m,n] exp(-2 pi i (k m / H + l n / W)),
// and the inverse carries the 1/(H W) factor. Under this convention the
// adjoint of the forward transform is H W times the inverse, so for real g
// and complex s:  Re<fft2(g), s> = <g, Re(H W ifft2(s))>.
//
// Lengths whose prime factors are all <= 7 use a mixed-radix Cooley-Tukey
// recursion; any other length goes through Bluestein's chirp-z algorithm on
// top of a power-of-two transform.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "specseg/grid.hpp"

namespace specseg {

namespace detail {
class Fft1d;
}

/// Precomputed tables for H x W transforms. Immutable and shareable.
class FftPlan {
 public:
  FftPlan(std::size_t height, std::size_t width);

  [[nodiscard]] std::size_t height() const noexcept { return height_; }
  [[nodiscard]] std::size_t width() const noexcept { return width_; }

  /// In-place 2D transform of row-major complex data of this plan's size.
  void transform(std::span<std::complex<double>> data, bool inverse) const;

 private:
  std::size_t height_;
  std::size_t width_;
  std::shared_ptr<const detail::Fft1d> rows_;  // length width
  std::shared_ptr<const detail::Fft1d> cols_;  // length height
};

template <class T>
[[nodiscard]] SpectrumGrid fft2(const FftPlan& plan, const BasicGrid<T>& g);

[[nodiscard]] SpectrumGrid fft2(const FftPlan& plan, const SpectrumGrid& s);

/// Inverse transform including the 1/(H W) factor.
[[nodiscard]] SpectrumGrid ifft2(const FftPlan& plan, const SpectrumGrid& s);

/// Moves the DC bin to (H/2, W/2) (integer division).
[[nodiscard]] SpectrumGrid fftshift(const SpectrumGrid& s);

/// Undoes fftshift for any size.
[[nodiscard]] SpectrumGrid ifftshift(const SpectrumGrid& s);

/// log(1 + |s|) of the shifted spectrum, min-max normalized to [0, 1].
/// A constant result maps to all zeros.
[[nodiscard]] Grid log_magnitude_spectrum(const SpectrumGrid& s);

/// Number of 2D transforms (forward or inverse) executed by this process.
[[nodiscard]] std::uint64_t fft_invocation_count() noexcept;

/// True when every prime factor of n is at most 7.
[[nodiscard]] bool is_smooth_length(std::size_t n) noexcept;

}  // namespace specseg
