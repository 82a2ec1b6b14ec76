#include "specseg/fft.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <string>

namespace specseg {

using cplx = std::complex<double>;

namespace {

std::atomic<std::uint64_t> g_invocations{0};

std::vector<std::size_t> factorize(std::size_t n) {
  // Radix 4 first keeps the recursion shallow for powers of two.
  std::vector<std::size_t> factors;
  for (const std::size_t p : {4u, 2u, 3u, 5u, 7u}) {
    while (n % p == 0) {
      factors.push_back(p);
      n /= p;
    }
  }
  if (n != 1) factors.clear();
  return factors;
}

}  // namespace

bool is_smooth_length(std::size_t n) noexcept {
  if (n == 0) return false;
  for (const std::size_t p : {2u, 3u, 5u, 7u}) {
    while (n % p == 0) n /= p;
  }
  return n == 1;
}

namespace detail {

/// Forward 1D transform of a fixed length. Inverse is obtained by conjugation.
class Fft1d {
 public:
  explicit Fft1d(std::size_t n) : n_(n) {
    if (n == 0) throw ArgumentError("FFT length must be positive");
    if (n == 1) return;
    if (is_smooth_length(n)) {
      factors_ = factorize(n);
      twiddles_.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        twiddles_[i] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(i) /
                                           static_cast<double>(n));
      }
      return;
    }
    // Bluestein: X_k = w_k sum_j (x_j w_j) conj(w_{k-j}), w_j = exp(-i pi j^2 / n).
    std::size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;
    inner_ = std::make_unique<Fft1d>(m);
    chirp_.resize(n);
    const std::size_t two_n = 2 * n;
    for (std::size_t j = 0; j < n; ++j) {
      // j^2 mod 2n keeps the phase argument small and exact.
      const std::size_t jj = (j * j) % two_n;
      chirp_[j] = std::polar(1.0, -std::numbers::pi * static_cast<double>(jj) /
                                      static_cast<double>(n));
    }
    kernel_.assign(m, cplx{});
    kernel_[0] = std::conj(chirp_[0]);
    for (std::size_t j = 1; j < n; ++j) {
      kernel_[j] = std::conj(chirp_[j]);
      kernel_[m - j] = std::conj(chirp_[j]);
    }
    inner_->forward(kernel_.data(), 1);
  }

  [[nodiscard]] std::size_t size() const noexcept { return n_; }

  /// Transforms n elements spaced `stride` apart, in place.
  void forward(cplx* data, std::size_t stride) const {
    if (n_ == 1) return;
    std::vector<cplx> in(n_);
    for (std::size_t i = 0; i < n_; ++i) in[i] = data[i * stride];
    std::vector<cplx> out(n_);
    if (inner_) {
      bluestein(in.data(), out.data());
    } else {
      recurse(out.data(), in.data(), 1, 0);
    }
    for (std::size_t i = 0; i < n_; ++i) data[i * stride] = out[i];
  }

  void inverse_unscaled(cplx* data, std::size_t stride) const {
    for (std::size_t i = 0; i < n_; ++i) data[i * stride] = std::conj(data[i * stride]);
    forward(data, stride);
    for (std::size_t i = 0; i < n_; ++i) data[i * stride] = std::conj(data[i * stride]);
  }

 private:
  // Decimation in time: the sub-sequence in[q * fstride * p ...] of length m
  // for each residue q is transformed into out[q * m ...], then combined by a
  // radix-p butterfly.
  void recurse(cplx* out, const cplx* in, std::size_t fstride, std::size_t level) const {
    const std::size_t p = factors_[level];
    std::size_t m = n_ / fstride / p;
    if (m == 1) {
      for (std::size_t q = 0; q < p; ++q) out[q] = in[q * fstride];
    } else {
      for (std::size_t q = 0; q < p; ++q) {
        recurse(out + q * m, in + q * fstride, fstride * p, level + 1);
      }
    }
    butterfly(out, fstride, p, m);
  }

  void butterfly(cplx* out, std::size_t fstride, std::size_t p, std::size_t m) const {
    switch (p) {
      case 2:
        butterfly2(out, fstride, m);
        return;
      case 4:
        butterfly4(out, fstride, m);
        return;
      default:
        butterfly_generic(out, fstride, p, m);
        return;
    }
  }

  void butterfly2(cplx* out, std::size_t fstride, std::size_t m) const {
    cplx* hi = out + m;
    for (std::size_t u = 0; u < m; ++u) {
      const cplx t = mul(hi[u], twiddles_[u * fstride]);
      hi[u] = out[u] - t;
      out[u] += t;
    }
  }

  void butterfly4(cplx* out, std::size_t fstride, std::size_t m) const {
    for (std::size_t u = 0; u < m; ++u) {
      const cplx s0 = mul(out[u + m], twiddles_[u * fstride]);
      const cplx s1 = mul(out[u + 2 * m], twiddles_[2 * u * fstride]);
      const cplx s2 = mul(out[u + 3 * m], twiddles_[3 * u * fstride]);
      const cplx s5 = out[u] - s1;
      const cplx a = out[u] + s1;
      const cplx s3 = s0 + s2;
      const cplx s4 = s0 - s2;
      out[u] = a + s3;
      out[u + 2 * m] = a - s3;
      // -i * s4 and +i * s4
      out[u + m] = cplx(s5.real() + s4.imag(), s5.imag() - s4.real());
      out[u + 3 * m] = cplx(s5.real() - s4.imag(), s5.imag() + s4.real());
    }
  }

  void butterfly_generic(cplx* out, std::size_t fstride, std::size_t p, std::size_t m) const {
    cplx scratch[7];
    for (std::size_t u = 0; u < m; ++u) {
      for (std::size_t q = 0; q < p; ++q) {
        scratch[q] = out[u + q * m];
      }
      for (std::size_t q1 = 0; q1 < p; ++q1) {
        const std::size_t k = u + q1 * m;
        const std::size_t step = fstride * k;
        std::size_t tw = 0;
        cplx acc = scratch[0];
        for (std::size_t q = 1; q < p; ++q) {
          tw += step;
          if (tw >= n_) tw -= n_;
          acc += mul(scratch[q], twiddles_[tw]);
        }
        out[k] = acc;
      }
    }
  }

  // Plain complex product; std::complex operator* carries Annex G NaN handling.
  static cplx mul(const cplx& a, const cplx& b) noexcept {
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
  }

  void bluestein(const cplx* in, cplx* out) const {
    const std::size_t m = inner_->size();
    std::vector<cplx> a(m, cplx{});
    for (std::size_t j = 0; j < n_; ++j) a[j] = mul(in[j], chirp_[j]);
    inner_->forward(a.data(), 1);
    for (std::size_t i = 0; i < m; ++i) a[i] = mul(a[i], kernel_[i]);
    inner_->inverse_unscaled(a.data(), 1);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n_; ++k) out[k] = mul(a[k] * inv_m, chirp_[k]);
  }

  std::size_t n_;
  std::vector<std::size_t> factors_;
  std::vector<cplx> twiddles_;
  std::vector<cplx> chirp_;
  std::vector<cplx> kernel_;
  std::unique_ptr<Fft1d> inner_;
};

}  // namespace detail

FftPlan::FftPlan(std::size_t height, std::size_t width)
    : height_(height),
      width_(width),
      rows_(std::make_shared<detail::Fft1d>(width)),
      cols_(height == width ? rows_ : std::make_shared<detail::Fft1d>(height)) {}

void FftPlan::transform(std::span<cplx> data, bool inverse) const {
  if (data.size() != height_ * width_) {
    throw ArgumentError("FFT plan size does not match data length");
  }
  g_invocations.fetch_add(1, std::memory_order_relaxed);
  for (std::size_t r = 0; r < height_; ++r) {
    cplx* row = data.data() + r * width_;
    if (inverse) {
      rows_->inverse_unscaled(row, 1);
    } else {
      rows_->forward(row, 1);
    }
  }
  for (std::size_t c = 0; c < width_; ++c) {
    if (inverse) {
      cols_->inverse_unscaled(data.data() + c, width_);
    } else {
      cols_->forward(data.data() + c, width_);
    }
  }
  if (inverse) {
    const double norm = 1.0 / static_cast<double>(height_ * width_);
    for (cplx& v : data) v *= norm;
  }
}

namespace {

void require_plan_shape(const FftPlan& plan, std::size_t height, std::size_t width) {
  if (plan.height() != height || plan.width() != width) {
    throw ArgumentError("FFT plan is " + std::to_string(plan.height()) + "x" +
                        std::to_string(plan.width()) + " but input is " + std::to_string(height) +
                        "x" + std::to_string(width));
  }
}

}  // namespace

template <class T>
SpectrumGrid fft2(const FftPlan& plan, const BasicGrid<T>& g) {
  require_plan_shape(plan, g.height(), g.width());
  SpectrumGrid out(g.height(), g.width());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = cplx(static_cast<double>(g[i]), 0.0);
  plan.transform(out.values(), false);
  return out;
}

template SpectrumGrid fft2<float>(const FftPlan&, const Grid&);
template SpectrumGrid fft2<double>(const FftPlan&, const GridD&);

SpectrumGrid fft2(const FftPlan& plan, const SpectrumGrid& s) {
  require_plan_shape(plan, s.height(), s.width());
  SpectrumGrid out = s;
  plan.transform(out.values(), false);
  return out;
}

SpectrumGrid ifft2(const FftPlan& plan, const SpectrumGrid& s) {
  require_plan_shape(plan, s.height(), s.width());
  SpectrumGrid out = s;
  plan.transform(out.values(), true);
  return out;
}

namespace {

SpectrumGrid roll(const SpectrumGrid& s, std::size_t dr, std::size_t dc) {
  const std::size_t h = s.height();
  const std::size_t w = s.width();
  SpectrumGrid out(h, w);
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t rr = (r + dr) % h;
    for (std::size_t c = 0; c < w; ++c) {
      out(rr, (c + dc) % w) = s(r, c);
    }
  }
  return out;
}

}  // namespace

SpectrumGrid fftshift(const SpectrumGrid& s) {
  if (s.empty()) return s;
  return roll(s, s.height() / 2, s.width() / 2);
}

SpectrumGrid ifftshift(const SpectrumGrid& s) {
  if (s.empty()) return s;
  return roll(s, s.height() - s.height() / 2, s.width() - s.width() / 2);
}

Grid log_magnitude_spectrum(const SpectrumGrid& s) {
  const SpectrumGrid shifted = fftshift(s);
  std::vector<double> mags(shifted.size());
  for (std::size_t i = 0; i < shifted.size(); ++i) mags[i] = std::log1p(std::abs(shifted[i]));
  Grid out(s.height(), s.width());
  const auto [lo, hi] = std::minmax_element(mags.begin(), mags.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < mags.size(); ++i) {
    out[i] = static_cast<float>((mags[i] - *lo) / range);
  }
  return out;
}

std::uint64_t fft_invocation_count() noexcept {
  return g_invocations.load(std::memory_order_relaxed);
}

}  // namespace specseg
