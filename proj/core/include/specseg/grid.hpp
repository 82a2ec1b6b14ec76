#pragma once

// Dense 2D fields. Storage is row-major: element (row, col) lives at
// index row * width + col. Reductions accumulate in double.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "specseg/errors.hpp"

namespace specseg {

template <class T>
class BasicGrid {
 public:
  using value_type = T;

  BasicGrid() = default;

  BasicGrid(std::size_t height, std::size_t width, T fill = T{0})
      : height_(height), width_(width), data_(checked_area(height, width), fill) {}

  BasicGrid(std::size_t height, std::size_t width, std::vector<T> data)
      : height_(height), width_(width), data_(std::move(data)) {
    if (data_.size() != checked_area(height, width)) {
      throw ArgumentError("grid data length " + std::to_string(data_.size()) +
                          " does not match " + std::to_string(height) + "x" +
                          std::to_string(width));
    }
  }

  /// Converts between storage precisions.
  template <class U>
  explicit BasicGrid(const BasicGrid<U>& other)
      : height_(other.height()), width_(other.width()), data_(other.size()) {
    for (std::size_t i = 0; i < data_.size(); ++i) {
      data_[i] = static_cast<T>(other[i]);
    }
  }

  [[nodiscard]] std::size_t height() const noexcept { return height_; }
  [[nodiscard]] std::size_t width() const noexcept { return width_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  [[nodiscard]] std::span<const T> values() const noexcept { return data_; }
  [[nodiscard]] std::span<T> values() noexcept { return data_; }
  [[nodiscard]] const std::vector<T>& storage() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  T& operator()(std::size_t row, std::size_t col) noexcept { return data_[row * width_ + col]; }
  const T& operator()(std::size_t row, std::size_t col) const noexcept {
    return data_[row * width_ + col];
  }

  template <class U>
  [[nodiscard]] bool same_shape(const BasicGrid<U>& other) const noexcept {
    return height_ == other.height() && width_ == other.width();
  }

  friend bool operator==(const BasicGrid&, const BasicGrid&) = default;

 private:
  static std::size_t checked_area(std::size_t height, std::size_t width) {
    if (height == 0 || width == 0) {
      throw ArgumentError("grid dimensions must be positive");
    }
    return height * width;
  }

  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<T> data_;
};

using Grid = BasicGrid<float>;
using GridD = BasicGrid<double>;

/// One probability (or gradient) grid per class.
template <class T>
using BasicChannels = std::vector<BasicGrid<T>>;
using Channels = BasicChannels<float>;

using SpectrumGrid = BasicGrid<std::complex<double>>;

/// Hard class labels with a declared class count.
class LabelMask {
 public:
  LabelMask() = default;
  LabelMask(std::size_t height, std::size_t width, int num_classes, std::uint8_t fill = 0);
  LabelMask(std::size_t height, std::size_t width, int num_classes, std::vector<std::uint8_t> labels);

  [[nodiscard]] std::size_t height() const noexcept { return height_; }
  [[nodiscard]] std::size_t width() const noexcept { return width_; }
  [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
  [[nodiscard]] int num_classes() const noexcept { return num_classes_; }
  [[nodiscard]] std::span<const std::uint8_t> labels() const noexcept { return labels_; }

  [[nodiscard]] std::uint8_t operator[](std::size_t i) const noexcept { return labels_[i]; }
  [[nodiscard]] std::uint8_t operator()(std::size_t row, std::size_t col) const noexcept {
    return labels_[row * width_ + col];
  }

  /// Writes one label; throws if it is not below num_classes().
  void set(std::size_t row, std::size_t col, int label);

  [[nodiscard]] std::size_t count(int label) const noexcept;

  template <class U>
  [[nodiscard]] bool same_shape(const BasicGrid<U>& other) const noexcept {
    return height_ == other.height() && width_ == other.width();
  }
  [[nodiscard]] bool same_shape(const LabelMask& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const LabelMask&, const LabelMask&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  int num_classes_ = 0;
  std::vector<std::uint8_t> labels_;
};

template <class A, class B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw ArgumentError(std::string(what) + ": shape mismatch (" + std::to_string(a.height()) +
                        "x" + std::to_string(a.width()) + " vs " + std::to_string(b.height()) +
                        "x" + std::to_string(b.width()) + ")");
  }
}

template <class T>
[[nodiscard]] double reduce_sum(const BasicGrid<T>& g) {
  double acc = 0.0;
  for (const T v : g.values()) acc += static_cast<double>(v);
  return acc;
}

/// Sum of squares, accumulated in double.
template <class T>
[[nodiscard]] double squared_norm(const BasicGrid<T>& g) {
  double acc = 0.0;
  for (const T v : g.values()) acc += static_cast<double>(v) * static_cast<double>(v);
  return acc;
}

template <class T>
[[nodiscard]] double dot(const BasicGrid<T>& a, const BasicGrid<T>& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

namespace detail {
template <class T, class Op>
BasicGrid<T> zip(const BasicGrid<T>& a, const BasicGrid<T>& b, const char* what, Op op) {
  require_same_shape(a, b, what);
  BasicGrid<T> out(a.height(), a.width());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a[i], b[i]);
  return out;
}
}  // namespace detail

template <class T>
[[nodiscard]] BasicGrid<T> add(const BasicGrid<T>& a, const BasicGrid<T>& b) {
  return detail::zip(a, b, "add", [](T x, T y) { return x + y; });
}

template <class T>
[[nodiscard]] BasicGrid<T> sub(const BasicGrid<T>& a, const BasicGrid<T>& b) {
  return detail::zip(a, b, "sub", [](T x, T y) { return x - y; });
}

template <class T>
[[nodiscard]] BasicGrid<T> mul(const BasicGrid<T>& a, const BasicGrid<T>& b) {
  return detail::zip(a, b, "mul", [](T x, T y) { return x * y; });
}

template <class T>
[[nodiscard]] BasicGrid<T> scale(const BasicGrid<T>& a, T factor) {
  BasicGrid<T> out = a;
  for (T& v : out.values()) v *= factor;
  return out;
}

/// Indicator grid of one class: 1 where mask == class_index, else 0.
template <class T = float>
[[nodiscard]] BasicGrid<T> one_hot(const LabelMask& mask, int class_index) {
  if (class_index < 0 || class_index >= mask.num_classes()) {
    throw ArgumentError("one_hot: class index " + std::to_string(class_index) +
                        " out of range for " + std::to_string(mask.num_classes()) + " classes");
  }
  BasicGrid<T> out(mask.height(), mask.width());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    out[i] = mask[i] == class_index ? T{1} : T{0};
  }
  return out;
}

/// Stacks one_hot for every class.
template <class T = float>
[[nodiscard]] BasicChannels<T> one_hot_channels(const LabelMask& mask) {
  BasicChannels<T> out;
  out.reserve(static_cast<std::size_t>(mask.num_classes()));
  for (int c = 0; c < mask.num_classes(); ++c) out.push_back(one_hot<T>(mask, c));
  return out;
}

/// Per-pixel argmax over channels; ties resolve to the lowest class index.
template <class T>
[[nodiscard]] LabelMask argmax(const BasicChannels<T>& channels) {
  if (channels.empty()) throw ArgumentError("argmax: no channels");
  const auto& first = channels.front();
  for (const auto& ch : channels) require_same_shape(first, ch, "argmax");
  std::vector<std::uint8_t> labels(first.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < channels.size(); ++c) {
      if (channels[c][i] > channels[best][i]) best = c;
    }
    labels[i] = static_cast<std::uint8_t>(best);
  }
  return {first.height(), first.width(), static_cast<int>(channels.size()), std::move(labels)};
}

template <class T>
[[nodiscard]] bool all_finite(const BasicGrid<T>& g) noexcept {
  for (const T v : g.values()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace specseg
