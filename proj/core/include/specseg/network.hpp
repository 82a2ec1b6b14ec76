#pragma once

// Small encoder-decoder segmenter with hand-written forward and backward
// passes.
//
//   stem      3x3 conv, in_channels -> width(0), ReLU              (H, W)
//   down i    3x3 conv stride 2, width(i-1) -> width(i), ReLU     (H/2^i)
//   up i      nearest x2 upsample, concat [upsampled, skip(i-1)],
//             3x3 conv -> width(i-1), ReLU                         (H/2^(i-1))
//   head      1x1 conv width(0) -> num_classes, softmax
//
// width(i) = widths[min(i, widths.size() - 1)]. With `binary_head` and two
// classes the head emits one logit z and the channels are softmax([0, z]),
// i.e. (1 - sigmoid(z), sigmoid(z)).
//
// All parameters live in one flat vector; the registry records the name,
// shape and offset of every block. Convolution weights are stored
// [out][in][ky][kx].

#include <cstddef>
#include <cstdint>
#include <new>
#include <utility>
#include <string>
#include <vector>

#include "specseg/grid.hpp"

namespace specseg {

/// 64-byte aligned allocation. Vectorized kernels peel a scalar prologue up
/// to the first aligned element, so unaligned buffers would make summation
/// order (and therefore the last bits of every result) vary with malloc.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), kAlignment));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

template <class T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// Same storage, but resize() leaves new elements uninitialized.
template <class T>
struct UninitAllocator : AlignedAllocator<T> {
  template <class U>
  struct rebind {
    using other = UninitAllocator<U>;
  };
  UninitAllocator() noexcept = default;
  template <class U>
  UninitAllocator(const UninitAllocator<U>&) noexcept {}

  template <class U>
  void construct(U* p) noexcept {
    ::new (static_cast<void*>(p)) U;
  }
  template <class U, class... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
};

template <class T>
using ScratchVector = std::vector<T, UninitAllocator<T>>;

struct NetSpec {
  int in_channels = 1;
  std::vector<int> widths{8, 16, 32};
  int depth = 3;
  int num_classes = 3;
  bool binary_head = false;

  void validate() const;
  [[nodiscard]] int width_at(int level) const;
  /// Canonical one-line description; the digest hashes this string.
  [[nodiscard]] std::string describe() const;
  /// FNV-1a 64 of describe().
  [[nodiscard]] std::uint64_t digest() const;
  [[nodiscard]] int head_channels() const noexcept { return binary_head ? 1 : num_classes; }
};

struct ParamBlock {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

template <class T>
struct BasicNetParams {
  NetSpec spec;
  std::vector<ParamBlock> registry;
  AlignedVector<T> values;
  AlignedVector<T> momentum;  // same layout as values

  [[nodiscard]] std::size_t count() const noexcept { return values.size(); }
  [[nodiscard]] const ParamBlock& block(const std::string& name) const;
};
using NetParams = BasicNetParams<float>;

/// Registry with zeroed values and momentum.
template <class T>
[[nodiscard]] BasicNetParams<T> zero_params(const NetSpec& spec);

/// He-uniform weights U(-sqrt(6 / fan_in), sqrt(6 / fan_in)), zero biases,
/// drawn in registry order from SplitMix64(derive_seed(seed, 0)).
template <class T>
[[nodiscard]] BasicNetParams<T> init_params(const NetSpec& spec, std::uint64_t seed);

template <class To, class From>
[[nodiscard]] BasicNetParams<To> convert_params(const BasicNetParams<From>& p) {
  BasicNetParams<To> out;
  out.spec = p.spec;
  out.registry = p.registry;
  out.values.assign(p.values.begin(), p.values.end());
  out.momentum.assign(p.momentum.begin(), p.momentum.end());
  return out;
}

/// C x H x W activation, channel-major.
template <class T>
struct FeatureMap {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  AlignedVector<T> data;

  [[nodiscard]] std::size_t plane() const noexcept { return height * width; }
};

template <class T>
struct ConvRecord {
  std::size_t in_channels = 0;
  std::size_t in_height = 0;
  std::size_t in_width = 0;
  std::size_t stride = 1;
  std::size_t kernel = 3;
  ScratchVector<T> columns;  // im2col matrix, (in_channels * k * k) x (out pixels)
  FeatureMap<T> output;    // post-activation
};

/// Every intermediate needed by backward().
template <class T>
struct BasicForwardCache {
  std::uint64_t spec_digest = 0;
  std::size_t param_count = 0;
  std::vector<ConvRecord<T>> encoder;  // stem, down 1..depth
  std::vector<ConvRecord<T>> decoder;  // up depth..1 in execution order
  ConvRecord<T> head;                  // output holds logits
  BasicChannels<T> probs;
};

template <class T>
struct BasicForwardResult {
  BasicChannels<T> probs;  // num_classes channels summing to 1 per pixel
  BasicForwardCache<T> cache;
};

template <class T>
[[nodiscard]] BasicForwardResult<T> forward(const BasicNetParams<T>& params, const Grid& image);

/// Gradient of the scalar loss with respect to every parameter, given
/// d loss / d probs per class channel. Layout matches params.values.
template <class T>
[[nodiscard]] AlignedVector<T> backward(const BasicNetParams<T>& params,
                                      const BasicForwardCache<T>& cache,
                                      const BasicChannels<T>& loss_grad);

}  // namespace specseg
