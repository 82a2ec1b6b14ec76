#include "specseg/network.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "specseg/random.hpp"

namespace specseg {

void NetSpec::validate() const {
  if (in_channels != 1) throw ConfigError("only single-channel input images are supported");
  if (widths.empty()) throw ConfigError("widths must not be empty");
  for (const int w : widths) {
    if (w < 1) throw ConfigError("widths must be positive");
  }
  if (depth < 1 || depth > 8) throw ConfigError("depth must be in [1, 8]");
  if (num_classes < 2 || num_classes > 256) throw ConfigError("num_classes must be in [2, 256]");
  if (binary_head && num_classes != 2) throw ConfigError("binary head requires exactly two classes");
}

int NetSpec::width_at(int level) const {
  const auto idx = std::min(static_cast<std::size_t>(level), widths.size() - 1);
  return widths[idx];
}

std::string NetSpec::describe() const {
  std::ostringstream os;
  os << "in=" << in_channels << ";widths=";
  for (std::size_t i = 0; i < widths.size(); ++i) os << (i ? "," : "") << widths[i];
  os << ";depth=" << depth << ";classes=" << num_classes << ";binary=" << (binary_head ? 1 : 0);
  return os.str();
}

std::uint64_t NetSpec::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char ch : describe()) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <class T>
const ParamBlock& BasicNetParams<T>::block(const std::string& name) const {
  for (const auto& b : registry) {
    if (b.name == name) return b;
  }
  throw ArgumentError("no parameter block named '" + name + "'");
}

namespace {

std::vector<ParamBlock> build_registry(const NetSpec& spec) {
  spec.validate();
  std::vector<ParamBlock> reg;
  std::size_t offset = 0;
  auto add = [&](std::string name, std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (const auto d : shape) n *= d;
    reg.push_back({std::move(name), std::move(shape), offset, n});
    offset += n;
  };
  auto conv = [&](const std::string& name, int cin, int cout, std::size_t k) {
    add(name + ".weight", {static_cast<std::size_t>(cout), static_cast<std::size_t>(cin), k, k});
    add(name + ".bias", {static_cast<std::size_t>(cout)});
  };
  conv("stem", spec.in_channels, spec.width_at(0), 3);
  for (int i = 1; i <= spec.depth; ++i) {
    conv("down" + std::to_string(i), spec.width_at(i - 1), spec.width_at(i), 3);
  }
  for (int i = spec.depth; i >= 1; --i) {
    conv("up" + std::to_string(i), spec.width_at(i) + spec.width_at(i - 1), spec.width_at(i - 1), 3);
  }
  conv("head", spec.width_at(0), spec.head_channels(), 1);
  return reg;
}

}  // namespace

template <class T>
BasicNetParams<T> zero_params(const NetSpec& spec) {
  BasicNetParams<T> p;
  p.spec = spec;
  p.registry = build_registry(spec);
  const auto& last = p.registry.back();
  p.values.assign(last.offset + last.size, T{0});
  p.momentum.assign(p.values.size(), T{0});
  return p;
}

template <class T>
BasicNetParams<T> init_params(const NetSpec& spec, std::uint64_t seed) {
  auto p = zero_params<T>(spec);
  SplitMix64 rng(derive_seed(seed, 0));
  for (const auto& b : p.registry) {
    if (b.shape.size() != 4) continue;  // biases stay zero
    const double fan_in = static_cast<double>(b.shape[1] * b.shape[2] * b.shape[3]);
    const double bound = std::sqrt(6.0 / fan_in);
    for (std::size_t i = 0; i < b.size; ++i) {
      p.values[b.offset + i] = static_cast<T>(rng.uniform(-bound, bound));
    }
  }
  return p;
}

namespace {

template <class T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapRM = Eigen::Map<MatRM<T>>;
template <class T>
using ConstMapRM = Eigen::Map<const MatRM<T>>;
template <class T>
using ConstMapVec = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

/// Output columns [first, last) whose tap at offset k lands inside [0, extent).
struct TapRange {
  std::size_t first;
  std::size_t last;
};

TapRange tap_range(std::size_t k, std::size_t pad, std::size_t stride, std::size_t extent,
                   std::size_t out) {
  const std::size_t first = k >= pad ? 0 : (pad - k + stride - 1) / stride;
  const std::size_t reach = extent + pad - k;  // taps below this are in bounds
  const std::size_t last = reach == 0 ? 0 : std::min(out, (reach - 1) / stride + 1);
  return {std::min(first, last), last};
}

template <class T>
void im2col(const FeatureMap<T>& in, std::size_t kernel, std::size_t stride, std::size_t out_h,
            std::size_t out_w, ScratchVector<T>& col) {
  const std::size_t pad = kernel / 2;
  const std::size_t pixels = out_h * out_w;
  col.resize(in.channels * kernel * kernel * pixels);
  for (std::size_t c = 0; c < in.channels; ++c) {
    const T* src = in.data.data() + c * in.plane();
    for (std::size_t ky = 0; ky < kernel; ++ky) {
      const auto rows = tap_range(ky, pad, stride, in.height, out_h);
      for (std::size_t kx = 0; kx < kernel; ++kx) {
        const auto cols = tap_range(kx, pad, stride, in.width, out_w);
        T* dst = col.data() + ((c * kernel + ky) * kernel + kx) * pixels;
        // Only the padding taps need zeros.
        std::fill(dst, dst + rows.first * out_w, T{0});
        std::fill(dst + rows.last * out_w, dst + pixels, T{0});
        for (std::size_t oy = rows.first; oy < rows.last; ++oy) {
          std::fill(dst + oy * out_w, dst + oy * out_w + cols.first, T{0});
          std::fill(dst + oy * out_w + cols.last, dst + (oy + 1) * out_w, T{0});
          const T* srow = src + (oy * stride + ky - pad) * in.width + (cols.first * stride + kx - pad);
          T* drow = dst + oy * out_w;
          if (stride == 1) {
            std::copy(srow, srow + (cols.last - cols.first), drow + cols.first);
          } else {
            for (std::size_t ox = cols.first; ox < cols.last; ++ox) drow[ox] = srow[(ox - cols.first) * stride];
          }
        }
      }
    }
  }
}

template <class T>
void col2im(const T* col, std::size_t kernel, std::size_t stride, std::size_t out_h,
            std::size_t out_w, FeatureMap<T>& grad_in) {
  const std::size_t pad = kernel / 2;
  const std::size_t pixels = out_h * out_w;
  for (std::size_t c = 0; c < grad_in.channels; ++c) {
    T* dst = grad_in.data.data() + c * grad_in.plane();
    for (std::size_t ky = 0; ky < kernel; ++ky) {
      const auto rows = tap_range(ky, pad, stride, grad_in.height, out_h);
      for (std::size_t kx = 0; kx < kernel; ++kx) {
        const auto cols = tap_range(kx, pad, stride, grad_in.width, out_w);
        const T* src = col + ((c * kernel + ky) * kernel + kx) * pixels;
        for (std::size_t oy = rows.first; oy < rows.last; ++oy) {
          T* drow = dst + (oy * stride + ky - pad) * grad_in.width + (cols.first * stride + kx - pad);
          const T* srow = src + oy * out_w;
          if (stride == 1) {
            for (std::size_t ox = cols.first; ox < cols.last; ++ox) drow[ox - cols.first] += srow[ox];
          } else {
            for (std::size_t ox = cols.first; ox < cols.last; ++ox) drow[(ox - cols.first) * stride] += srow[ox];
          }
        }
      }
    }
  }
}

template <class T>
ConvRecord<T> conv_forward(const BasicNetParams<T>& params, const ParamBlock& weight,
                           const ParamBlock& bias, const FeatureMap<T>& in, std::size_t stride,
                           bool relu) {
  ConvRecord<T> rec;
  rec.in_channels = in.channels;
  rec.in_height = in.height;
  rec.in_width = in.width;
  rec.stride = stride;
  rec.kernel = weight.shape[2];
  const std::size_t out_c = weight.shape[0];
  const std::size_t out_h = (in.height - 1) / stride + 1;
  const std::size_t out_w = (in.width - 1) / stride + 1;
  const std::size_t k = in.channels * rec.kernel * rec.kernel;
  const std::size_t pixels = out_h * out_w;

  if (rec.kernel == 1 && stride == 1) {
    rec.columns.assign(in.data.begin(), in.data.end());
  } else {
    im2col(in, rec.kernel, stride, out_h, out_w, rec.columns);
  }

  rec.output = {out_c, out_h, out_w, AlignedVector<T>(out_c * pixels)};
  const ConstMapRM<T> w(params.values.data() + weight.offset, static_cast<Eigen::Index>(out_c),
                        static_cast<Eigen::Index>(k));
  const ConstMapRM<T> cols(rec.columns.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(pixels));
  MapRM<T> out(rec.output.data.data(), static_cast<Eigen::Index>(out_c),
               static_cast<Eigen::Index>(pixels));
  out.noalias() = w * cols;
  const ConstMapVec<T> b(params.values.data() + bias.offset, static_cast<Eigen::Index>(out_c));
  out.colwise() += b;
  if (relu) out = out.cwiseMax(T{0});
  return rec;
}

/// Accumulates weight/bias gradients; returns d loss / d input when requested.
template <class T>
FeatureMap<T> conv_backward(const BasicNetParams<T>& params, const ParamBlock& weight,
                            const ParamBlock& bias, const ConvRecord<T>& rec,
                            const AlignedVector<T>& grad_out, AlignedVector<T>& grads,
                            bool need_input_grad) {
  const std::size_t out_c = rec.output.channels;
  const std::size_t pixels = rec.output.plane();
  const std::size_t k = rec.in_channels * rec.kernel * rec.kernel;
  const ConstMapRM<T> dout(grad_out.data(), static_cast<Eigen::Index>(out_c),
                           static_cast<Eigen::Index>(pixels));
  const ConstMapRM<T> cols(rec.columns.data(), static_cast<Eigen::Index>(k),
                           static_cast<Eigen::Index>(pixels));
  MapRM<T> dw(grads.data() + weight.offset, static_cast<Eigen::Index>(out_c),
              static_cast<Eigen::Index>(k));
  dw.noalias() += dout * cols.transpose();
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> db(grads.data() + bias.offset,
                                                     static_cast<Eigen::Index>(out_c));
  db += dout.rowwise().sum();

  FeatureMap<T> din{rec.in_channels, rec.in_height, rec.in_width, {}};
  if (!need_input_grad) return din;
  const ConstMapRM<T> w(params.values.data() + weight.offset, static_cast<Eigen::Index>(out_c),
                        static_cast<Eigen::Index>(k));
  MatRM<T> dcols = w.transpose() * dout;
  din.data.assign(rec.in_channels * din.plane(), T{0});
  if (rec.kernel == 1 && rec.stride == 1) {
    std::copy(dcols.data(), dcols.data() + dcols.size(), din.data.begin());
  } else {
    col2im(dcols.data(), rec.kernel, rec.stride, rec.output.height, rec.output.width, din);
  }
  return din;
}

template <class T>
FeatureMap<T> upsample_concat(const FeatureMap<T>& coarse, const FeatureMap<T>& skip) {
  FeatureMap<T> out{coarse.channels + skip.channels, skip.height, skip.width, {}};
  out.data.resize(out.channels * out.plane());
  for (std::size_t c = 0; c < coarse.channels; ++c) {
    const T* src = coarse.data.data() + c * coarse.plane();
    T* dst = out.data.data() + c * out.plane();
    for (std::size_t y = 0; y < out.height; ++y) {
      const std::size_t sy = std::min(y / 2, coarse.height - 1);
      for (std::size_t x = 0; x < out.width; ++x) {
        dst[y * out.width + x] = src[sy * coarse.width + std::min(x / 2, coarse.width - 1)];
      }
    }
  }
  std::copy(skip.data.begin(), skip.data.end(),
            out.data.begin() + static_cast<std::ptrdiff_t>(coarse.channels * out.plane()));
  return out;
}

/// Splits d loss / d concat into the coarse (pre-upsample) and skip parts.
template <class T>
void upsample_concat_backward(const FeatureMap<T>& dcat, std::size_t coarse_channels,
                              AlignedVector<T>& dcoarse, std::size_t coarse_h, std::size_t coarse_w,
                              AlignedVector<T>& dskip) {
  const std::size_t plane = dcat.plane();
  for (std::size_t c = 0; c < coarse_channels; ++c) {
    const T* src = dcat.data.data() + c * plane;
    T* dst = dcoarse.data() + c * coarse_h * coarse_w;
    for (std::size_t y = 0; y < dcat.height; ++y) {
      const std::size_t sy = std::min(y / 2, coarse_h - 1);
      for (std::size_t x = 0; x < dcat.width; ++x) {
        dst[sy * coarse_w + std::min(x / 2, coarse_w - 1)] += src[y * dcat.width + x];
      }
    }
  }
  const T* skip_src = dcat.data.data() + coarse_channels * plane;
  for (std::size_t i = 0; i < dskip.size(); ++i) dskip[i] += skip_src[i];
}

template <class T>
void relu_backward(const FeatureMap<T>& activated, AlignedVector<T>& grad) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(activated.data[i] > T{0})) grad[i] = T{0};
  }
}

}  // namespace

template <class T>
BasicForwardResult<T> forward(const BasicNetParams<T>& params, const Grid& image) {
  const NetSpec& spec = params.spec;
  const std::size_t factor = std::size_t{1} << spec.depth;
  if (image.height() % factor != 0 || image.width() % factor != 0) {
    throw ConfigError("image size " + std::to_string(image.height()) + "x" +
                      std::to_string(image.width()) + " is not divisible by " +
                      std::to_string(factor));
  }
  const auto& reg = params.registry;
  BasicForwardResult<T> result;
  auto& cache = result.cache;
  cache.spec_digest = spec.digest();
  cache.param_count = params.count();

  FeatureMap<T> input{1, image.height(), image.width(), {}};
  input.data.assign(image.values().begin(), image.values().end());

  std::size_t blk = 0;
  cache.encoder.push_back(conv_forward(params, reg[blk], reg[blk + 1], input, 1, true));
  blk += 2;
  for (int i = 1; i <= spec.depth; ++i) {
    cache.encoder.push_back(
        conv_forward(params, reg[blk], reg[blk + 1], cache.encoder.back().output, 2, true));
    blk += 2;
  }
  const FeatureMap<T>* current = &cache.encoder.back().output;
  for (int i = spec.depth; i >= 1; --i) {
    const auto cat = upsample_concat(*current, cache.encoder[static_cast<std::size_t>(i - 1)].output);
    cache.decoder.push_back(conv_forward(params, reg[blk], reg[blk + 1], cat, 1, true));
    blk += 2;
    current = &cache.decoder.back().output;
  }
  cache.head = conv_forward(params, reg[blk], reg[blk + 1], *current, 1, false);

  const auto& logits = cache.head.output;
  const std::size_t pixels = logits.plane();
  const auto classes = static_cast<std::size_t>(spec.num_classes);
  result.probs.assign(classes, BasicGrid<T>(image.height(), image.width()));
  std::vector<T> z(classes);
  for (std::size_t p = 0; p < pixels; ++p) {
    if (spec.binary_head) {
      z[0] = T{0};
      z[1] = logits.data[p];
    } else {
      for (std::size_t c = 0; c < classes; ++c) z[c] = logits.data[c * pixels + p];
    }
    const T zmax = *std::max_element(z.begin(), z.end());
    T total{0};
    for (auto& v : z) {
      v = std::exp(v - zmax);
      total += v;
    }
    for (std::size_t c = 0; c < classes; ++c) result.probs[c][p] = z[c] / total;
  }
  cache.probs = result.probs;
  return result;
}

template <class T>
AlignedVector<T> backward(const BasicNetParams<T>& params, const BasicForwardCache<T>& cache,
                        const BasicChannels<T>& loss_grad) {
  const NetSpec& spec = params.spec;
  if (cache.spec_digest != spec.digest() || cache.param_count != params.count() ||
      cache.encoder.size() != static_cast<std::size_t>(spec.depth) + 1 ||
      cache.decoder.size() != static_cast<std::size_t>(spec.depth)) {
    throw InternalError("forward cache does not match network parameters");
  }
  const auto classes = static_cast<std::size_t>(spec.num_classes);
  if (loss_grad.size() != classes) {
    throw ArgumentError("backward: expected one gradient channel per class");
  }
  for (const auto& g : loss_grad) require_same_shape(g, cache.probs.front(), "backward");

  const auto& reg = params.registry;
  AlignedVector<T> grads(params.count(), T{0});

  // Softmax Jacobian: dz_c = p_c (g_c - sum_k p_k g_k).
  const auto& logits = cache.head.output;
  const std::size_t pixels = logits.plane();
  AlignedVector<T> dlogits(logits.data.size());
  for (std::size_t p = 0; p < pixels; ++p) {
    T weighted{0};
    for (std::size_t c = 0; c < classes; ++c) weighted += cache.probs[c][p] * loss_grad[c][p];
    if (spec.binary_head) {
      dlogits[p] = cache.probs[1][p] * (loss_grad[1][p] - weighted);
    } else {
      for (std::size_t c = 0; c < classes; ++c) {
        dlogits[c * pixels + p] = cache.probs[c][p] * (loss_grad[c][p] - weighted);
      }
    }
  }

  const std::size_t head_blk = reg.size() - 2;
  FeatureMap<T> dcur = conv_backward(params, reg[head_blk], reg[head_blk + 1], cache.head, dlogits,
                                     grads, true);

  std::vector<AlignedVector<T>> dlevel(cache.encoder.size());
  for (std::size_t i = 0; i < cache.encoder.size(); ++i) {
    dlevel[i].assign(cache.encoder[i].output.data.size(), T{0});
  }

  // Decoder in reverse execution order: up1, up2, ..., up(depth).
  const std::size_t first_up_blk = 2 * (static_cast<std::size_t>(spec.depth) + 1);
  for (int i = 1; i <= spec.depth; ++i) {
    const std::size_t pos = static_cast<std::size_t>(spec.depth - i);  // decoder index of up i
    const auto& rec = cache.decoder[pos];
    relu_backward(rec.output, dcur.data);
    const std::size_t blk = first_up_blk + 2 * pos;
    const FeatureMap<T> dcat = conv_backward(params, reg[blk], reg[blk + 1], rec, dcur.data, grads, true);

    const FeatureMap<T>& coarse = pos == 0 ? cache.encoder.back().output : cache.decoder[pos - 1].output;
    AlignedVector<T> dcoarse(coarse.data.size(), T{0});
    upsample_concat_backward(dcat, coarse.channels, dcoarse, coarse.height, coarse.width,
                             dlevel[static_cast<std::size_t>(i - 1)]);
    if (pos == 0) {
      auto& top = dlevel.back();
      for (std::size_t k = 0; k < top.size(); ++k) top[k] += dcoarse[k];
    } else {
      dcur = {coarse.channels, coarse.height, coarse.width, std::move(dcoarse)};
    }
  }

  for (std::size_t i = cache.encoder.size(); i-- > 0;) {
    const auto& rec = cache.encoder[i];
    relu_backward(rec.output, dlevel[i]);
    const std::size_t blk = 2 * i;
    const FeatureMap<T> din = conv_backward(params, reg[blk], reg[blk + 1], rec, dlevel[i], grads, i > 0);
    if (i > 0) {
      auto& below = dlevel[i - 1];
      for (std::size_t k = 0; k < below.size(); ++k) below[k] += din.data[k];
    }
  }
  return grads;
}

#define SPECSEG_INSTANTIATE_NETWORK(T)                                                       \
  template struct BasicNetParams<T>;                                                         \
  template BasicNetParams<T> zero_params<T>(const NetSpec&);                                 \
  template BasicNetParams<T> init_params<T>(const NetSpec&, std::uint64_t);                  \
  template BasicForwardResult<T> forward<T>(const BasicNetParams<T>&, const Grid&);          \
  template AlignedVector<T> backward<T>(const BasicNetParams<T>&, const BasicForwardCache<T>&, \
                                      const BasicChannels<T>&);

SPECSEG_INSTANTIATE_NETWORK(float)
SPECSEG_INSTANTIATE_NETWORK(double)

#undef SPECSEG_INSTANTIATE_NETWORK

}  // namespace specseg
