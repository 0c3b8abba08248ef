#include "hrcam/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hrcam {

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace hrcam

namespace hrcam::ops {
namespace {

using Index = std::ptrdiff_t;

void require_rank(const Shape& shape, std::size_t rank, const char* what) {
  if (shape.size() != rank) {
    throw InvalidInput(std::string(what) + ": expected rank " +
                       std::to_string(rank) + ", got " + shape_string(shape));
  }
}

}  // namespace

namespace {

// Zero-padded copies of `planes` consecutive H x W planes. Each padded plane
// holds (H + 2P) x (W + 2P) values followed by `tail` zeros, so reads that run
// past the last row of a plane stay in bounds.
template <typename T>
std::vector<T> pad_planes(const T* src, Index planes, Index H, Index W, Index P,
                          Index tail) {
  const Index Wp = W + 2 * P, stride = (H + 2 * P) * Wp + tail;
  std::vector<T> out(static_cast<std::size_t>(planes * stride), T{0});
  for (Index p = 0; p < planes; ++p) {
    for (Index h = 0; h < H; ++h) {
      std::copy_n(src + (p * H + h) * W, W, out.data() + p * stride + (h + P) * Wp + P);
    }
  }
  return out;
}

// acc[q] += w[0] * x[q] + ... + w[N-1] * x[q + N - 1], one term at a time.
template <Index N, typename T>
void taps_forward(T* acc, const T* x, const T* w, Index n) {
  T wv[N];
  for (Index j = 0; j < N; ++j) wv[j] = w[j];
  for (Index q = 0; q < n; ++q) {
    T a = acc[q];
    for (Index j = 0; j < N; ++j) a += wv[j] * x[q + j];
    acc[q] = a;
  }
}

template <typename T>
void taps_forward(T* acc, const T* x, const T* w, Index kw, Index n) {
  switch (kw) {
    case 1: return taps_forward<1>(acc, x, w, n);
    case 3: return taps_forward<3>(acc, x, w, n);
    case 5: return taps_forward<5>(acc, x, w, n);
    case 7: return taps_forward<7>(acc, x, w, n);
    default:
      for (Index q = 0; q < n; ++q) {
        T a = acc[q];
        for (Index j = 0; j < kw; ++j) a += w[j] * x[q + j];
        acc[q] = a;
      }
  }
}

// acc[q] += w[0] * g[q] + w[1] * g[q - 1] + ... , one term at a time.
template <Index N, typename T>
void taps_backward(T* acc, const T* g, const T* w, Index n) {
  T wv[N];
  for (Index j = 0; j < N; ++j) wv[j] = w[j];
  for (Index q = 0; q < n; ++q) {
    T a = acc[q];
    for (Index j = 0; j < N; ++j) a += wv[j] * g[q - j];
    acc[q] = a;
  }
}

template <typename T>
void taps_backward(T* acc, const T* g, const T* w, Index kw, Index n) {
  switch (kw) {
    case 1: return taps_backward<1>(acc, g, w, n);
    case 3: return taps_backward<3>(acc, g, w, n);
    case 5: return taps_backward<5>(acc, g, w, n);
    case 7: return taps_backward<7>(acc, g, w, n);
    default:
      for (Index q = 0; q < n; ++q) {
        T a = acc[q];
        for (Index j = 0; j < kw; ++j) a += w[j] * g[q - j];
        acc[q] = a;
      }
  }
}

constexpr Index kLanes = 16;

// Adds sum_q g[q] * x[q] into lanes[q % kLanes].
template <typename T>
void lane_dot(T* lanes, const T* g, const T* x, Index n) {
  Index q = 0;
  for (; q + kLanes <= n; q += kLanes) {
    for (Index t = 0; t < kLanes; ++t) lanes[t] += g[q + t] * x[q + t];
  }
  for (Index t = 0; q + t < n; ++t) lanes[t] += g[q + t] * x[q + t];
}

}  // namespace

// Padding is treated as zero-valued input: every output sums bias, then
// kernel * padded input over (channel, row, column) in that order.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& kernel,
                         const Tensor<T>& bias, Conv2dParams params,
                         Conv2dCache<T>* cache) {
  require_rank(input.shape(), 4, "conv2d input");
  require_rank(kernel.shape(), 4, "conv2d kernel");
  require_rank(bias.shape(), 1, "conv2d bias");
  const Index B = input.dim(0), C = input.dim(1), H = input.dim(2),
              W = input.dim(3);
  const Index K = kernel.dim(0), KH = kernel.dim(2), KW = kernel.dim(3);
  const Index S = params.stride, P = params.pad;
  if (kernel.dim(1) != input.dim(1)) {
    throw InvalidInput("conv2d: kernel channels " + shape_string(kernel.shape()) +
                       " do not match input " + shape_string(input.shape()));
  }
  if (bias.dim(0) != kernel.dim(0)) throw InvalidInput("conv2d: bias length");
  if (S < 1) throw InvalidInput("conv2d: stride must be >= 1");
  if (KH > H + 2 * P || KW > W + 2 * P) {
    throw InvalidInput("conv2d: kernel larger than padded input");
  }
  const Index HO = (H + 2 * P - KH) / S + 1;
  const Index WO = (W + 2 * P - KW) / S + 1;
  const Index Wp = W + 2 * P, plane = (H + 2 * P) * Wp + KW;

  Tensor<T> output({static_cast<std::size_t>(B), static_cast<std::size_t>(K),
                    static_cast<std::size_t>(HO), static_cast<std::size_t>(WO)});
  const std::vector<T> padded = pad_planes(input.data().data(), B * C, H, W, P, KW);
  const T* ker = kernel.data().data();
  T* out = output.data().data();

  if (S == 1) {
    // Output rows are computed Wp wide over the flattened padded plane; the
    // trailing KW - 1 columns of each row are discarded.
    const Index span = HO * Wp;
#pragma omp parallel for collapse(2) schedule(static)
    for (Index b = 0; b < B; ++b) {
      for (Index k = 0; k < K; ++k) {
        std::vector<T> acc(static_cast<std::size_t>(span), bias[k]);
        for (Index c = 0; c < C; ++c) {
          const T* src = padded.data() + (b * C + c) * plane;
          for (Index i = 0; i < KH; ++i) {
            taps_forward(acc.data(), src + i * Wp, ker + ((k * C + c) * KH + i) * KW, KW, span);
          }
        }
        T* dst = out + (b * K + k) * HO * WO;
        for (Index oh = 0; oh < HO; ++oh) {
          std::copy_n(acc.data() + oh * Wp, WO, dst + oh * WO);
        }
      }
    }
  } else {
#pragma omp parallel for collapse(2) schedule(static)
    for (Index b = 0; b < B; ++b) {
      for (Index k = 0; k < K; ++k) {
        T* dst = out + (b * K + k) * HO * WO;
        std::fill(dst, dst + HO * WO, bias[k]);
        for (Index c = 0; c < C; ++c) {
          const T* src = padded.data() + (b * C + c) * plane;
          for (Index i = 0; i < KH; ++i) {
            for (Index j = 0; j < KW; ++j) {
              const T w = ker[((k * C + c) * KH + i) * KW + j];
              for (Index oh = 0; oh < HO; ++oh) {
                const T* row = src + (oh * S + i) * Wp + j;
                T* orow = dst + oh * WO;
                for (Index ow = 0; ow < WO; ++ow) orow[ow] += w * row[ow * S];
              }
            }
          }
        }
      }
    }
  }

  if (cache) {
    cache->input = input;
    cache->kernel = kernel;
    cache->params = params;
    cache->valid = true;
  }
  return output;
}

template <typename T>
Conv2dGrads<T> conv2d_backward(const Conv2dCache<T>& cache,
                               const Tensor<T>& grad_out) {
  if (!cache.valid) throw UsageError("conv2d_backward: no forward pass cached");
  const Tensor<T>& input = cache.input;
  const Tensor<T>& kernel = cache.kernel;
  const Index B = input.dim(0), C = input.dim(1), H = input.dim(2),
              W = input.dim(3);
  const Index K = kernel.dim(0), KH = kernel.dim(2), KW = kernel.dim(3);
  const Index S = cache.params.stride, P = cache.params.pad;
  const Index HO = (H + 2 * P - KH) / S + 1;
  const Index WO = (W + 2 * P - KW) / S + 1;
  const Shape expected{static_cast<std::size_t>(B), static_cast<std::size_t>(K),
                       static_cast<std::size_t>(HO), static_cast<std::size_t>(WO)};
  if (grad_out.shape() != expected) {
    throw InvalidInput("conv2d_backward: grad_out " + shape_string(grad_out.shape()) +
                       " does not match output " + shape_string(expected));
  }

  Conv2dGrads<T> grads{Tensor<T>(input.shape()), Tensor<T>(kernel.shape()),
                       Tensor<T>({static_cast<std::size_t>(K)})};
  const Index Hp = H + 2 * P, Wp = W + 2 * P, plane = Hp * Wp + KW;
  const std::vector<T> padded = pad_planes(input.data().data(), B * C, H, W, P, KW);
  const T* ker = kernel.data().data();
  const T* go = grad_out.data().data();
  T* gin = grads.input.data().data();
  T* gker = grads.kernel.data().data();

  if (S == 1) {
    // grad_out laid out Wp wide (zero beyond column WO) behind a zero margin,
    // so gathering at negative row/column offsets reads zeros.
    const Index margin = (KH - 1) * Wp + (KW - 1);
    const Index gplane = margin + Hp * Wp + KW;
    std::vector<T> wide(static_cast<std::size_t>(B * K * gplane), T{0});
    for (Index p = 0; p < B * K; ++p) {
      for (Index oh = 0; oh < HO; ++oh) {
        std::copy_n(go + (p * HO + oh) * WO, WO, wide.data() + p * gplane + margin + oh * Wp);
      }
    }

    // grad_input: padded rows P .. P+H-1 gather over (k, i, j).
    const Index span = H * Wp;
#pragma omp parallel for collapse(2) schedule(static)
    for (Index b = 0; b < B; ++b) {
      for (Index c = 0; c < C; ++c) {
        std::vector<T> acc(static_cast<std::size_t>(span), T{0});
        for (Index k = 0; k < K; ++k) {
          const T* g = wide.data() + (b * K + k) * gplane + margin + P * Wp;
          for (Index i = 0; i < KH; ++i) {
            taps_backward(acc.data(), g - i * Wp, ker + ((k * C + c) * KH + i) * KW, KW, span);
          }
        }
        T* dst = gin + (b * C + c) * H * W;
        for (Index h = 0; h < H; ++h) std::copy_n(acc.data() + h * Wp + P, W, dst + h * W);
      }
    }

    // grad_kernel: lane-wise partial dot products, reduced in lane order.
#pragma omp parallel for collapse(2) schedule(static)
    for (Index k = 0; k < K; ++k) {
      for (Index c = 0; c < C; ++c) {
        for (Index i = 0; i < KH; ++i) {
          for (Index j = 0; j < KW; ++j) {
            T lanes[kLanes] = {};
            for (Index b = 0; b < B; ++b) {
              lane_dot(lanes, wide.data() + (b * K + k) * gplane + margin,
                       padded.data() + (b * C + c) * plane + i * Wp + j, HO * Wp);
            }
            T acc{0};
            for (T v : lanes) acc += v;
            gker[((k * C + c) * KH + i) * KW + j] = acc;
          }
        }
      }
    }
  } else {
    // Scatter into a padded gradient plane, then keep the interior.
#pragma omp parallel for collapse(2) schedule(static)
    for (Index b = 0; b < B; ++b) {
      for (Index c = 0; c < C; ++c) {
        std::vector<T> acc(static_cast<std::size_t>(Hp * Wp), T{0});
        for (Index k = 0; k < K; ++k) {
          const T* g = go + (b * K + k) * HO * WO;
          for (Index i = 0; i < KH; ++i) {
            for (Index j = 0; j < KW; ++j) {
              const T w = ker[((k * C + c) * KH + i) * KW + j];
              for (Index oh = 0; oh < HO; ++oh) {
                T* row = acc.data() + (oh * S + i) * Wp + j;
                const T* grow = g + oh * WO;
                for (Index ow = 0; ow < WO; ++ow) row[ow * S] += w * grow[ow];
              }
            }
          }
        }
        T* dst = gin + (b * C + c) * H * W;
        for (Index h = 0; h < H; ++h) std::copy_n(acc.data() + (h + P) * Wp + P, W, dst + h * W);
      }
    }

#pragma omp parallel for collapse(2) schedule(static)
    for (Index k = 0; k < K; ++k) {
      for (Index c = 0; c < C; ++c) {
        std::vector<T> lanes(static_cast<std::size_t>(WO));
        for (Index i = 0; i < KH; ++i) {
          for (Index j = 0; j < KW; ++j) {
            std::fill(lanes.begin(), lanes.end(), T{0});
            for (Index b = 0; b < B; ++b) {
              const T* src = padded.data() + (b * C + c) * plane;
              const T* g = go + (b * K + k) * HO * WO;
              for (Index oh = 0; oh < HO; ++oh) {
                const T* row = src + (oh * S + i) * Wp + j;
                const T* grow = g + oh * WO;
                for (Index ow = 0; ow < WO; ++ow) lanes[ow] += grow[ow] * row[ow * S];
              }
            }
            T acc{0};
            for (T v : lanes) acc += v;
            gker[((k * C + c) * KH + i) * KW + j] = acc;
          }
        }
      }
    }
  }

  for (Index k = 0; k < K; ++k) {
    T acc{0};
    for (Index b = 0; b < B; ++b) {
      const T* g = go + (b * K + k) * HO * WO;
      for (Index p = 0; p < HO * WO; ++p) acc += g[p];
    }
    grads.bias[k] = acc;
  }
  return grads;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  const Index n = x.size();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) y[i] = x[i] > T{0} ? x[i] : T{0};
  return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
  if (x.shape() != grad_out.shape()) {
    throw InvalidInput("relu_backward: shape mismatch");
  }
  Tensor<T> g(x.shape());
  const Index n = x.size();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) g[i] = x[i] > T{0} ? grad_out[i] : T{0};
  return g;
}

template <typename T>
MaxPoolResult<T> maxpool_forward(const Tensor<T>& input, std::size_t window,
                                 std::size_t stride) {
  require_rank(input.shape(), 4, "maxpool input");
  if (window < 1 || stride < 1) throw InvalidInput("maxpool: window/stride < 1");
  const Index B = input.dim(0), C = input.dim(1), H = input.dim(2),
              W = input.dim(3);
  const Index KW = window, S = stride;
  if (KW > H || KW > W) throw InvalidInput("maxpool: window larger than input");
  if (window == stride && (H % S != 0 || W % S != 0)) {
    throw InvalidInput("maxpool: extents " + shape_string(input.shape()) +
                       " not divisible by stride " + std::to_string(stride));
  }
  const Index HO = (H - KW) / S + 1, WO = (W - KW) / S + 1;
  MaxPoolResult<T> r{
      Tensor<T>({input.dim(0), input.dim(1), static_cast<std::size_t>(HO),
                 static_cast<std::size_t>(WO)}),
      std::vector<std::size_t>(static_cast<std::size_t>(B * C * HO * WO)),
      input.shape()};
  const T* in = input.data().data();
#pragma omp parallel for collapse(2) schedule(static)
  for (Index b = 0; b < B; ++b) {
    for (Index c = 0; c < C; ++c) {
      const Index base = (b * C + c) * H * W;
      for (Index oh = 0; oh < HO; ++oh) {
        for (Index ow = 0; ow < WO; ++ow) {
          Index best = base + (oh * S) * W + ow * S;
          for (Index i = 0; i < KW; ++i) {
            for (Index j = 0; j < KW; ++j) {
              const Index idx = base + (oh * S + i) * W + ow * S + j;
              if (in[idx] > in[best]) best = idx;
            }
          }
          const Index o = ((b * C + c) * HO + oh) * WO + ow;
          r.output[o] = in[best];
          r.argmax[o] = static_cast<std::size_t>(best);
        }
      }
    }
  }
  return r;
}

template <typename T>
Tensor<T> maxpool_backward(const MaxPoolResult<T>& pooled,
                           const Tensor<T>& grad_out) {
  if (grad_out.shape() != pooled.output.shape()) {
    throw InvalidInput("maxpool_backward: grad_out shape mismatch");
  }
  Tensor<T> g(pooled.input_shape);
  // Overlapping windows may route several outputs to one input; keep serial.
  for (std::size_t o = 0; o < grad_out.size(); ++o) {
    g[pooled.argmax[o]] += grad_out[o];
  }
  return g;
}

template <typename T>
Tensor<T> gap_forward(const Tensor<T>& input) {
  require_rank(input.shape(), 4, "gap input");
  const Index B = input.dim(0), C = input.dim(1);
  const Index HW = input.dim(2) * input.dim(3);
  Tensor<T> out({input.dim(0), input.dim(1)});
  const T* in = input.data().data();
  // Offsetting by the first element makes constant maps average exactly.
#pragma omp parallel for collapse(2) schedule(static)
  for (Index b = 0; b < B; ++b) {
    for (Index c = 0; c < C; ++c) {
      const T* plane = in + (b * C + c) * HW;
      const double first = plane[0];
      double acc = 0.0;
      for (Index p = 0; p < HW; ++p) acc += static_cast<double>(plane[p]) - first;
      out[b * C + c] = static_cast<T>(first + acc / static_cast<double>(HW));
    }
  }
  return out;
}

template <typename T>
Tensor<T> gap_backward(const Shape& input_shape, const Tensor<T>& grad_out) {
  require_rank(input_shape, 4, "gap input");
  if (grad_out.shape() != Shape{input_shape[0], input_shape[1]}) {
    throw InvalidInput("gap_backward: grad_out shape mismatch");
  }
  const std::size_t HW = input_shape[2] * input_shape[3];
  Tensor<T> g(input_shape);
  const T scale = T{1} / static_cast<T>(HW);
  for (std::size_t bc = 0; bc < grad_out.size(); ++bc) {
    const T v = grad_out[bc] * scale;
    std::fill_n(g.data().begin() + static_cast<Index>(bc * HW), HW, v);
  }
  return g;
}

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const Tensor<T>& weights,
                        const Tensor<T>& bias) {
  require_rank(input.shape(), 2, "dense input");
  require_rank(weights.shape(), 2, "dense weights");
  require_rank(bias.shape(), 1, "dense bias");
  if (input.dim(1) != weights.dim(0)) {
    throw InvalidInput("dense: input " + shape_string(input.shape()) +
                       " incompatible with weights " +
                       shape_string(weights.shape()));
  }
  if (bias.dim(0) != weights.dim(1)) throw InvalidInput("dense: bias length");
  const std::size_t B = input.dim(0), N = input.dim(1), M = weights.dim(1);
  Tensor<T> out({B, M});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t m = 0; m < M; ++m) {
      T acc = bias[m];
      for (std::size_t n = 0; n < N; ++n) acc += input.at(b, n) * weights.at(n, m);
      out.at(b, m) = acc;
    }
  }
  return out;
}

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& input, const Tensor<T>& weights,
                             const Tensor<T>& grad_out) {
  const std::size_t B = input.dim(0), N = input.dim(1), M = weights.dim(1);
  if (grad_out.shape() != Shape{B, M}) {
    throw InvalidInput("dense_backward: grad_out shape mismatch");
  }
  DenseGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(weights.shape()),
                  Tensor<T>({M})};
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t n = 0; n < N; ++n) {
      T acc{0};
      for (std::size_t m = 0; m < M; ++m) acc += grad_out.at(b, m) * weights.at(n, m);
      g.input.at(b, n) = acc;
    }
  }
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t m = 0; m < M; ++m) {
      T acc{0};
      for (std::size_t b = 0; b < B; ++b) acc += input.at(b, n) * grad_out.at(b, m);
      g.weights.at(n, m) = acc;
    }
  }
  for (std::size_t m = 0; m < M; ++m) {
    T acc{0};
    for (std::size_t b = 0; b < B; ++b) acc += grad_out.at(b, m);
    g.bias[m] = acc;
  }
  return g;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  require_rank(logits.shape(), 2, "softmax logits");
  const std::size_t B = logits.dim(0), M = logits.dim(1);
  Tensor<T> p(logits.shape());
  for (std::size_t b = 0; b < B; ++b) {
    T top = logits.at(b, 0);
    for (std::size_t m = 1; m < M; ++m) top = std::max(top, logits.at(b, m));
    T sum{0};
    for (std::size_t m = 0; m < M; ++m) {
      p.at(b, m) = std::exp(logits.at(b, m) - top);
      sum += p.at(b, m);
    }
    for (std::size_t m = 0; m < M; ++m) p.at(b, m) /= sum;
  }
  return p;
}

template <typename T>
SoftmaxCrossEntropy<T> softmax_ce(const Tensor<T>& logits,
                                  const Tensor<T>& targets) {
  if (logits.shape() != targets.shape()) {
    throw InvalidInput("softmax_ce: logits " + shape_string(logits.shape()) +
                       " vs targets " + shape_string(targets.shape()));
  }
  const std::size_t B = logits.dim(0), M = logits.dim(1);
  for (std::size_t b = 0; b < B; ++b) {
    int ones = 0;
    for (std::size_t m = 0; m < M; ++m) {
      const T y = targets.at(b, m);
      if (y == T{1}) {
        ++ones;
      } else if (y != T{0}) {
        ones = -1;
        break;
      }
    }
    if (ones != 1) {
      throw InvalidInput("softmax_ce: target row " + std::to_string(b) +
                         " is not one-hot");
    }
  }

  SoftmaxCrossEntropy<T> r;
  r.probabilities = softmax(logits);
  r.grad_logits = Tensor<T>(logits.shape());
  const T lo = static_cast<T>(kProbabilityClamp);
  const T hi = T{1} - lo;
  const T inv_s = T{1} / static_cast<T>(B);
  T total{0};
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t m = 0; m < M; ++m) {
      const T p = r.probabilities.at(b, m);
      const T y = targets.at(b, m);
      if (y == T{1}) total -= std::log(std::clamp(p, lo, hi));
      r.grad_logits.at(b, m) = (p - y) * inv_s;
    }
  }
  r.loss = total * inv_s;
  return r;
}

template <typename T>
Tensor<T> bilinear_upsample(const Tensor<T>& input, std::size_t out_h,
                            std::size_t out_w) {
  require_rank(input.shape(), 4, "bilinear input");
  const std::size_t B = input.dim(0), C = input.dim(1), h = input.dim(2),
                    w = input.dim(3);
  if (out_h < h || out_w < w) {
    throw InvalidInput("bilinear_upsample: output smaller than input");
  }

  struct Tap {
    std::size_t i0, i1;
    T frac;
  };
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> t(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t i = 0; i < out; ++i) {
      double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in - 1));
      const auto i0 = static_cast<std::size_t>(std::floor(src));
      t[i] = {i0, std::min(i0 + 1, in - 1),
              static_cast<T>(src - static_cast<double>(i0))};
    }
    return t;
  };
  const std::vector<Tap> ys = taps(h, out_h);
  const std::vector<Tap> xs = taps(w, out_w);

  Tensor<T> out({B, C, out_h, out_w});
  const Index planes = static_cast<Index>(B * C);
  const T* in = input.data().data();
  T* dst = out.data().data();
#pragma omp parallel for schedule(static)
  for (Index p = 0; p < planes; ++p) {
    const T* src = in + p * static_cast<Index>(h * w);
    T* o = dst + p * static_cast<Index>(out_h * out_w);
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      const T* r0 = src + ys[oy].i0 * w;
      const T* r1 = src + ys[oy].i1 * w;
      const T fy = ys[oy].frac;
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        const Tap& tx = xs[ox];
        const T top = r0[tx.i0] + tx.frac * (r0[tx.i1] - r0[tx.i0]);
        const T bottom = r1[tx.i0] + tx.frac * (r1[tx.i1] - r1[tx.i0]);
        o[oy * out_w + ox] = top + fy * (bottom - top);
      }
    }
  }
  return out;
}

template <typename T>
void adam_step(Tensor<T>& param, const Tensor<T>& grad, AdamState<T>& state,
               const AdamConfig& cfg) {
  if (grad.shape() != param.shape() ||
      state.first_moment.shape() != param.shape() ||
      state.second_moment.shape() != param.shape()) {
    throw InvalidInput("adam_step: shape mismatch");
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    const double m = cfg.beta1 * state.first_moment[i] + (1.0 - cfg.beta1) * g;
    const double v = cfg.beta2 * state.second_moment[i] + (1.0 - cfg.beta2) * g * g;
    state.first_moment[i] = static_cast<T>(m);
    state.second_moment[i] = static_cast<T>(v);
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    param[i] = static_cast<T>(param[i] -
                              cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
  }
}

#define HRCAM_INSTANTIATE_OPS(T)                                              \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const Tensor<T>&,      \
                                    const Tensor<T>&, Conv2dParams,          \
                                    Conv2dCache<T>*);                        \
  template Conv2dGrads<T> conv2d_backward(const Conv2dCache<T>&,             \
                                          const Tensor<T>&);                 \
  template Tensor<T> relu_forward(const Tensor<T>&);                         \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);      \
  template MaxPoolResult<T> maxpool_forward(const Tensor<T>&, std::size_t,   \
                                            std::size_t);                    \
  template Tensor<T> maxpool_backward(const MaxPoolResult<T>&,               \
                                      const Tensor<T>&);                     \
  template Tensor<T> gap_forward(const Tensor<T>&);                          \
  template Tensor<T> gap_backward(const Shape&, const Tensor<T>&);           \
  template Tensor<T> dense_forward(const Tensor<T>&, const Tensor<T>&,       \
                                   const Tensor<T>&);                        \
  template DenseGrads<T> dense_backward(const Tensor<T>&, const Tensor<T>&,  \
                                        const Tensor<T>&);                   \
  template Tensor<T> softmax(const Tensor<T>&);                              \
  template SoftmaxCrossEntropy<T> softmax_ce(const Tensor<T>&,               \
                                             const Tensor<T>&);              \
  template Tensor<T> bilinear_upsample(const Tensor<T>&, std::size_t,        \
                                       std::size_t);                         \
  template void adam_step(Tensor<T>&, const Tensor<T>&, AdamState<T>&,       \
                          const AdamConfig&);

HRCAM_INSTANTIATE_OPS(float)
HRCAM_INSTANTIATE_OPS(double)

#undef HRCAM_INSTANTIATE_OPS

}  // namespace hrcam::ops
