#include "hrcam/reference.hpp"

#include <algorithm>
#include <cmath>

namespace hrcam::reference {
namespace {
using Index = std::ptrdiff_t;
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& kernel,
                         const Tensor<T>& bias, ops::Conv2dParams params) {
  const Index B = input.dim(0), C = input.dim(1), H = input.dim(2),
              W = input.dim(3);
  const Index K = kernel.dim(0), KH = kernel.dim(2), KW = kernel.dim(3);
  const Index S = params.stride, P = params.pad;
  if (kernel.dim(1) != input.dim(1)) throw InvalidInput("conv2d: channel mismatch");
  const Index HO = (H + 2 * P - KH) / S + 1, WO = (W + 2 * P - KW) / S + 1;
  Tensor<T> out({input.dim(0), kernel.dim(0), static_cast<std::size_t>(HO),
                 static_cast<std::size_t>(WO)});
  for (Index b = 0; b < B; ++b)
    for (Index k = 0; k < K; ++k)
      for (Index oh = 0; oh < HO; ++oh)
        for (Index ow = 0; ow < WO; ++ow) {
          T acc = bias[k];
          for (Index c = 0; c < C; ++c)
            for (Index i = 0; i < KH; ++i)
              for (Index j = 0; j < KW; ++j) {
                const Index ih = oh * S + i - P, iw = ow * S + j - P;
                const bool inside = ih >= 0 && ih < H && iw >= 0 && iw < W;
                acc += kernel.at(k, c, i, j) * (inside ? input.at(b, c, ih, iw) : T{0});
              }
          out.at(b, k, oh, ow) = acc;
        }
  return out;
}

template <typename T>
ops::Conv2dGrads<T> conv2d_backward(const Tensor<T>& input,
                                    const Tensor<T>& kernel,
                                    const Tensor<T>& grad_out,
                                    ops::Conv2dParams params) {
  const Index B = input.dim(0), C = input.dim(1), H = input.dim(2),
              W = input.dim(3);
  const Index K = kernel.dim(0), KH = kernel.dim(2), KW = kernel.dim(3);
  const Index S = params.stride, P = params.pad;
  const Index HO = grad_out.dim(2), WO = grad_out.dim(3);
  ops::Conv2dGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(kernel.shape()),
                        Tensor<T>({kernel.dim(0)})};

  for (Index b = 0; b < B; ++b)
    for (Index c = 0; c < C; ++c)
      for (Index ih = 0; ih < H; ++ih)
        for (Index iw = 0; iw < W; ++iw) {
          T acc{0};
          for (Index k = 0; k < K; ++k)
            for (Index i = 0; i < KH; ++i)
              for (Index j = 0; j < KW; ++j) {
                const Index ph = ih + P - i, pw = iw + P - j;
                if (ph < 0 || pw < 0 || ph % S || pw % S) continue;
                const Index oh = ph / S, ow = pw / S;
                if (oh >= HO || ow >= WO) continue;
                acc += kernel.at(k, c, i, j) * grad_out.at(b, k, oh, ow);
              }
          g.input.at(b, c, ih, iw) = acc;
        }

  for (Index k = 0; k < K; ++k)
    for (Index c = 0; c < C; ++c)
      for (Index i = 0; i < KH; ++i)
        for (Index j = 0; j < KW; ++j) {
          T acc{0};
          for (Index b = 0; b < B; ++b)
            for (Index oh = 0; oh < HO; ++oh)
              for (Index ow = 0; ow < WO; ++ow) {
                const Index ih = oh * S + i - P, iw = ow * S + j - P;
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                acc += grad_out.at(b, k, oh, ow) * input.at(b, c, ih, iw);
              }
          g.kernel.at(k, c, i, j) = acc;
        }

  for (Index k = 0; k < K; ++k) {
    T acc{0};
    for (Index b = 0; b < B; ++b)
      for (Index oh = 0; oh < HO; ++oh)
        for (Index ow = 0; ow < WO; ++ow) acc += grad_out.at(b, k, oh, ow);
    g.bias[k] = acc;
  }
  return g;
}

template <typename T>
ops::MaxPoolResult<T> maxpool_forward(const Tensor<T>& input,
                                      std::size_t window, std::size_t stride) {
  const std::size_t B = input.dim(0), C = input.dim(1), H = input.dim(2),
                    W = input.dim(3);
  const std::size_t HO = (H - window) / stride + 1, WO = (W - window) / stride + 1;
  ops::MaxPoolResult<T> r{Tensor<T>({B, C, HO, WO}),
                          std::vector<std::size_t>(B * C * HO * WO),
                          input.shape()};
  std::size_t o = 0;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t oh = 0; oh < HO; ++oh)
        for (std::size_t ow = 0; ow < WO; ++ow, ++o) {
          std::size_t best_i = oh * stride, best_j = ow * stride;
          for (std::size_t i = oh * stride; i < oh * stride + window; ++i)
            for (std::size_t j = ow * stride; j < ow * stride + window; ++j)
              if (input.at(b, c, i, j) > input.at(b, c, best_i, best_j)) {
                best_i = i;
                best_j = j;
              }
          r.output[o] = input.at(b, c, best_i, best_j);
          r.argmax[o] = ((b * C + c) * H + best_i) * W + best_j;
        }
  return r;
}

template <typename T>
Tensor<T> gap_forward(const Tensor<T>& input) {
  const std::size_t B = input.dim(0), C = input.dim(1), H = input.dim(2),
                    W = input.dim(3);
  Tensor<T> out({B, C});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      const double first = input.at(b, c, 0, 0);
      double acc = 0.0;
      for (std::size_t h = 0; h < H; ++h)
        for (std::size_t w = 0; w < W; ++w)
          acc += static_cast<double>(input.at(b, c, h, w)) - first;
      out.at(b, c) = static_cast<T>(first + acc / static_cast<double>(H * W));
    }
  return out;
}

template <typename T>
Tensor<T> bilinear_upsample(const Tensor<T>& input, std::size_t out_h,
                            std::size_t out_w) {
  const std::size_t B = input.dim(0), C = input.dim(1), h = input.dim(2),
                    w = input.dim(3);
  Tensor<T> out({B, C, out_h, out_w});
  auto coord = [](std::size_t i, std::size_t in, std::size_t out_n) {
    const double src = (static_cast<double>(i) + 0.5) *
                           (static_cast<double>(in) / static_cast<double>(out_n)) -
                       0.5;
    return std::clamp(src, 0.0, static_cast<double>(in - 1));
  };
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t oy = 0; oy < out_h; ++oy)
        for (std::size_t ox = 0; ox < out_w; ++ox) {
          const double sy = coord(oy, h, out_h), sx = coord(ox, w, out_w);
          const auto y0 = static_cast<std::size_t>(std::floor(sy));
          const auto x0 = static_cast<std::size_t>(std::floor(sx));
          const std::size_t y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
          const T fy = static_cast<T>(sy - static_cast<double>(y0));
          const T fx = static_cast<T>(sx - static_cast<double>(x0));
          const T top = input.at(b, c, y0, x0) +
                        fx * (input.at(b, c, y0, x1) - input.at(b, c, y0, x0));
          const T bottom = input.at(b, c, y1, x0) +
                           fx * (input.at(b, c, y1, x1) - input.at(b, c, y1, x0));
          out.at(b, c, oy, ox) = top + fy * (bottom - top);
        }
  return out;
}

#define HRCAM_INSTANTIATE_REFERENCE(T)                                         \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const Tensor<T>&,       \
                                    const Tensor<T>&, ops::Conv2dParams);     \
  template ops::Conv2dGrads<T> conv2d_backward(                               \
      const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, ops::Conv2dParams); \
  template ops::MaxPoolResult<T> maxpool_forward(const Tensor<T>&,            \
                                                 std::size_t, std::size_t);   \
  template Tensor<T> gap_forward(const Tensor<T>&);                           \
  template Tensor<T> bilinear_upsample(const Tensor<T>&, std::size_t,         \
                                       std::size_t);

HRCAM_INSTANTIATE_REFERENCE(float)
HRCAM_INSTANTIATE_REFERENCE(double)

#undef HRCAM_INSTANTIATE_REFERENCE

}  // namespace hrcam::reference
