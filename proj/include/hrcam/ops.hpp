#pragma once

// Differentiable kernels used by the backbone and the CAM head.
//
// Every forward kernel has an explicit backward counterpart. All kernels are
// instantiated for float (training) and double (gradient checks). Outer loops
// over batch or channel are OpenMP-parallel; each output element is owned by
// one thread and accumulated in a fixed order, so results are bit-identical for
// any thread count. Serial counterparts live in hrcam/reference.hpp.

#include <cstddef>
#include <vector>

#include "hrcam/tensor.hpp"

namespace hrcam::ops {

struct Conv2dParams {
  std::size_t stride = 1;
  std::size_t pad = 0;
};

// Forward inputs retained for conv2d_backward.
template <typename T>
struct Conv2dCache {
  Tensor<T> input;
  Tensor<T> kernel;
  Conv2dParams params;
  bool valid = false;
};

template <typename T>
struct Conv2dGrads {
  Tensor<T> input;
  Tensor<T> kernel;
  Tensor<T> bias;
};

/// 2-D cross-correlation (no kernel flip) with zero padding.
/// input [B,C,H,W], kernel [K,C,kh,kw], bias [K] -> [B,K,H',W'] with
/// H' = (H + 2 pad - kh) / stride + 1. Each output starts at its bias and adds
/// kernel*input terms in (c, i, j) order, skipping padded positions.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& kernel,
                         const Tensor<T>& bias, Conv2dParams params,
                         Conv2dCache<T>* cache = nullptr);

/// Gradients of sum(grad_out * output) with respect to input, kernel and bias.
/// Throws UsageError when the cache holds no forward pass.
template <typename T>
Conv2dGrads<T> conv2d_backward(const Conv2dCache<T>& cache,
                               const Tensor<T>& grad_out);

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x);

/// Passes grad_out where x > 0. x == 0 gets zero gradient.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out);

template <typename T>
struct MaxPoolResult {
  Tensor<T> output;
  std::vector<std::size_t> argmax;  // flat input index per output element
  Shape input_shape;
};

/// Ties go to the first maximum in row-major window order.
template <typename T>
MaxPoolResult<T> maxpool_forward(const Tensor<T>& input, std::size_t window = 2,
                                 std::size_t stride = 2);

template <typename T>
Tensor<T> maxpool_backward(const MaxPoolResult<T>& pooled,
                           const Tensor<T>& grad_out);

/// [B,C,H,W] -> [B,C] spatial mean. The mean of a constant map is exact.
template <typename T>
Tensor<T> gap_forward(const Tensor<T>& input);

template <typename T>
Tensor<T> gap_backward(const Shape& input_shape, const Tensor<T>& grad_out);

template <typename T>
struct DenseGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

/// input [B,N], weights [N,classes], bias [classes] -> [B,classes].
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const Tensor<T>& weights,
                        const Tensor<T>& bias);

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& input, const Tensor<T>& weights,
                             const Tensor<T>& grad_out);

/// Row-wise softmax of [B,classes] logits.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

template <typename T>
struct SoftmaxCrossEntropy {
  T loss{};
  Tensor<T> grad_logits;
  Tensor<T> probabilities;
};

inline constexpr double kProbabilityClamp = 1e-12;

/// Mean categorical cross-entropy over the batch against one-hot targets.
/// For two classes this equals the binary form
///   -(1/S) sum [y log p + (1 - y) log(1 - p)]
/// with p the class-1 probability. Log arguments are clamped to
/// [1e-12, 1 - 1e-12]. grad_logits = (softmax - targets) / S.
template <typename T>
SoftmaxCrossEntropy<T> softmax_ce(const Tensor<T>& logits,
                                  const Tensor<T>& targets);

/// Half-pixel-center bilinear resize: output index i samples the source at
/// (i + 0.5) * in / out - 0.5, clamped to [0, in - 1]. Requires out >= in.
template <typename T>
Tensor<T> bilinear_upsample(const Tensor<T>& input, std::size_t out_h,
                            std::size_t out_w);

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  Tensor<T> first_moment;
  Tensor<T> second_moment;
  std::size_t step_count = 0;

  static AdamState zeros_like(const Tensor<T>& param) {
    return {Tensor<T>(param.shape()), Tensor<T>(param.shape()), 0};
  }
};

/// Bias-corrected Adam update, in place on param and state.
template <typename T>
void adam_step(Tensor<T>& param, const Tensor<T>& grad, AdamState<T>& state,
               const AdamConfig& cfg);

}  // namespace hrcam::ops
