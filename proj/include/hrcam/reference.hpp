#pragma once

// Serial per-element versions of the hot kernels in hrcam/ops.hpp. They share
// the ops signatures and are kept for equivalence tests and benchmarks.
// conv2d_forward, conv2d grad_input, maxpool, gap and bilinear_upsample
// accumulate in the same order as the parallel kernels and agree bit-for-bit;
// conv2d grad_kernel sums in a different order and agrees to rounding.

#include "hrcam/ops.hpp"

namespace hrcam::reference {

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& kernel,
                         const Tensor<T>& bias, ops::Conv2dParams params);

template <typename T>
ops::Conv2dGrads<T> conv2d_backward(const Tensor<T>& input,
                                    const Tensor<T>& kernel,
                                    const Tensor<T>& grad_out,
                                    ops::Conv2dParams params);

template <typename T>
ops::MaxPoolResult<T> maxpool_forward(const Tensor<T>& input,
                                      std::size_t window = 2,
                                      std::size_t stride = 2);

template <typename T>
Tensor<T> gap_forward(const Tensor<T>& input);

template <typename T>
Tensor<T> bilinear_upsample(const Tensor<T>& input, std::size_t out_h,
                            std::size_t out_w);

}  // namespace hrcam::reference
