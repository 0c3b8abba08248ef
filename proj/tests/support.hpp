#pragma once

// Random generators, finite-difference helpers and independent oracles shared
// by the unit tests and the acceptance runner.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "hrcam/binary_map.hpp"
#include "hrcam/eval.hpp"
#include "hrcam/model.hpp"
#include "hrcam/ops.hpp"
#include "hrcam/tensor.hpp"

namespace hrcam::testing {

using Rng = std::mt19937_64;

template <typename T>
Tensor<T> random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<T> t(shape);
  for (auto& v : t.data()) v = static_cast<T>(u(rng));
  return t;
}

std::size_t random_extent(Rng& rng, std::size_t lo, std::size_t hi);

// Central differences of a scalar function with respect to every element of x.
Tensor<double> numeric_gradient(Tensor<double> x,
                                const std::function<double(const Tensor<double>&)>& f,
                                double eps = 1e-5);

// max over elements of |a - n| / max(|a|, |n|), with a small absolute floor in the
// denominator so entries that are zero up to round-off do not dominate.
double max_relative_error(const Tensor<double>& analytic, const Tensor<double>& numeric);

double dot(const Tensor<double>& a, const Tensor<double>& b);

struct GradientReport {
  std::string op;
  std::size_t cases = 0;
  double worst = 0.0;
};

// Random-shape finite-difference checks for every differentiable kernel.
std::vector<GradientReport> run_gradient_checks(std::size_t cases, std::uint64_t seed);

// Plain nested loops, bias first then (channel, row, column) order.
template <typename T>
Tensor<T> loop_conv(const Tensor<T>& in, const Tensor<T>& k, const Tensor<T>& bias,
                    std::size_t stride, std::size_t pad);

// Pixel counter: thresholds a map with > t and tallies the four cells.
struct BruteRow {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double sensitivity = 0, specificity = 0, precision = 0, fallout = 0;
};
BruteRow brute_force_row(const Tensor<float>& map, const BinaryMap& mask, double t);

// Mask with at least one positive and one negative pixel.
BinaryMap random_mask(std::size_t h, std::size_t w, Rng& rng);

// Values in [0,1], every seventh one placed exactly on a threshold.
Tensor<float> random_map(std::size_t h, std::size_t w, Rng& rng);

// Direct per-pixel weighted sum over an [N,H,W] stack.
template <typename T>
Tensor<T> naive_weighted_sum(const Tensor<T>& stack, const Tensor<T>& weights,
                             std::size_t class_id);

// Eight-pixel input, two taps of unequal width.
ModelSpec two_tap_spec();

// Default, residual, two-tap, non-square multi-stage and two-channel specs.
std::vector<ModelSpec> spec_matrix();

}  // namespace hrcam::testing
