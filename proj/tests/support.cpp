#include "support.hpp"

#include <algorithm>
#include <cmath>

namespace hrcam::testing {

std::size_t random_extent(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

Tensor<double> numeric_gradient(Tensor<double> x,
                                const std::function<double(const Tensor<double>&)>& f,
                                double eps) {
  Tensor<double> g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double up = f(x);
    x[i] = saved - eps;
    const double down = f(x);
    x[i] = saved;
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

double max_relative_error(const Tensor<double>& analytic, const Tensor<double>& numeric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i], n = numeric[i];
    const double denom = std::max({std::abs(a), std::abs(n), 1e-4});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

namespace {

// Values spaced at least `gap` apart so max-pool windows keep their winner
// under a 1e-5 perturbation.
Tensor<double> spaced_tensor(const Shape& shape, Rng& rng, double gap) {
  Tensor<double> t(shape);
  std::vector<std::size_t> order(t.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 0; i < order.size(); ++i) {
    t[order[i]] = -1.0 + gap * static_cast<double>(i);
  }
  return t;
}

Tensor<double> one_hot_rows(std::size_t rows, std::size_t classes, Rng& rng) {
  Tensor<double> y({rows, classes});
  for (std::size_t r = 0; r < rows; ++r) y.at(r, random_extent(rng, 0, classes - 1)) = 1.0;
  return y;
}

void note(GradientReport& r, double err) {
  ++r.cases;
  r.worst = std::max(r.worst, err);
}

}  // namespace

std::vector<GradientReport> run_gradient_checks(std::size_t cases, std::uint64_t seed) {
  Rng rng(seed);
  GradientReport conv{"conv2d"}, dense{"dense"}, gap{"gap"}, pool{"maxpool"}, relu{"relu"},
      ce{"softmax_ce"};

  for (std::size_t n = 0; n < cases; ++n) {
    // conv2d: input, kernel and bias gradients of <R, conv(x)>.
    {
      const std::size_t b = random_extent(rng, 1, 2), c = random_extent(rng, 1, 3),
                        k = random_extent(rng, 1, 3), kh = 2 * random_extent(rng, 0, 1) + 1;
      const std::size_t stride = random_extent(rng, 1, 2), pad = random_extent(rng, 0, 1);
      const std::size_t h = random_extent(rng, kh, 6), w = random_extent(rng, kh, 6);
      const ops::Conv2dParams p{stride, pad};
      auto x = random_tensor<double>({b, c, h, w}, rng);
      auto kern = random_tensor<double>({k, c, kh, kh}, rng);
      auto bias = random_tensor<double>({k}, rng);
      ops::Conv2dCache<double> cache;
      const auto out = ops::conv2d_forward(x, kern, bias, p, &cache);
      const auto r = random_tensor<double>(out.shape(), rng);
      const auto g = ops::conv2d_backward(cache, r);
      double err = max_relative_error(g.input, numeric_gradient(x, [&](const Tensor<double>& v) {
        return dot(r, ops::conv2d_forward(v, kern, bias, p));
      }));
      err = std::max(err, max_relative_error(g.kernel, numeric_gradient(kern, [&](const Tensor<double>& v) {
        return dot(r, ops::conv2d_forward(x, v, bias, p));
      })));
      err = std::max(err, max_relative_error(g.bias, numeric_gradient(bias, [&](const Tensor<double>& v) {
        return dot(r, ops::conv2d_forward(x, kern, v, p));
      })));
      note(conv, err);
    }
    // dense
    {
      const std::size_t b = random_extent(rng, 1, 4), in = random_extent(rng, 1, 6),
                        out = random_extent(rng, 1, 4);
      auto x = random_tensor<double>({b, in}, rng);
      auto wt = random_tensor<double>({in, out}, rng);
      auto bias = random_tensor<double>({out}, rng);
      const auto r = random_tensor<double>({b, out}, rng);
      const auto g = ops::dense_backward(x, wt, r);
      double err = max_relative_error(g.input, numeric_gradient(x, [&](const Tensor<double>& v) {
        return dot(r, ops::dense_forward(v, wt, bias));
      }));
      err = std::max(err, max_relative_error(g.weights, numeric_gradient(wt, [&](const Tensor<double>& v) {
        return dot(r, ops::dense_forward(x, v, bias));
      })));
      err = std::max(err, max_relative_error(g.bias, numeric_gradient(bias, [&](const Tensor<double>& v) {
        return dot(r, ops::dense_forward(x, wt, v));
      })));
      note(dense, err);
    }
    // gap
    {
      const Shape s{random_extent(rng, 1, 2), random_extent(rng, 1, 3), random_extent(rng, 1, 5),
                    random_extent(rng, 1, 5)};
      auto x = random_tensor<double>(s, rng);
      const auto r = random_tensor<double>({s[0], s[1]}, rng);
      const auto g = ops::gap_backward(s, r);
      note(gap, max_relative_error(g, numeric_gradient(x, [&](const Tensor<double>& v) {
             return dot(r, ops::gap_forward(v));
           })));
    }
    // maxpool, with well separated values so no window changes its winner
    {
      const Shape s{random_extent(rng, 1, 2), random_extent(rng, 1, 2), 2 * random_extent(rng, 1, 3),
                    2 * random_extent(rng, 1, 3)};
      auto x = spaced_tensor(s, rng, 1e-2);
      const auto pooled = ops::maxpool_forward(x);
      const auto r = random_tensor<double>(pooled.output.shape(), rng);
      const auto g = ops::maxpool_backward(pooled, r);
      note(pool, max_relative_error(g, numeric_gradient(x, [&](const Tensor<double>& v) {
             return dot(r, ops::maxpool_forward(v).output);
           })));
    }
    // relu, away from the kink
    {
      auto x = random_tensor<double>({random_extent(rng, 1, 3), random_extent(rng, 2, 8)}, rng);
      for (auto& v : x.data()) {
        if (std::abs(v) < 1e-2) v = v < 0 ? -0.5 : 0.5;
      }
      const auto r = random_tensor<double>(x.shape(), rng);
      const auto g = ops::relu_backward(x, r);
      note(relu, max_relative_error(g, numeric_gradient(x, [&](const Tensor<double>& v) {
             return dot(r, ops::relu_forward(v));
           })));
    }
    // softmax cross-entropy with respect to the logits
    {
      const std::size_t b = random_extent(rng, 1, 4), classes = random_extent(rng, 2, 4);
      auto logits = random_tensor<double>({b, classes}, rng, -3.0, 3.0);
      const auto y = one_hot_rows(b, classes, rng);
      const auto res = ops::softmax_ce(logits, y);
      note(ce, max_relative_error(res.grad_logits, numeric_gradient(logits, [&](const Tensor<double>& v) {
             return ops::softmax_ce(v, y).loss;
           })));
    }
  }
  return {conv, dense, gap, pool, relu, ce};
}

template <typename T>
Tensor<T> loop_conv(const Tensor<T>& in, const Tensor<T>& k, const Tensor<T>& bias,
                    std::size_t stride, std::size_t pad) {
  const std::size_t B = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
  const std::size_t K = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const std::size_t oh = (H + 2 * pad - kh) / stride + 1, ow = (W + 2 * pad - kw) / stride + 1;
  Tensor<T> out({B, K, oh, ow});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t o = 0; o < K; ++o)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
          T acc = bias[o];
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < kh; ++i)
              for (std::size_t j = 0; j < kw; ++j) {
                const long r = static_cast<long>(y * stride + i) - static_cast<long>(pad);
                const long s = static_cast<long>(x * stride + j) - static_cast<long>(pad);
                const bool inside =
                    r >= 0 && s >= 0 && r < static_cast<long>(H) && s < static_cast<long>(W);
                const T x = inside ? in.at(b, c, static_cast<std::size_t>(r),
                                           static_cast<std::size_t>(s))
                                   : T{0};
                acc += k.at(o, c, i, j) * x;
              }
          out.at(b, o, y, x) = acc;
        }
  return out;
}

template Tensor<float> loop_conv(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                                 std::size_t, std::size_t);
template Tensor<double> loop_conv(const Tensor<double>&, const Tensor<double>&,
                                  const Tensor<double>&, std::size_t, std::size_t);

BruteRow brute_force_row(const Tensor<float>& map, const BinaryMap& mask, double t) {
  BruteRow r;
  const std::size_t h = mask.height, w = mask.width;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const bool pred = map[y * w + x] > t;
      const bool truth = mask.at(y, x) != 0;
      if (pred && truth) ++r.tp;
      if (pred && !truth) ++r.fp;
      if (!pred && truth) ++r.fn;
      if (!pred && !truth) ++r.tn;
    }
  auto ratio = [](std::size_t a, std::size_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  r.sensitivity = ratio(r.tp, r.tp + r.fn);
  r.specificity = ratio(r.tn, r.tn + r.fp);
  r.precision = ratio(r.tp, r.tp + r.fp);
  r.fallout = ratio(r.fp, r.fp + r.tn);
  return r;
}

template <typename T>
Tensor<T> naive_weighted_sum(const Tensor<T>& stack, const Tensor<T>& weights,
                             std::size_t class_id) {
  const std::size_t n = stack.dim(0), h = stack.dim(1), w = stack.dim(2);
  Tensor<T> out({h, w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += static_cast<double>(weights.at(i, class_id)) *
               static_cast<double>(stack[(i * h + y) * w + x]);
      }
      out.at(y, x) = static_cast<T>(acc);
    }
  return out;
}

template Tensor<float> naive_weighted_sum(const Tensor<float>&, const Tensor<float>&, std::size_t);
template Tensor<double> naive_weighted_sum(const Tensor<double>&, const Tensor<double>&,
                                           std::size_t);

ModelSpec two_tap_spec() {
  ModelSpec spec;
  spec.input_shape = {1, 8, 8};
  spec.blocks.push_back(BlockSpec{{3, 3}, 3, false, true});
  spec.blocks.push_back(BlockSpec{{4}, 3, false, true});
  return spec;
}

std::vector<ModelSpec> spec_matrix() {
  std::vector<ModelSpec> out{ModelSpec::desk_default(), ModelSpec::desk_default(true), two_tap_spec()};
  ModelSpec wide;
  wide.input_shape = {1, 24, 40};
  wide.blocks.push_back(BlockSpec{{5}, 3, false, true});
  wide.blocks.push_back(BlockSpec{{4, 4, 4}, 3, true, false});
  wide.blocks.push_back(BlockSpec{{6}, 5, false, true});
  wide.blocks.push_back(BlockSpec{{2}, 1, false, true});
  out.push_back(wide);
  ModelSpec single;
  single.input_shape = {2, 12, 12};
  single.blocks.push_back(BlockSpec{{3}, 3, false, true});
  out.push_back(single);
  return out;
}


BinaryMap random_mask(std::size_t h, std::size_t w, Rng& rng) {
  BinaryMap m(h, w);
  do {
    const double p = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    for (auto& b : m.bits) b = std::bernoulli_distribution(p)(rng);
  } while (m.count() == 0 || m.count() == m.size());
  return m;
}

// Random [0,1] map; some values sit exactly on thresholds to exercise the
// strict comparison.
Tensor<float> random_map(std::size_t h, std::size_t w, Rng& rng) {
  Tensor<float> m = random_tensor<float>({h, w}, rng, 0.0, 1.0);
  for (std::size_t i = 0; i < m.size(); i += 7) {
    m[i] = static_cast<float>(random_extent(rng, 0, 10)) / 10.0f;
  }
  return m;
}

}  // namespace hrcam::testing
