#include <doctest.h>

#include "hrcam/ops.hpp"
#include "hrcam/parallel.hpp"
#include "hrcam/reference.hpp"
#include "support.hpp"

#include <omp.h>

using namespace hrcam;
using hrcam::testing::Rng;
using hrcam::testing::random_extent;
using hrcam::testing::random_tensor;

TEST_SUITE("reference") {

TEST_CASE("parallel kernels agree with the serial reference") {
  Rng rng(21);
  for (int n = 0; n < 25; ++n) {
    const std::size_t kh = 2 * random_extent(rng, 0, 1) + 1;
    const std::size_t c = random_extent(rng, 1, 4), k = random_extent(rng, 1, 6);
    const auto x = random_tensor<float>(
        {random_extent(rng, 1, 3), c, 2 * random_extent(rng, 2, 8), 2 * random_extent(rng, 2, 8)}, rng);
    const auto kern = random_tensor<float>({k, c, kh, kh}, rng);
    const auto bias = random_tensor<float>({k}, rng);
    const ops::Conv2dParams p{random_extent(rng, 1, 2), kh / 2};

    ops::Conv2dCache<float> cache;
    const auto y = ops::conv2d_forward(x, kern, bias, p, &cache);
    CHECK(y == reference::conv2d_forward(x, kern, bias, p));

    const auto r = random_tensor<float>(y.shape(), rng);
    const auto g = ops::conv2d_backward(cache, r);
    const auto gr = reference::conv2d_backward(x, kern, r, p);
    CHECK(g.input == gr.input);
    CHECK(g.bias.shape() == gr.bias.shape());
    for (std::size_t i = 0; i < g.kernel.size(); ++i) {
      CHECK(g.kernel[i] == doctest::Approx(gr.kernel[i]).epsilon(1e-4));
    }
    for (std::size_t i = 0; i < g.bias.size(); ++i) {
      CHECK(g.bias[i] == doctest::Approx(gr.bias[i]).epsilon(1e-4));
    }

    const auto mp = ops::maxpool_forward(x), mr = reference::maxpool_forward(x);
    CHECK(mp.output == mr.output);
    CHECK(mp.argmax == mr.argmax);
    CHECK(ops::gap_forward(x) == reference::gap_forward(x));
    const std::size_t oh = x.dim(2) + random_extent(rng, 0, 20), ow = x.dim(3) + random_extent(rng, 0, 20);
    CHECK(ops::bilinear_upsample(x, oh, ow) == reference::bilinear_upsample(x, oh, ow));
  }
}

TEST_CASE("results do not depend on the thread count") {
  Rng rng(22);
  const auto x = random_tensor<float>({4, 3, 16, 16}, rng);
  const auto kern = random_tensor<float>({8, 3, 3, 3}, rng);
  const auto bias = random_tensor<float>({8}, rng);
  const int saved = omp_get_max_threads();

  omp_set_num_threads(1);
  ops::Conv2dCache<float> c1;
  const auto y1 = ops::conv2d_forward(x, kern, bias, {1, 1}, &c1);
  const auto r = random_tensor<float>(y1.shape(), rng);
  const auto g1 = ops::conv2d_backward(c1, r);
  const auto u1 = ops::bilinear_upsample(x, 40, 40);

  omp_set_num_threads(4);
  ops::Conv2dCache<float> c4;
  const auto y4 = ops::conv2d_forward(x, kern, bias, {1, 1}, &c4);
  const auto g4 = ops::conv2d_backward(c4, r);
  const auto u4 = ops::bilinear_upsample(x, 40, 40);
  omp_set_num_threads(saved);

  CHECK(y1 == y4);
  CHECK(g1.input == g4.input);
  CHECK(g1.kernel == g4.kernel);
  CHECK(g1.bias == g4.bias);
  CHECK(u1 == u4);
}

}
