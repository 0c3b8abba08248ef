#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hrcam/errors.hpp"
#include "hrcam/simdata.hpp"

using namespace hrcam;
using sim::Rng;

namespace {

sim::SimConfig small_config() {
  sim::SimConfig cfg;
  cfg.per_class_count = 60;
  cfg.train_count = 90;
  cfg.test_count = 30;
  return cfg;
}

}  // namespace

TEST_SUITE("simdata") {

TEST_CASE("default counts and stratified split") {
  const sim::SimConfig cfg;
  const auto ds = sim::generate_dataset(cfg);
  CHECK(ds.train.size() == 1500);
  CHECK(ds.test.size() == 500);
  auto abnormal = [](const std::vector<sim::Sample>& v) {
    std::size_t n = 0;
    for (const auto& s : v) n += s.label == sim::Label::abnormal;
    return n;
  };
  CHECK(abnormal(ds.train) == 750);
  CHECK(abnormal(ds.test) == 250);

  std::vector<bool> seen(2000, false);
  for (const auto* split : {&ds.train, &ds.test}) {
    for (const auto& s : *split) {
      REQUIRE(s.id < 2000);
      CHECK_FALSE(seen[s.id]);
      seen[s.id] = true;
    }
  }
}

TEST_CASE("masks agree with labels and lesions are bright") {
  const auto ds = sim::generate_dataset(small_config());
  for (const auto* split : {&ds.train, &ds.test}) {
    for (const auto& s : *split) {
      CHECK(s.image.shape() == Shape{1, 64, 64});
      for (float v : s.image.data()) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
      }
      if (s.label == sim::Label::normal) {
        CHECK(s.mask.count() == 0);
        continue;
      }
      REQUIRE(s.mask.count() > 0);
      double in = 0, out = 0;
      std::size_t nin = 0, nout = 0;
      for (std::size_t p = 0; p < s.mask.size(); ++p) {
        (s.mask.bits[p] ? in : out) += s.image[p];
        (s.mask.bits[p] ? nin : nout) += 1;
      }
      CHECK(in / nin > out / nout);
    }
  }
}

TEST_CASE("every mask pixel of a lesion carries a positive delta") {
  Rng rng(71);
  const sim::SimConfig cfg;
  for (int n = 0; n < 100; ++n) {
    const auto lesion = n % 2 ? sim::draw_localized_lesion(rng, cfg) : sim::draw_diffuse_lesion(rng, cfg);
    for (std::size_t p = 0; p < lesion.mask.size(); ++p) {
      CHECK((lesion.mask.bits[p] != 0) == (lesion.delta[p] > 0.0f));
    }
  }
}

TEST_CASE("localized disk area is close to pi r squared") {
  Rng rng(72);
  const sim::SimConfig cfg;
  for (int n = 0; n < 200; ++n) {
    const auto lesion = sim::draw_localized_lesion(rng, cfg);
    REQUIRE(lesion.disks.size() == 1);
    const auto& d = lesion.disks[0];
    const double area = std::numbers::pi * d.radius * d.radius;
    CHECK(std::abs(static_cast<double>(lesion.mask.count()) - area) <= 0.15 * area);
    CHECK(d.cx - d.radius >= 0.0);
    CHECK(d.cy - d.radius >= 0.0);
    CHECK(d.cx + d.radius <= 63.0);
    CHECK(d.cy + d.radius <= 63.0);
  }
}

TEST_CASE("diffuse mask is the union of its speckles") {
  Rng rng(73);
  const sim::SimConfig cfg;
  for (int n = 0; n < 100; ++n) {
    const auto lesion = sim::draw_diffuse_lesion(rng, cfg);
    CHECK(lesion.disks.size() >= 15);
    CHECK(lesion.disks.size() <= 40);
    std::size_t union_count = 0;
    for (std::size_t y = 0; y < 64; ++y)
      for (std::size_t x = 0; x < 64; ++x) {
        bool any = false;
        for (const auto& d : lesion.disks) any = any || sim::inside_disk(d, x, y);
        union_count += any;
      }
    CHECK(lesion.mask.count() == union_count);
    for (const auto& d : lesion.disks) {
      CHECK(d.radius >= 1.0);
      CHECK(d.radius <= 2.0);
      CHECK(d.cx - d.radius >= 0.0);
      CHECK(d.cx + d.radius <= 63.0);
      CHECK(d.cy - d.radius >= 0.0);
      CHECK(d.cy + d.radius <= 63.0);
    }
  }
}

TEST_CASE("same rng state draws the same lesion") {
  Rng a(74), b(74);
  const sim::SimConfig cfg;
  const auto x = sim::draw_diffuse_lesion(a, cfg), y = sim::draw_diffuse_lesion(b, cfg);
  CHECK(x.mask == y.mask);
  CHECK(x.delta == y.delta);
}

TEST_CASE("noise") {
  SUBCASE("sigma zero leaves the image") {
    Tensor<float> img({1, 8, 8}, 0.3f);
    Rng rng(75);
    sim::add_noise(img, rng, {0.0, 0.0});
    for (float v : img.data()) CHECK(v == 0.3f);
  }
  SUBCASE("sample mean over a million draws") {
    Tensor<float> img({1000, 1000}, 0.5f);
    Rng rng(76);
    const sim::NoiseConfig noise{0.01, 0.08};
    sim::add_noise(img, rng, noise);
    double s = 0.0;
    for (float v : img.data()) s += v - 0.5;
    CHECK(std::abs(s / 1e6 - noise.mean) <= 3 * noise.sigma / 1000);
  }
  SUBCASE("output is clamped to the unit interval") {
    Tensor<float> img({1, 50, 50}, 0.95f);
    Rng rng(77);
    sim::add_noise(img, rng, {0.0, 0.5});
    for (float v : img.data()) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }
}

TEST_CASE("determinism and seed sensitivity") {
  auto cfg = small_config();
  const auto a = sim::generate_dataset(cfg), b = sim::generate_dataset(cfg);
  REQUIRE(a.train.size() == b.train.size());
  bool same = true;
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    same = same && a.train[i].image == b.train[i].image && a.train[i].mask == b.train[i].mask &&
           a.train[i].id == b.train[i].id;
  }
  CHECK(same);
  cfg.seed += 1;
  const auto c = sim::generate_dataset(cfg);
  CHECK_FALSE(a.train[0].image == c.train[0].image);
}

TEST_CASE("invalid configs are rejected") {
  auto cfg = small_config();
  cfg.test_count += 1;
  CHECK_THROWS_AS(sim::generate_dataset(cfg), ConfigError);
  cfg = small_config();
  cfg.localized.delta = {-0.1, 0.2};
  CHECK_THROWS_AS(sim::generate_dataset(cfg), ConfigError);
  cfg = small_config();
  cfg.diffuse.speckle_count = {3, 10};
  CHECK_THROWS_AS(sim::generate_dataset(cfg), ConfigError);
  cfg = small_config();
  cfg.localized.radius = {4, 40};
  CHECK_THROWS_AS(sim::generate_dataset(cfg), ConfigError);
}

}
