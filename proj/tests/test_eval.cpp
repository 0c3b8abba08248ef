#include <doctest.h>

#include <filesystem>

#include "hrcam/errors.hpp"
#include "hrcam/eval.hpp"
#include "support.hpp"

using namespace hrcam;
using hrcam::testing::Rng;
using hrcam::testing::random_map;
using hrcam::testing::random_mask;

namespace {

BinaryMap bits(std::size_t h, std::size_t w, std::vector<std::uint8_t> v) {
  BinaryMap m(h, w);
  m.bits = std::move(v);
  return m;
}

sim::Sample abnormal_sample(std::size_t id, const BinaryMap& mask) {
  sim::Sample s;
  s.id = id;
  s.label = sim::Label::abnormal;
  s.image = Tensor<float>({1, mask.height, mask.width});
  s.mask = mask;
  return s;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("thresholds are 0.1 to 0.9") {
  const auto t = eval::thresholds();
  REQUIRE(t.size() == 9);
  for (std::size_t k = 0; k < 9; ++k) CHECK(t[k] == static_cast<double>(k + 1) / 10.0);
}

TEST_CASE("binarize") {
  CHECK(eval::binarize(Tensor<float>({2, 2}, 1.0f), 0.9).count() == 4);
  CHECK(eval::binarize(Tensor<float>({2, 2}, 0.0f), 0.1).count() == 0);
  const Tensor<float> m({2, 2}, std::vector<float>{0.9f, 0.2f, 0.4f, 0.8f});
  CHECK(eval::binarize(m, 0.5) == bits(2, 2, {1, 0, 0, 1}));
  CHECK(eval::binarize(Tensor<float>({1, 1}, 0.5f), 0.5).count() == 0);
  cam::CamMap<float> raw{m};
  CHECK_THROWS_AS(eval::binarize(raw, 0.5), InvalidInput);
  CHECK_THROWS_AS(eval::binarize(Tensor<float>({1, 2}, std::vector<float>{0.0f, 3.0f}), 0.5),
                  InvalidInput);
}

TEST_CASE("confusion counts") {
  const auto diag = bits(2, 2, {1, 0, 0, 1});
  CHECK(eval::confusion(diag, diag) == eval::ConfusionCounts{2, 0, 2, 0});
  const auto inv = bits(2, 2, {0, 1, 1, 0});
  const auto c = eval::confusion(inv, diag);
  CHECK(c.tp == 0);
  CHECK(c.tn == 0);
  CHECK(eval::confusion(bits(2, 2, {1, 0, 1, 1}), diag) == eval::ConfusionCounts{2, 1, 1, 0});
  CHECK_THROWS_AS(eval::confusion(bits(1, 4, {1, 0, 1, 1}), diag), InvalidInput);
}

TEST_CASE("rates from counts") {
  const auto perfect = eval::metrics_from_counts({2, 0, 2, 0});
  CHECK(perfect == eval::Rates{1.0, 1.0, 1.0, 0.0});
  const auto r = eval::metrics_from_counts({2, 1, 1, 0});
  CHECK(r.sensitivity == 1.0);
  CHECK(r.specificity == 0.5);
  CHECK(r.precision == 2.0 / 3.0);
  CHECK(r.fallout == 0.5);
  CHECK(eval::metrics_from_counts({0, 0, 5, 3}).precision == 0.0);
  CHECK(eval::metrics_from_counts({0, 0, 0, 0}) == eval::Rates{});
}

TEST_CASE("sweep matches a brute-force pixel counter on random 8x8 cases") {
  Rng rng(81);
  for (int n = 0; n < 100; ++n) {
    const auto map = random_map(8, 8, rng);
    const auto mask = random_mask(8, 8, rng);
    const auto m = eval::sweep(map, mask);
    REQUIRE(m.per_threshold.size() == 9);
    for (std::size_t k = 0; k < 9; ++k) {
      const auto& row = m.per_threshold[k];
      const auto b = testing::brute_force_row(map, mask, row.threshold);
      const auto c = eval::confusion(eval::binarize(map, row.threshold), mask);
      CHECK(c == eval::ConfusionCounts{b.tp, b.fp, b.tn, b.fn});
      CHECK(c.total() == 64);
      CHECK(row.rates.sensitivity == b.sensitivity);
      CHECK(row.rates.specificity == b.specificity);
      CHECK(row.rates.precision == b.precision);
      CHECK(row.rates.fallout == 1.0 - row.rates.specificity);
      CHECK(std::abs(row.rates.fallout - b.fallout) <= 1e-15);
    }
  }
}

TEST_CASE("sensitivity falls and specificity rises with the threshold") {
  Rng rng(82);
  for (int n = 0; n < 100; ++n) {
    const auto m = eval::sweep(random_map(8, 8, rng), random_mask(8, 8, rng));
    for (std::size_t k = 1; k < 9; ++k) {
      CHECK(m.per_threshold[k].rates.sensitivity <= m.per_threshold[k - 1].rates.sensitivity);
      CHECK(m.per_threshold[k].rates.specificity >= m.per_threshold[k - 1].rates.specificity);
    }
    for (const auto& row : m.per_threshold) {
      for (double v : {row.rates.sensitivity, row.rates.specificity, row.rates.precision, row.rates.fallout}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
}

TEST_CASE("sweep rejects masks without positives or negatives") {
  const Tensor<float> map({2, 2}, 0.5f);
  CHECK_THROWS_AS(eval::sweep(map, BinaryMap(2, 2)), InvalidInput);
  CHECK_THROWS_AS(eval::sweep(map, bits(2, 2, {1, 1, 1, 1})), InvalidInput);
}

TEST_CASE("dataset evaluation averages samples then thresholds") {
  Rng rng(83);
  std::vector<sim::Sample> samples;
  std::vector<Tensor<float>> maps;
  for (std::size_t i = 0; i < 6; ++i) {
    samples.push_back(abnormal_sample(i, random_mask(8, 8, rng)));
    maps.push_back(random_map(8, 8, rng));
  }
  sim::Sample normal;
  normal.id = 99;
  normal.image = Tensor<float>({1, 8, 8});
  normal.mask = BinaryMap(8, 8);
  samples.push_back(normal);
  auto generator = [&](const sim::Sample& s) {
    REQUIRE(s.label == sim::Label::abnormal);
    return cam::CamMap<float>{maps[s.id]};
  };

  SUBCASE("single sample equals its sweep") {
    const std::vector<sim::Sample> one{samples[2]};
    const auto res = eval::evaluate_method(one, generator);
    const auto direct = eval::sweep(cam::normalize_cam(cam::CamMap<float>{maps[2]}).values, samples[2].mask);
    CHECK(res.metrics == direct);
    CHECK(res.samples_used == 1);
  }
  SUBCASE("per-threshold means over samples") {
    const auto res = eval::evaluate_method(samples, generator);
    CHECK(res.samples_used == 6);
    std::vector<eval::EvalMetrics> sweeps;
    for (std::size_t i = 0; i < 6; ++i) {
      sweeps.push_back(eval::sweep(cam::normalize_cam(cam::CamMap<float>{maps[i]}).values, samples[i].mask));
    }
    double mean_sens = 0.0;
    for (std::size_t k = 0; k < 9; ++k) {
      double s = 0.0;
      for (const auto& w : sweeps) s += w.per_threshold[k].rates.sensitivity;
      CHECK(res.metrics.per_threshold[k].rates.sensitivity == doctest::Approx(s / 6).epsilon(1e-14));
      CHECK(res.metrics.per_threshold[k].rates.fallout == 1.0 - res.metrics.per_threshold[k].rates.specificity);
      mean_sens += res.metrics.per_threshold[k].rates.sensitivity;
    }
    CHECK(res.metrics.means.sensitivity == doctest::Approx(mean_sens / 9).epsilon(1e-14));
    CHECK(res.metrics.means.fallout == 1.0 - res.metrics.means.specificity);
  }
  SUBCASE("unusable masks are reported and skipped") {
    auto with_full = samples;
    with_full.push_back(abnormal_sample(0, bits(8, 8, std::vector<std::uint8_t>(64, 1))));
    const auto res = eval::evaluate_method(with_full, generator);
    CHECK(res.samples_used == 6);
    CHECK(res.diagnostics.size() == 1);
  }
  SUBCASE("no abnormal samples is a data error") {
    const std::vector<sim::Sample> none{normal};
    CHECK_THROWS_AS(eval::evaluate_method(none, generator), DataError);
  }
}

TEST_CASE("metrics CSV round trip is exact") {
  Rng rng(84);
  std::vector<eval::MethodMetrics> methods;
  for (const char* name : {"hrcam", "gradcam", "zhou"}) {
    methods.push_back({name, eval::sweep(random_map(8, 8, rng), random_mask(8, 8, rng))});
  }
  const auto path = std::filesystem::temp_directory_path() / "hrcam_test_metrics.csv";
  eval::write_metrics_csv(path, methods);
  const auto back = eval::read_metrics_csv(path);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].method == methods[i].method);
    CHECK(back[i].metrics == methods[i].metrics);
  }
}

TEST_CASE("classification accuracy") {
  std::vector<sim::Sample> samples;
  const std::vector<int> labels{0, 1, 1, 0, 1, 1, 1, 0, 0, 1};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    sim::Sample s;
    s.id = i;
    s.label = static_cast<sim::Label>(labels[i]);
    s.image = Tensor<float>({1, 2, 2}, static_cast<float>(i));
    samples.push_back(s);
  }
  SUBCASE("zero scores pick class 0") {
    auto zero = [](const Tensor<float>& x) { return Tensor<float>({x.dim(0), 2}); };
    CHECK(eval::classification_accuracy(samples, zero, 3) == 0.4);
  }
  SUBCASE("oracle classifier is always right") {
    auto oracle = [&](const Tensor<float>& x) {
      Tensor<float> s({x.dim(0), 2});
      for (std::size_t b = 0; b < x.dim(0); ++b) {
        const auto id = static_cast<std::size_t>(x[b * 4]);
        s.at(b, static_cast<std::size_t>(labels[id])) = 1.0f;
      }
      return s;
    };
    CHECK(eval::classification_accuracy(samples, oracle, 4) == 1.0);
  }
  SUBCASE("hand-counted predictions") {
    // predicts class 1 for ids 0..4 and class 0 for ids 5..9:
    // correct at ids 1, 2, 4, 7, 8 -> 5 of 10
    auto half = [](const Tensor<float>& x) {
      Tensor<float> s({x.dim(0), 2});
      for (std::size_t b = 0; b < x.dim(0); ++b) s.at(b, x[b * 4] < 5 ? 1 : 0) = 1.0f;
      return s;
    };
    CHECK(eval::classification_accuracy(samples, half, 3) == 0.5);
  }
}

}
