#include "hrcam/simdata.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hrcam::sim {
namespace {

double uniform(Rng& rng, Range r) {
  if (r.lo == r.hi) return r.lo;
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

void check_range(const Range& r, const std::string& name, bool positive) {
  if (!(r.lo <= r.hi)) throw ConfigError(name + ": lo > hi");
  if (positive && !(r.lo > 0.0)) throw ConfigError(name + " must be strictly positive");
}

// Rasterizes one disk into mask and delta; delta ramps from 0.5 * amplitude
// at the rim to the full amplitude one pixel inside.
void paint_disk(const Disk& d, double amplitude, BinaryMap& mask, Tensor<float>& delta) {
  const std::size_t n = mask.width;
  const auto lo_x = static_cast<std::size_t>(std::max(0.0, std::floor(d.cx - d.radius)));
  const auto hi_x = static_cast<std::size_t>(
      std::min(static_cast<double>(n - 1), std::ceil(d.cx + d.radius)));
  const auto lo_y = static_cast<std::size_t>(std::max(0.0, std::floor(d.cy - d.radius)));
  const auto hi_y = static_cast<std::size_t>(
      std::min(static_cast<double>(mask.height - 1), std::ceil(d.cy + d.radius)));
  for (std::size_t y = lo_y; y <= hi_y; ++y) {
    for (std::size_t x = lo_x; x <= hi_x; ++x) {
      if (!inside_disk(d, x, y)) continue;
      const double dist = std::hypot(static_cast<double>(x) - d.cx,
                                     static_cast<double>(y) - d.cy);
      const double weight = std::min(1.0, (d.radius - dist + 1.0) / 2.0);
      mask.at(y, x) = 1;
      float& v = delta[y * n + x];
      v = std::max(v, static_cast<float>(amplitude * weight));
    }
  }
}

Sample make_sample(std::size_t id, Label label, Rng& rng, const SimConfig& cfg) {
  const std::size_t n = cfg.image_size;
  Sample s;
  s.id = id;
  s.label = label;
  s.image = Tensor<float>({1, n, n}, static_cast<float>(cfg.background));
  s.mask = BinaryMap(n, n);
  if (label == Label::abnormal) {
    const bool localized = std::bernoulli_distribution(cfg.lesion_mix)(rng);
    Lesion lesion = localized ? draw_localized_lesion(rng, cfg) : draw_diffuse_lesion(rng, cfg);
    for (std::size_t i = 0; i < n * n; ++i) s.image[i] += lesion.delta[i];
    s.mask = std::move(lesion.mask);
  }
  add_noise(s.image, rng, cfg.noise);
  return s;
}

}  // namespace

void SimConfig::validate() const {
  if (image_size < 8) throw ConfigError("image_size must be >= 8");
  if (per_class_count == 0) throw ConfigError("per_class_count must be positive");
  if (train_count + test_count != 2 * per_class_count) {
    throw ConfigError("train_count + test_count (" +
                      std::to_string(train_count + test_count) +
                      ") must equal 2 * per_class_count (" +
                      std::to_string(2 * per_class_count) + ")");
  }
  if (train_count / 2 > per_class_count || (train_count + 1) / 2 > per_class_count) {
    throw ConfigError("train_count exceeds available samples per class");
  }
  if (!(noise.sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
  if (!(lesion_mix >= 0.0 && lesion_mix <= 1.0)) {
    throw ConfigError("lesion_mix must be in [0, 1]");
  }
  check_range(localized.radius, "localized.radius", true);
  check_range(localized.delta, "localized.delta", true);
  check_range(diffuse.speckle_radius, "diffuse.speckle_radius", true);
  check_range(diffuse.delta, "diffuse.delta", true);
  check_range(diffuse.region_fraction, "diffuse.region_fraction", true);
  if (diffuse.region_fraction.hi > 1.0) {
    throw ConfigError("diffuse.region_fraction must be <= 1");
  }
  if (2.0 * localized.radius.hi + 1.0 > static_cast<double>(image_size)) {
    throw ConfigError("localized.radius does not fit in the frame");
  }
  if (2.0 * diffuse.speckle_radius.hi + 1.0 > static_cast<double>(image_size)) {
    throw ConfigError("diffuse.speckle_radius does not fit in the frame");
  }
  if (diffuse.speckle_count[0] < 5 || diffuse.speckle_count[0] > diffuse.speckle_count[1]) {
    throw ConfigError("diffuse.speckle_count must satisfy 5 <= lo <= hi");
  }
}

Lesion draw_localized_lesion(Rng& rng, const SimConfig& cfg) {
  const std::size_t n = cfg.image_size;
  const double far = static_cast<double>(n - 1);
  Lesion lesion{BinaryMap(n, n), Tensor<float>({n, n}), {}};
  const double r = uniform(rng, cfg.localized.radius);
  const double cx = uniform(rng, {r, far - r});
  const double cy = uniform(rng, {r, far - r});
  const double amplitude = uniform(rng, cfg.localized.delta);
  lesion.disks.push_back({cx, cy, r});
  paint_disk(lesion.disks.back(), amplitude, lesion.mask, lesion.delta);
  return lesion;
}

Lesion draw_diffuse_lesion(Rng& rng, const SimConfig& cfg) {
  const std::size_t n = cfg.image_size;
  const double far = static_cast<double>(n - 1);
  Lesion lesion{BinaryMap(n, n), Tensor<float>({n, n}), {}};
  const auto count = std::uniform_int_distribution<std::size_t>(
      cfg.diffuse.speckle_count[0], cfg.diffuse.speckle_count[1])(rng);
  const double side = uniform(rng, cfg.diffuse.region_fraction) * far;
  const double x0 = uniform(rng, {0.0, far - side});
  const double y0 = uniform(rng, {0.0, far - side});
  const double amplitude = uniform(rng, cfg.diffuse.delta);
  for (std::size_t i = 0; i < count; ++i) {
    const double r = uniform(rng, cfg.diffuse.speckle_radius);
    const double cx = std::clamp(uniform(rng, {x0, x0 + side}), r, far - r);
    const double cy = std::clamp(uniform(rng, {y0, y0 + side}), r, far - r);
    lesion.disks.push_back({cx, cy, r});
    paint_disk(lesion.disks.back(), amplitude, lesion.mask, lesion.delta);
  }
  return lesion;
}

void add_noise(Tensor<float>& image, Rng& rng, const NoiseConfig& noise) {
  std::normal_distribution<double> unit(0.0, 1.0);
  for (auto& v : image.data()) {
    const double noisy = static_cast<double>(v) + noise.mean + noise.sigma * unit(rng);
    v = static_cast<float>(std::clamp(noisy, 0.0, 1.0));
  }
}

Dataset generate_dataset(const SimConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::vector<Sample> normals, abnormals;
  normals.reserve(cfg.per_class_count);
  abnormals.reserve(cfg.per_class_count);
  for (std::size_t i = 0; i < 2 * cfg.per_class_count; ++i) {
    const Label label = i % 2 == 0 ? Label::normal : Label::abnormal;
    Sample s = make_sample(i, label, rng, cfg);
    (label == Label::normal ? normals : abnormals).push_back(std::move(s));
  }

  const std::size_t train_normals = cfg.train_count / 2;
  const std::size_t train_abnormals = cfg.train_count - train_normals;
  Dataset ds;
  auto take = [](std::vector<Sample>& from, std::size_t begin, std::size_t end,
                 std::vector<Sample>& to) {
    for (std::size_t i = begin; i < end; ++i) to.push_back(std::move(from[i]));
  };
  take(normals, 0, train_normals, ds.train);
  take(abnormals, 0, train_abnormals, ds.train);
  take(normals, train_normals, normals.size(), ds.test);
  take(abnormals, train_abnormals, abnormals.size(), ds.test);
  auto by_id = [](const Sample& a, const Sample& b) { return a.id < b.id; };
  std::sort(ds.train.begin(), ds.train.end(), by_id);
  std::sort(ds.test.begin(), ds.test.end(), by_id);
  return ds;
}

}  // namespace hrcam::sim
