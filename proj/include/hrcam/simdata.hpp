#pragma once

// Two-class simulated dataset: flat noisy background for normal images, plus
// one bright lesion (a single disk or a scattered speckle field) for abnormal
// images. Every abnormal sample carries its exact hard-support mask.

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "hrcam/binary_map.hpp"
#include "hrcam/tensor.hpp"

namespace hrcam::sim {

using Rng = std::mt19937_64;

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const Range&, const Range&) = default;
};

struct NoiseConfig {
  double mean = 0.0;
  double sigma = 0.08;
  friend bool operator==(const NoiseConfig&, const NoiseConfig&) = default;
};

struct LocalizedConfig {
  Range radius{4.0, 10.0};
  Range delta{0.25, 0.5};
  friend bool operator==(const LocalizedConfig&, const LocalizedConfig&) = default;
};

struct DiffuseConfig {
  std::array<std::size_t, 2> speckle_count{15, 40};
  Range speckle_radius{1.0, 2.0};
  Range delta{0.25, 0.5};
  Range region_fraction{0.3, 0.6};  // side of the scatter square / image size
  friend bool operator==(const DiffuseConfig&, const DiffuseConfig&) = default;
};

struct SimConfig {
  std::size_t image_size = 64;
  std::size_t per_class_count = 1000;
  std::size_t train_count = 1500;
  std::size_t test_count = 500;
  double background = 0.3;
  NoiseConfig noise;
  double lesion_mix = 0.5;  // probability an abnormal image gets a localized lesion
  LocalizedConfig localized;
  DiffuseConfig diffuse;
  std::uint64_t seed = 20200;

  /// Throws ConfigError on inconsistent counts or ranges.
  void validate() const;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

enum class Label : int { normal = 0, abnormal = 1 };

struct Sample {
  std::size_t id = 0;
  Tensor<float> image;  // [1, H, W], values in [0, 1]
  Label label = Label::normal;
  BinaryMap mask;       // all zero for normal samples
};

struct Disk {
  double cx, cy, radius;
};

struct Lesion {
  BinaryMap mask;       // hard support: pixel centres within a disk
  Tensor<float> delta;  // [H, W] additive intensity, feathered over the inner 1 px
  std::vector<Disk> disks;
};

struct Dataset {
  std::vector<Sample> train;
  std::vector<Sample> test;
};

/// One disk with radius and intensity drawn from cfg.localized, centred so the
/// disk lies inside the frame.
Lesion draw_localized_lesion(Rng& rng, const SimConfig& cfg);

/// A random square sub-region scattered with speckle_count small disks.
Lesion draw_diffuse_lesion(Rng& rng, const SimConfig& cfg);

/// Adds i.i.d. N(mean, sigma) noise per pixel, then clamps to [0, 1].
void add_noise(Tensor<float>& image, Rng& rng, const NoiseConfig& noise);

/// Generates per_class_count images of each class from one seeded stream and
/// splits them stratified: train gets train_count / 2 normals (rounded down)
/// and the matching number of abnormals, test the remainder.
Dataset generate_dataset(const SimConfig& cfg);

/// Pixel-centre disk coverage test shared by the generator and its tests.
inline bool inside_disk(const Disk& d, std::size_t x, std::size_t y) {
  const double dx = static_cast<double>(x) - d.cx;
  const double dy = static_cast<double>(y) - d.cy;
  return dx * dx + dy * dy <= d.radius * d.radius;
}

}  // namespace hrcam::sim
