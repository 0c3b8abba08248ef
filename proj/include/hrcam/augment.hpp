#pragma once

#include <random>

#include "hrcam/binary_map.hpp"
#include "hrcam/tensor.hpp"

namespace hrcam {

/// Each enabled transform is applied independently with probability 0.5.
/// translate_px = 0 or rotate_deg_max = 0 disables that transform.
struct AugmentConfig {
  std::size_t translate_px = 6;
  double rotate_deg_max = 15.0;
  bool hflip = true;
  bool vflip = true;
  // Background law for pixels that enter the frame.
  double fill_mean = 0.3;
  double fill_sigma = 0.08;

  static AugmentConfig none() { return {0, 0.0, false, false, 0.3, 0.08}; }
  bool any() const { return translate_px > 0 || rotate_deg_max > 0.0 || hflip || vflip; }

  friend bool operator==(const AugmentConfig&, const AugmentConfig&) = default;
};

struct Augmented {
  Tensor<float> image;
  BinaryMap mask;
};

/// Applies one random combination of flips, rotation about the centre and
/// integer translation to a [1,H,W] image and its [H,W] mask. The image is
/// resampled bilinearly and the mask by nearest neighbour; pixels mapped from
/// outside the frame get fresh background noise (image) or 0 (mask).
Augmented augment(const Tensor<float>& image, const BinaryMap& mask,
                  const AugmentConfig& cfg, std::mt19937_64& rng);

Tensor<float> flip_horizontal(const Tensor<float>& image);
BinaryMap flip_horizontal(const BinaryMap& mask);

}  // namespace hrcam
