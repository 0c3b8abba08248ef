#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hrcam/tensor.hpp"

namespace hrcam::io {

// Binary (P5) graymap. maxval <= 255 stores one byte per pixel, larger
// maxvals two bytes big-endian.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::uint16_t maxval = 255;
  std::vector<std::uint16_t> pixels;  // row-major
};

void write_pgm(const std::filesystem::path& path, const GrayImage& image);
GrayImage read_pgm(const std::filesystem::path& path);

/// Quantizes a [H,W] or [1,H,W] map in [0,1] as round(maxval * v).
GrayImage to_gray(const Tensor<float>& map, std::uint16_t maxval = 255);

/// Inverse of to_gray: [H,W] tensor with values pixel / maxval.
Tensor<float> from_gray(const GrayImage& image);

/// Side-by-side strip of equally sized [H,W] maps in [0,1] with a 2-px black gap.
GrayImage composite_strip(std::span<const Tensor<float>> panels);

}  // namespace hrcam::io
