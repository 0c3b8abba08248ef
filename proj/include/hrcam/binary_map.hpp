#pragma once

#include <cstdint>
#include <vector>

#include "hrcam/tensor.hpp"

namespace hrcam {

/// Row-major 0/1 pixel map (ground-truth masks and thresholded CAMs).
struct BinaryMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> bits;

  BinaryMap() = default;
  BinaryMap(std::size_t h, std::size_t w) : height(h), width(w), bits(h * w, 0) {}

  std::uint8_t& at(std::size_t y, std::size_t x) { return bits[y * width + x]; }
  std::uint8_t at(std::size_t y, std::size_t x) const { return bits[y * width + x]; }
  std::size_t size() const { return bits.size(); }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b != 0;
    return n;
  }

  Tensor<float> to_tensor() const {
    std::vector<float> v(bits.begin(), bits.end());
    return Tensor<float>({height, width}, std::move(v));
  }

  /// Any value > 0.5 is set.
  static BinaryMap from_tensor(const Tensor<float>& t) {
    const Shape& s = t.shape();
    BinaryMap m(s[s.size() - 2], s[s.size() - 1]);
    for (std::size_t i = 0; i < m.bits.size(); ++i) m.bits[i] = t[i] > 0.5f ? 1 : 0;
    return m;
  }

  friend bool operator==(const BinaryMap&, const BinaryMap&) = default;
};

}  // namespace hrcam
