#include "hrcam/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hrcam {
namespace {

std::size_t image_height(const Tensor<float>& t) { return t.dim(t.rank() - 2); }
std::size_t image_width(const Tensor<float>& t) { return t.dim(t.rank() - 1); }

Tensor<float> flip_vertical(const Tensor<float>& image) {
  const std::size_t h = image_height(image), w = image_width(image);
  Tensor<float> out(image.shape());
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) out[y * w + x] = image[(h - 1 - y) * w + x];
  return out;
}

BinaryMap flip_vertical(const BinaryMap& mask) {
  BinaryMap out(mask.height, mask.width);
  for (std::size_t y = 0; y < mask.height; ++y)
    for (std::size_t x = 0; x < mask.width; ++x)
      out.at(y, x) = mask.at(mask.height - 1 - y, x);
  return out;
}

}  // namespace

Tensor<float> flip_horizontal(const Tensor<float>& image) {
  const std::size_t h = image_height(image), w = image_width(image);
  Tensor<float> out(image.shape());
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) out[y * w + x] = image[y * w + (w - 1 - x)];
  return out;
}

BinaryMap flip_horizontal(const BinaryMap& mask) {
  BinaryMap out(mask.height, mask.width);
  for (std::size_t y = 0; y < mask.height; ++y)
    for (std::size_t x = 0; x < mask.width; ++x)
      out.at(y, x) = mask.at(y, mask.width - 1 - x);
  return out;
}

Augmented augment(const Tensor<float>& image, const BinaryMap& mask,
                  const AugmentConfig& cfg, std::mt19937_64& rng) {
  const std::size_t h = image_height(image), w = image_width(image);
  if (image.size() != h * w || mask.height != h || mask.width != w) {
    throw InvalidInput("augment: image and mask must share one H x W plane");
  }
  Augmented out{image, mask};
  std::bernoulli_distribution coin(0.5);

  if (cfg.hflip && coin(rng)) {
    out.image = flip_horizontal(out.image);
    out.mask = flip_horizontal(out.mask);
  }
  if (cfg.vflip && coin(rng)) {
    out.image = flip_vertical(out.image);
    out.mask = flip_vertical(out.mask);
  }

  double angle = 0.0;
  long dx = 0, dy = 0;
  if (cfg.rotate_deg_max > 0.0 && coin(rng)) {
    angle = std::uniform_real_distribution<double>(-cfg.rotate_deg_max,
                                                   cfg.rotate_deg_max)(rng) *
            std::numbers::pi / 180.0;
  }
  if (cfg.translate_px > 0 && coin(rng)) {
    const auto t = static_cast<long>(cfg.translate_px);
    std::uniform_int_distribution<long> shift(-t, t);
    dx = shift(rng);
    dy = shift(rng);
  }
  if (angle == 0.0 && dx == 0 && dy == 0) return out;

  // Inverse mapping: output pixel p samples the source at R^-1 (p - c - t) + c.
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;
  const double cs = std::cos(angle), sn = std::sin(angle);
  std::normal_distribution<double> fill(cfg.fill_mean, cfg.fill_sigma);
  Tensor<float> img(out.image.shape());
  BinaryMap msk(h, w);
  const Tensor<float>& src = out.image;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double px = static_cast<double>(x) - cx - static_cast<double>(dx);
      const double py = static_cast<double>(y) - cy - static_cast<double>(dy);
      double sx = cs * px + sn * py + cx;
      double sy = -sn * px + cs * py + cy;
      if (angle == 0.0) {
        sx = static_cast<double>(x) - static_cast<double>(dx);
        sy = static_cast<double>(y) - static_cast<double>(dy);
      }
      const bool inside = sx >= 0.0 && sy >= 0.0 && sx <= static_cast<double>(w - 1) &&
                          sy <= static_cast<double>(h - 1);
      if (!inside) {
        img[y * w + x] = static_cast<float>(std::clamp(fill(rng), 0.0, 1.0));
        continue;
      }
      const auto x0 = static_cast<std::size_t>(std::floor(sx));
      const auto y0 = static_cast<std::size_t>(std::floor(sy));
      const std::size_t x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      const float fx = static_cast<float>(sx - static_cast<double>(x0));
      const float fy = static_cast<float>(sy - static_cast<double>(y0));
      const float top = src[y0 * w + x0] + fx * (src[y0 * w + x1] - src[y0 * w + x0]);
      const float bottom = src[y1 * w + x0] + fx * (src[y1 * w + x1] - src[y1 * w + x0]);
      img[y * w + x] = top + fy * (bottom - top);
      const auto nx = static_cast<std::size_t>(std::lround(sx));
      const auto ny = static_cast<std::size_t>(std::lround(sy));
      msk.at(y, x) = out.mask.at(ny, nx);
    }
  }
  out.image = std::move(img);
  out.mask = std::move(msk);
  return out;
}

}  // namespace hrcam
