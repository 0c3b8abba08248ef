#include "hrcam/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

namespace hrcam::io {
namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

std::size_t parse_size(const std::string& tok, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DataError("bad PGM header in " + path.string());
  }
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  if (image.pixels.size() != image.width * image.height) {
    throw InvalidInput("write_pgm: pixel count does not match dimensions");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "P5\n" << image.width << " " << image.height << "\n" << image.maxval << "\n";
  if (image.maxval < 256) {
    std::vector<char> bytes(image.pixels.size());
    std::transform(image.pixels.begin(), image.pixels.end(), bytes.begin(),
                   [](std::uint16_t p) { return static_cast<char>(p); });
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  } else {
    for (std::uint16_t p : image.pixels) {
      out.put(static_cast<char>(p >> 8));
      out.put(static_cast<char>(p & 0xFF));
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  if (next_token(in) != "P5") throw DataError("not a binary PGM: " + path.string());
  GrayImage img;
  img.width = parse_size(next_token(in), path);
  img.height = parse_size(next_token(in), path);
  const std::size_t maxval = parse_size(next_token(in), path);
  if (img.width == 0 || img.height == 0 || maxval == 0 || maxval > 65535) {
    throw DataError("bad PGM header in " + path.string());
  }
  img.maxval = static_cast<std::uint16_t>(maxval);
  img.pixels.resize(img.width * img.height);
  const std::size_t bytes_per = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> raw(img.pixels.size() * bytes_per);
  if (!in.read(reinterpret_cast<char*>(raw.data()),
               static_cast<std::streamsize>(raw.size()))) {
    throw DataError("truncated PGM: " + path.string());
  }
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    img.pixels[i] = bytes_per == 1
                        ? raw[i]
                        : static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
    if (img.pixels[i] > img.maxval) throw DataError("PGM pixel above maxval");
  }
  return img;
}

GrayImage to_gray(const Tensor<float>& map, std::uint16_t maxval) {
  const Shape& s = map.shape();
  if (!(s.size() == 2 || (s.size() == 3 && s[0] == 1))) {
    throw InvalidInput("to_gray: expected [H,W] or [1,H,W], got " + shape_string(s));
  }
  GrayImage img;
  img.height = s[s.size() - 2];
  img.width = s[s.size() - 1];
  img.maxval = maxval;
  img.pixels.resize(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) {
    const double v = std::clamp(static_cast<double>(map[i]), 0.0, 1.0);
    img.pixels[i] = static_cast<std::uint16_t>(std::lround(v * maxval));
  }
  return img;
}

Tensor<float> from_gray(const GrayImage& image) {
  std::vector<float> v(image.pixels.size());
  const double scale = 1.0 / image.maxval;
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = static_cast<float>(image.pixels[i] * scale);
  }
  return Tensor<float>({image.height, image.width}, std::move(v));
}

GrayImage composite_strip(std::span<const Tensor<float>> panels) {
  if (panels.empty()) throw InvalidInput("composite_strip: no panels");
  constexpr std::size_t kGap = 2;
  const Shape& s = panels.front().shape();
  const std::size_t h = s[s.size() - 2], w = s[s.size() - 1];
  GrayImage strip;
  strip.height = h;
  strip.width = panels.size() * w + (panels.size() - 1) * kGap;
  strip.pixels.assign(strip.width * strip.height, 0);
  for (std::size_t p = 0; p < panels.size(); ++p) {
    if (panels[p].size() != h * w) throw InvalidInput("composite_strip: panel size mismatch");
    const GrayImage g = to_gray(panels[p].reshaped({h, w}));
    for (std::size_t y = 0; y < h; ++y) {
      std::copy_n(g.pixels.begin() + static_cast<std::ptrdiff_t>(y * w), w,
                  strip.pixels.begin() +
                      static_cast<std::ptrdiff_t>(y * strip.width + p * (w + kGap)));
    }
  }
  return strip;
}

}  // namespace hrcam::io
