#include "hrcam/model.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <json.hpp>

#include "hrcam/config.hpp"
#include "hrcam/tensor_io.hpp"

namespace hrcam {

ModelSpec ModelSpec::desk_default(bool residual) {
  ModelSpec spec;
  for (std::size_t width : {16u, 32u, 64u}) {
    spec.blocks.push_back(BlockSpec{{width, width}, 3, residual, true});
  }
  return spec;
}

void ModelSpec::validate() const {
  if (blocks.empty()) throw ConfigError("model spec has no blocks");
  if (class_count < 2) throw ConfigError("class_count must be >= 2");
  if (!std::isfinite(input_mean)) throw ConfigError("input_mean must be finite");
  if (input_shape[0] == 0 || input_shape[1] == 0 || input_shape[2] == 0) {
    throw ConfigError("input_shape extents must be positive");
  }
  std::size_t h = input_shape[1], w = input_shape[2];
  bool any_pool = false;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const BlockSpec& blk = blocks[b];
    const std::string where = "block " + std::to_string(b);
    if (blk.conv_channels.empty()) throw ConfigError(where + " has no conv layer");
    for (auto c : blk.conv_channels) {
      if (c == 0) throw ConfigError(where + " has a zero-width conv");
    }
    if (blk.kernel_size == 0 || blk.kernel_size % 2 == 0) {
      throw ConfigError(where + ": kernel_size must be odd");
    }
    if (blk.kernel_size > h + 2 * (blk.kernel_size / 2) ||
        blk.kernel_size > w + 2 * (blk.kernel_size / 2)) {
      throw ConfigError(where + ": kernel larger than feature map");
    }
    if (blk.residual) {
      if (blk.conv_channels.size() < 2) {
        throw ConfigError(where + ": residual add needs at least two convs");
      }
      if (blk.conv_channels.front() != blk.conv_channels.back()) {
        throw ConfigError(where + ": residual add between " +
                          std::to_string(blk.conv_channels.front()) + " and " +
                          std::to_string(blk.conv_channels.back()) + " channels");
      }
    }
    if (blk.maxpool) {
      if (h % 2 != 0 || w % 2 != 0) {
        throw ConfigError(where + ": max-pool input " + std::to_string(h) + "x" +
                          std::to_string(w) + " is not divisible by 2");
      }
      any_pool = true;
      // The last stage's pool only marks a tap; its output is never used.
      if (b + 1 < blocks.size()) {
        h /= 2;
        w /= 2;
      }
    }
  }
  if (!any_pool) throw ConfigError("model spec has no max-pool; no tap points");
}

std::size_t TapSet::total_channels() const {
  std::size_t n = 0;
  for (auto c : channels) n += c;
  return n;
}

TapSet derive_taps(const ModelSpec& spec) {
  TapSet taps;
  for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
    if (!spec.blocks[b].maxpool) continue;
    taps.layer_ids.push_back("block" + std::to_string(b));
    taps.block_indices.push_back(b);
    taps.channels.push_back(spec.blocks[b].conv_channels.back());
  }
  return taps;
}

std::string conv_weight_name(std::size_t block, std::size_t conv) {
  return "block" + std::to_string(block) + ".conv" + std::to_string(conv) + ".weight";
}

std::string conv_bias_name(std::size_t block, std::size_t conv) {
  return "block" + std::to_string(block) + ".conv" + std::to_string(conv) + ".bias";
}

std::size_t feature_channels(const ModelSpec& spec) {
  return spec.blocks.back().conv_channels.back();
}

template <typename T>
BuiltModel<T> build_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  auto he = [&rng](Shape shape, std::size_t fan_in) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    Tensor<T> t(std::move(shape));
    for (auto& v : t.data()) v = static_cast<T>(dist(rng));
    return t;
  };

  BuiltModel<T> m;
  std::size_t in_ch = spec.input_shape[0];
  for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
    const BlockSpec& blk = spec.blocks[b];
    for (std::size_t i = 0; i < blk.conv_channels.size(); ++i) {
      const std::size_t out_ch = blk.conv_channels[i];
      const std::size_t k = blk.kernel_size;
      m.params[conv_weight_name(b, i)] = he({out_ch, in_ch, k, k}, in_ch * k * k);
      m.params[conv_bias_name(b, i)] = Tensor<T>({out_ch});
      in_ch = out_ch;
    }
  }
  m.params[kClassifierWeight] = he({in_ch, spec.class_count}, in_ch);
  m.params[kClassifierBias] = Tensor<T>({spec.class_count});
  m.taps = derive_taps(spec);
  return m;
}

template <typename T>
HeadWeights<T> make_head(const TapSet& taps, std::size_t class_count) {
  return {Tensor<T>({taps.total_channels(), class_count}), Tensor<T>({class_count})};
}

template <typename T>
std::uint64_t checksum(const Parameters<T>& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [name, t] : params) {
    mix(name.data(), name.size());
    for (auto e : t.shape()) mix(&e, sizeof(e));
    mix(t.data().data(), t.size() * sizeof(T));
  }
  return h;
}

template <typename T>
Parameters<T> cast_parameters(const Parameters<float>& params) {
  Parameters<T> out;
  for (const auto& [name, t] : params) out.emplace(name, t.template cast<T>());
  return out;
}

namespace {
constexpr std::array<char, 4> kModelMagic{'H', 'R', 'M', '1'};
}

void save_model(const std::filesystem::path& path, const ModelFile& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  nlohmann::json header;
  header["spec"] = model.spec;
  header["taps"] = model.taps;
  const std::string text = header.dump();
  out.write(kModelMagic.data(), kModelMagic.size());
  io::write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));

  std::vector<std::pair<std::string, const Tensor<float>*>> tensors;
  for (const auto& [name, t] : model.params) tensors.emplace_back(name, &t);
  if (model.has_head) {
    tensors.emplace_back(kHeadWeight, &model.head.weight);
    tensors.emplace_back(kHeadBias, &model.head.bias);
  }
  io::write_u64(out, tensors.size());
  for (const auto& [name, t] : tensors) {
    io::write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    io::write_tensor(out, *t);
  }
  if (!out) throw DataError("write failed: " + path.string());
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model " + path.string());
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kModelMagic) {
    throw DataError(path.string() + " is not an HRM1 model file");
  }
  const std::uint64_t len = io::read_u64(in);
  if (len > (1u << 24)) throw DataError("model header too large");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) {
    throw DataError("truncated model header");
  }
  ModelFile model;
  try {
    const auto header = nlohmann::json::parse(text);
    model.spec = header.at("spec").get<ModelSpec>();
    model.taps = header.at("taps").get<TapSet>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad model header: ") + e.what());
  }
  const std::uint64_t count = io::read_u64(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = io::read_u32(in);
    if (name_len > 4096) throw DataError("bad tensor name length");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    Tensor<float> t = io::read_tensor<float>(in);
    if (name == kHeadWeight) {
      model.head.weight = std::move(t);
      model.has_head = true;
    } else if (name == kHeadBias) {
      model.head.bias = std::move(t);
    } else {
      model.params.emplace(std::move(name), std::move(t));
    }
  }
  if (model.has_head && model.head.weight.dim(0) != model.taps.total_channels()) {
    throw DataError("head weight rows do not match tap channels");
  }
  return model;
}

template BuiltModel<float> build_model(const ModelSpec&, std::uint64_t);
template BuiltModel<double> build_model(const ModelSpec&, std::uint64_t);
template HeadWeights<float> make_head(const TapSet&, std::size_t);
template HeadWeights<double> make_head(const TapSet&, std::size_t);
template std::uint64_t checksum(const Parameters<float>&);
template std::uint64_t checksum(const Parameters<double>&);
template Parameters<float> cast_parameters(const Parameters<float>&);
template Parameters<double> cast_parameters(const Parameters<float>&);

}  // namespace hrcam
