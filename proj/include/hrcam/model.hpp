#pragma once

// Backbone architecture description, parameter storage and the HRM1 model
// container.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hrcam/tensor.hpp"

namespace hrcam {

/// One stage of the backbone: each listed conv is followed by a ReLU. With
/// `residual`, the output of the first conv (after its ReLU) is added to the
/// last conv's pre-activation. A stage with `maxpool` ends in a 2x2/2 max-pool
/// and carries a tap point immediately before it.
struct BlockSpec {
  std::vector<std::size_t> conv_channels;
  std::size_t kernel_size = 3;
  bool residual = false;
  bool maxpool = true;

  friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

struct ModelSpec {
  std::vector<BlockSpec> blocks;
  std::array<std::size_t, 3> input_shape{1, 64, 64};  // C, H, W
  std::size_t class_count = 2;
  /// Subtracted from every input pixel before the first conv, so that zero
  /// padding sits at the typical image level. pipeline::train sets it to the
  /// mean training pixel.
  double input_mean = 0.0;

  /// Three stages of conv3x3-relu-conv3x3-relu-maxpool, widths 16/32/64, on
  /// 64x64 single-channel input.
  static ModelSpec desk_default(bool residual = false);

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;

  std::size_t height() const { return input_shape[1]; }
  std::size_t width() const { return input_shape[2]; }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Ordered tap points, one per max-pool, in network order. Head weight row i
/// refers to channel i of the concatenation of the taps in this order.
struct TapSet {
  std::vector<std::string> layer_ids;
  std::vector<std::size_t> block_indices;
  std::vector<std::size_t> channels;

  std::size_t size() const { return layer_ids.size(); }
  /// Total number of concatenated feature maps, the sum of per-tap channels.
  std::size_t total_channels() const;

  friend bool operator==(const TapSet&, const TapSet&) = default;
};

TapSet derive_taps(const ModelSpec& spec);

template <typename T>
using Parameters = std::map<std::string, Tensor<T>>;

template <typename T>
struct HeadWeights {
  Tensor<T> weight;  // [N, classes]; column c holds the class-c map weights
  Tensor<T> bias;    // [classes]
};

/// Parameter names used by the backbone.
std::string conv_weight_name(std::size_t block, std::size_t conv);
std::string conv_bias_name(std::size_t block, std::size_t conv);
inline constexpr const char* kClassifierWeight = "fc.weight";
inline constexpr const char* kClassifierBias = "fc.bias";
inline constexpr const char* kHeadWeight = "head.weight";
inline constexpr const char* kHeadBias = "head.bias";

/// Channel count of the final stage output, which feeds the classifier GAP.
std::size_t feature_channels(const ModelSpec& spec);

template <typename T>
struct BuiltModel {
  Parameters<T> params;
  TapSet taps;
};

/// Validates the spec, draws He-scaled Gaussian weights (stddev
/// sqrt(2 / fan_in)) with zero biases, and derives the tap set.
template <typename T>
BuiltModel<T> build_model(const ModelSpec& spec, std::uint64_t seed);

/// Zero-initialized GAP head over `taps.total_channels()` inputs.
template <typename T>
HeadWeights<T> make_head(const TapSet& taps, std::size_t class_count);

/// FNV-1a over parameter names and raw value bytes, in name order.
template <typename T>
std::uint64_t checksum(const Parameters<T>& params);

template <typename T>
Parameters<T> cast_parameters(const Parameters<float>& params);

/// Everything a trained model file holds.
struct ModelFile {
  ModelSpec spec;
  TapSet taps;
  Parameters<float> params;
  HeadWeights<float> head;
  bool has_head = false;
};

/// HRM1 container: "HRM1" | u64 JSON length | JSON (spec + taps) |
/// u64 tensor count | per tensor: u32 name length, name, HRT1 tensor.
void save_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace hrcam
