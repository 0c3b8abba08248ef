#pragma once

// Class activation maps at input resolution.
//
//   hrcam   : sum_i W_i^c f_i over the upsampled multi-tap stack, using the
//             phase-2 head weights. Already at input size; nothing is
//             resampled after the weighted sum, and no ReLU is applied.
//   zhou    : classifier-weighted sum of the final stage maps, then bilinear
//             upsampling.
//   gradcam : ReLU(sum_k alpha_k f_k) at one tap, alpha_k the spatial mean of
//             d logit_c / d f_k, then bilinear upsampling.

#include <optional>
#include <string>

#include "hrcam/model.hpp"

namespace hrcam::cam {

enum class Method { hrcam, zhou, gradcam };

std::string to_string(Method m);
/// Throws InvalidInput for unknown names.
Method parse_method(const std::string& name);

template <typename T>
struct CamMap {
  Tensor<T> values;  // [H, W]
  std::size_t class_id = 0;
  Method method = Method::hrcam;
  bool normalized = false;
  /// True when the method resampled its map after the weighted sum.
  bool post_sum_interpolation = false;
};

/// `image` is [C,H,W] or [1,C,H,W].
template <typename T>
CamMap<T> hrcam(const Tensor<T>& image, const Parameters<T>& params,
                const ModelSpec& spec, const TapSet& taps,
                const HeadWeights<T>& head, std::size_t class_id);

/// Weighted sum over an already upsampled [1,N,H,W] stack.
template <typename T>
Tensor<T> weighted_map_sum(const Tensor<T>& stack, const Tensor<T>& weights,
                           std::size_t class_id);

template <typename T>
CamMap<T> zhou_cam(const Tensor<T>& image, const Parameters<T>& params,
                   const ModelSpec& spec, std::size_t class_id);

/// Channel weights alpha_k at the given tap for one image.
template <typename T>
std::vector<T> gradcam_weights(const Tensor<T>& image, const Parameters<T>& params,
                               const ModelSpec& spec, std::size_t class_id,
                               std::size_t tap_index);

/// tap_index defaults to the penultimate tap (the only tap when k = 1).
template <typename T>
CamMap<T> grad_cam(const Tensor<T>& image, const Parameters<T>& params,
                   const ModelSpec& spec, std::size_t class_id,
                   std::optional<std::size_t> tap_index = std::nullopt);

std::size_t default_gradcam_tap(const TapSet& taps);

/// (v - min) / (max - min); a constant map becomes all zeros.
template <typename T>
CamMap<T> normalize_cam(const CamMap<T>& map);

}  // namespace hrcam::cam
