#include "hrcam/cam.hpp"

#include <algorithm>

#include "hrcam/network.hpp"
#include "hrcam/train.hpp"

namespace hrcam::cam {
namespace {

template <typename T>
Tensor<T> as_batch(const Tensor<T>& image) {
  if (image.rank() == 4) {
    if (image.dim(0) != 1) throw InvalidInput("CAM input must hold exactly one image");
    return image;
  }
  if (image.rank() == 3) {
    return image.reshaped({1, image.dim(0), image.dim(1), image.dim(2)});
  }
  throw InvalidInput("CAM input must be [C,H,W] or [1,C,H,W], got " +
                     shape_string(image.shape()));
}

void check_class(std::size_t class_id, const ModelSpec& spec) {
  if (class_id >= spec.class_count) {
    throw InvalidInput("class id " + std::to_string(class_id) + " out of range (" +
                       std::to_string(spec.class_count) + " classes)");
  }
}

// Resamples a [1,1,h,w] map to the model input size as [H,W].
template <typename T>
Tensor<T> to_input_size(const Tensor<T>& map, const ModelSpec& spec) {
  return ops::bilinear_upsample(map, spec.height(), spec.width())
      .reshaped({spec.height(), spec.width()});
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::hrcam: return "hrcam";
    case Method::zhou: return "zhou";
    case Method::gradcam: return "gradcam";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "hrcam") return Method::hrcam;
  if (name == "zhou") return Method::zhou;
  if (name == "gradcam") return Method::gradcam;
  throw InvalidInput("unknown CAM method '" + name + "' (expected hrcam, zhou or gradcam)");
}

template <typename T>
Tensor<T> weighted_map_sum(const Tensor<T>& stack, const Tensor<T>& weights,
                           std::size_t class_id) {
  if (stack.rank() != 4 || stack.dim(0) != 1) {
    throw InvalidInput("weighted_map_sum: stack must be [1,N,H,W]");
  }
  const std::size_t N = stack.dim(1), H = stack.dim(2), W = stack.dim(3);
  if (weights.rank() != 2 || weights.dim(0) != N || class_id >= weights.dim(1)) {
    throw InvalidInput("weighted_map_sum: weights " + shape_string(weights.shape()) +
                       " do not match " + std::to_string(N) + " maps");
  }
  Tensor<T> out({H, W});
  const std::size_t plane = H * W;
  for (std::size_t i = 0; i < N; ++i) {
    const T w = weights.at(i, class_id);
    const T* f = stack.data().data() + i * plane;
    T* o = out.data().data();
    for (std::size_t p = 0; p < plane; ++p) o[p] += w * f[p];
  }
  return out;
}

template <typename T>
CamMap<T> hrcam(const Tensor<T>& image, const Parameters<T>& params,
                const ModelSpec& spec, const TapSet& taps,
                const HeadWeights<T>& head, std::size_t class_id) {
  check_class(class_id, spec);
  if (head.weight.rank() != 2 || head.weight.dim(0) != taps.total_channels()) {
    throw InvalidInput("hrcam: head has " + shape_string(head.weight.shape()) +
                       " weights for " + std::to_string(taps.total_channels()) + " maps");
  }
  const ForwardOutput<T> fwd = forward(params, spec, as_batch(image));
  const Tensor<T> stack = concat_features(fwd.taps, spec.height(), spec.width());
  return {weighted_map_sum(stack, head.weight, class_id), class_id, Method::hrcam, false,
          false};
}

template <typename T>
CamMap<T> zhou_cam(const Tensor<T>& image, const Parameters<T>& params,
                   const ModelSpec& spec, std::size_t class_id) {
  check_class(class_id, spec);
  const ForwardOutput<T> fwd = forward(params, spec, as_batch(image));
  const Tensor<T> coarse = weighted_map_sum(fwd.features, params.at(kClassifierWeight), class_id);
  const Tensor<T> map = to_input_size(coarse.reshaped({1, 1, coarse.dim(0), coarse.dim(1)}), spec);
  return {map, class_id, Method::zhou, false, true};
}

std::size_t default_gradcam_tap(const TapSet& taps) {
  if (taps.size() == 0) throw InvalidInput("model has no taps");
  return taps.size() >= 2 ? taps.size() - 2 : 0;
}

template <typename T>
std::vector<T> gradcam_weights(const Tensor<T>& image, const Parameters<T>& params,
                               const ModelSpec& spec, std::size_t class_id,
                               std::size_t tap_index) {
  check_class(class_id, spec);
  const TapSet taps = derive_taps(spec);
  if (tap_index >= taps.size()) {
    throw InvalidInput("grad-cam layer " + std::to_string(tap_index) + " is not a tap (" +
                       std::to_string(taps.size()) + " taps)");
  }
  ForwardTrace<T> trace;
  forward(params, spec, as_batch(image), &trace);
  Tensor<T> seed({1, spec.class_count});
  seed.at(0, class_id) = T{1};
  const BackwardOutput<T> bwd = backward(params, spec, trace, seed, {false, tap_index});
  const Tensor<T>& g = bwd.tap_grads[tap_index];
  const Tensor<T> means = ops::gap_forward(g);
  return {means.data().begin(), means.data().end()};
}

template <typename T>
CamMap<T> grad_cam(const Tensor<T>& image, const Parameters<T>& params,
                   const ModelSpec& spec, std::size_t class_id,
                   std::optional<std::size_t> tap_index) {
  const TapSet taps = derive_taps(spec);
  const std::size_t tap = tap_index.value_or(default_gradcam_tap(taps));
  const std::vector<T> alpha = gradcam_weights(image, params, spec, class_id, tap);
  const ForwardOutput<T> fwd = forward(params, spec, as_batch(image));
  const Tensor<T>& f = fwd.taps[tap];
  const Tensor<T> weights({alpha.size(), 1}, alpha);
  Tensor<T> coarse = weighted_map_sum(f, weights, 0);
  for (auto& v : coarse.data()) v = std::max(v, T{0});
  const Tensor<T> map = to_input_size(coarse.reshaped({1, 1, coarse.dim(0), coarse.dim(1)}), spec);
  return {map, class_id, Method::gradcam, false, true};
}

template <typename T>
CamMap<T> normalize_cam(const CamMap<T>& map) {
  CamMap<T> out = map;
  out.normalized = true;
  if (map.values.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(map.values.data().begin(),
                                                  map.values.data().end());
  const T lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) {
    out.values.fill(T{0});
    return out;
  }
  const T range = hi - lo;
  for (auto& v : out.values.data()) v = (v - lo) / range;
  return out;
}

#define HRCAM_INSTANTIATE_CAM(T)                                                        \
  template Tensor<T> weighted_map_sum(const Tensor<T>&, const Tensor<T>&, std::size_t); \
  template CamMap<T> hrcam(const Tensor<T>&, const Parameters<T>&, const ModelSpec&,    \
                           const TapSet&, const HeadWeights<T>&, std::size_t);          \
  template CamMap<T> zhou_cam(const Tensor<T>&, const Parameters<T>&, const ModelSpec&, \
                              std::size_t);                                             \
  template std::vector<T> gradcam_weights(const Tensor<T>&, const Parameters<T>&,       \
                                          const ModelSpec&, std::size_t, std::size_t);  \
  template CamMap<T> grad_cam(const Tensor<T>&, const Parameters<T>&, const ModelSpec&, \
                              std::size_t, std::optional<std::size_t>);                 \
  template CamMap<T> normalize_cam(const CamMap<T>&);

HRCAM_INSTANTIATE_CAM(float)
HRCAM_INSTANTIATE_CAM(double)

#undef HRCAM_INSTANTIATE_CAM

}  // namespace hrcam::cam
