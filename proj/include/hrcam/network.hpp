#pragma once

// Forward and hand-written backward passes through the configurable backbone.
//
// Stage output (post-ReLU, pre-pool) is the tap tensor. The classifier is
// GAP over the final stage output followed by one dense layer, so the
// final stage's max-pool is never evaluated.

#include <optional>
#include <vector>

#include "hrcam/model.hpp"
#include "hrcam/ops.hpp"

namespace hrcam {

template <typename T>
struct BlockTrace {
  std::vector<ops::Conv2dCache<T>> convs;
  std::vector<Tensor<T>> pre_activations;
  Tensor<T> output;
  std::optional<ops::MaxPoolResult<T>> pool;
};

template <typename T>
struct ForwardTrace {
  std::vector<BlockTrace<T>> blocks;
  Tensor<T> pooled_features;  // GAP of the final stage output, [B, C]
  bool valid = false;
};

template <typename T>
struct ForwardOutput {
  Tensor<T> logits;             // [B, classes]
  std::vector<Tensor<T>> taps;  // TapSet order, native resolution
  Tensor<T> features;           // final stage output, [B, C, h, w]
};

/// Throws InvalidInput when images are not [B, C, H, W] with the spec's C/H/W.
template <typename T>
ForwardOutput<T> forward(const Parameters<T>& params, const ModelSpec& spec,
                         const Tensor<T>& images,
                         ForwardTrace<T>* trace = nullptr);

template <typename T>
struct BackwardOutput {
  Parameters<T> grads;               // empty unless requested
  std::vector<Tensor<T>> tap_grads;  // d(objective)/d(tap), TapSet order
  Tensor<T> feature_grad;            // d(objective)/d(final stage output)
};

struct BackwardOptions {
  bool param_grads = true;
  /// Stop once the gradient at this tap index is known.
  std::optional<std::size_t> stop_at_tap;
};

/// Backpropagates grad_logits (d objective / d logits) through a recorded
/// forward pass. Throws UsageError if the trace is empty.
template <typename T>
BackwardOutput<T> backward(const Parameters<T>& params, const ModelSpec& spec,
                           const ForwardTrace<T>& trace,
                           const Tensor<T>& grad_logits,
                           const BackwardOptions& options = {});

}  // namespace hrcam
