#pragma once

#include <functional>

// Two-phase training. Phase 1 trains the backbone and its GAP + dense
// classifier end to end. Phase 2 freezes the backbone and fits a single dense
// layer on the GAP of the upsampled, concatenated tap stack.

#include <cstdint>
#include <vector>

#include "hrcam/augment.hpp"
#include "hrcam/model.hpp"
#include "hrcam/network.hpp"
#include "hrcam/simdata.hpp"

namespace hrcam {

struct TrainConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  std::uint64_t seed = 7;
  AugmentConfig augmentation;
  /// Phase 2 only: average taps at native resolution instead of the
  /// upsampled stack. Not used for reported results.
  bool gap_on_native_taps = false;

  void validate() const;
  ops::AdamConfig adam() const { return {learning_rate, beta1, beta2, epsilon}; }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainLog {
  std::vector<double> epoch_loss;      // sample-weighted mean per epoch
  std::vector<double> epoch_accuracy;  // on the (augmented) training batches
};

/// Called after each epoch with the epoch index and the log so far.
using EpochCallback = std::function<void(std::size_t epoch, const TrainLog& log)>;

struct BackboneTraining {
  Parameters<float> params;
  TapSet taps;
  TrainLog log;
};

/// Phase 1 from a fresh build_model(spec, cfg.seed).
BackboneTraining train_backbone(const std::vector<sim::Sample>& samples,
                                const ModelSpec& spec, const TrainConfig& cfg);

/// Phase 1 continuing from the given parameters.
BackboneTraining train_backbone(const std::vector<sim::Sample>& samples,
                                const ModelSpec& spec, const TrainConfig& cfg,
                                Parameters<float> initial,
                                const EpochCallback& on_epoch = {});

/// Upsamples every tap bilinearly to out_h x out_w and concatenates along
/// channels in tap order: [B, N, out_h, out_w].
template <typename T>
Tensor<T> concat_features(const std::vector<Tensor<T>>& taps, std::size_t out_h,
                          std::size_t out_w);

/// GAP-head input per image: GAP of the upsampled stack, [B, N].
template <typename T>
Tensor<T> head_inputs(const Parameters<T>& params, const ModelSpec& spec,
                      const Tensor<T>& images, bool native_taps = false);

struct HeadTraining {
  HeadWeights<float> head;
  TrainLog log;
  std::uint64_t backbone_checksum_before = 0;
  std::uint64_t backbone_checksum_after = 0;
};

/// Phase 2. Only the head is optimized; the backbone is read-only.
HeadTraining train_gap_head(const std::vector<sim::Sample>& samples,
                            const Parameters<float>& params, const ModelSpec& spec,
                            const TapSet& taps, const TrainConfig& cfg);

HeadTraining train_gap_head(const std::vector<sim::Sample>& samples,
                            const Parameters<float>& params, const ModelSpec& spec,
                            const TapSet& taps, const TrainConfig& cfg,
                            HeadWeights<float> initial,
                            const EpochCallback& on_epoch = {});

/// Softmax over GAP-head logits, [B, classes].
template <typename T>
Tensor<T> predict(const Tensor<T>& images, const Parameters<T>& params,
                  const ModelSpec& spec, const TapSet& taps,
                  const HeadWeights<T>& head);

/// Softmax over the phase-1 classifier logits, [B, classes].
template <typename T>
Tensor<T> predict_backbone(const Tensor<T>& images, const Parameters<T>& params,
                           const ModelSpec& spec);

/// Stacks sample images into [B, 1, H, W].
Tensor<float> batch_images(const std::vector<sim::Sample>& samples,
                           std::span<const std::size_t> indices);

}  // namespace hrcam
