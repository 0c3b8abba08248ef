#include "hrcam/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace hrcam {
namespace {

// Distinct streams for shuffling/augmentation so they never alias the
// weight-initialization stream drawn from the same seed.
constexpr std::uint64_t kShuffleStream = 0x9e3779b97f4a7c15ULL;

Tensor<float> one_hot(const std::vector<sim::Sample>& samples,
                      std::span<const std::size_t> indices, std::size_t classes) {
  Tensor<float> t({indices.size(), classes});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto label = static_cast<std::size_t>(samples[indices[i]].label);
    if (label >= classes) throw InvalidInput("sample label out of range");
    t.at(i, label) = 1.0f;
  }
  return t;
}

std::size_t count_correct(const Tensor<float>& logits, const Tensor<float>& targets) {
  std::size_t correct = 0;
  for (std::size_t b = 0; b < logits.dim(0); ++b) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.dim(1); ++c) {
      if (logits.at(b, c) > logits.at(b, best)) best = c;
    }
    correct += targets.at(b, best) == 1.0f;
  }
  return correct;
}

void require_finite(float loss, const char* phase, std::size_t epoch, std::size_t batch) {
  if (!std::isfinite(loss)) {
    std::ostringstream msg;
    msg << phase << ": non-finite loss at epoch " << epoch << ", batch " << batch;
    throw TrainingDiverged(msg.str());
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be > 0");
}

Tensor<float> batch_images(const std::vector<sim::Sample>& samples,
                           std::span<const std::size_t> indices) {
  std::vector<Tensor<float>> items;
  items.reserve(indices.size());
  for (auto i : indices) items.push_back(samples[i].image);
  return stack<float>(items);
}

BackboneTraining train_backbone(const std::vector<sim::Sample>& samples,
                                const ModelSpec& spec, const TrainConfig& cfg) {
  BuiltModel<float> built = build_model<float>(spec, cfg.seed);
  return train_backbone(samples, spec, cfg, std::move(built.params));
}

BackboneTraining train_backbone(const std::vector<sim::Sample>& samples,
                                const ModelSpec& spec, const TrainConfig& cfg,
                                Parameters<float> initial, const EpochCallback& on_epoch) {
  cfg.validate();
  spec.validate();
  if (samples.empty()) throw InvalidInput("train_backbone: no samples");

  BackboneTraining result{std::move(initial), derive_taps(spec), {}};
  std::map<std::string, ops::AdamState<float>> adam;
  for (const auto& [name, p] : result.params) {
    adam.emplace(name, ops::AdamState<float>::zeros_like(p));
  }
  std::mt19937_64 rng(cfg.seed ^ kShuffleStream);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const ops::AdamConfig opt = cfg.adam();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0, batch = 0; start < order.size();
         start += cfg.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::span<const std::size_t> idx(order.data() + start, end - start);

      std::vector<Tensor<float>> images;
      images.reserve(idx.size());
      for (auto i : idx) {
        if (cfg.augmentation.any()) {
          images.push_back(augment(samples[i].image, samples[i].mask, cfg.augmentation, rng).image);
        } else {
          images.push_back(samples[i].image);
        }
      }
      const Tensor<float> x = stack<float>(images);
      const Tensor<float> y = one_hot(samples, idx, spec.class_count);

      ForwardTrace<float> trace;
      const ForwardOutput<float> fwd = forward(result.params, spec, x, &trace);
      const ops::SoftmaxCrossEntropy<float> ce = ops::softmax_ce(fwd.logits, y);
      require_finite(ce.loss, "phase 1", epoch, batch);
      loss_sum += static_cast<double>(ce.loss) * static_cast<double>(idx.size());
      correct += count_correct(fwd.logits, y);

      BackwardOutput<float> bwd = backward(result.params, spec, trace, ce.grad_logits);
      for (auto& [name, p] : result.params) {
        ops::adam_step(p, bwd.grads.at(name), adam.at(name), opt);
      }
    }
    result.log.epoch_loss.push_back(loss_sum / static_cast<double>(samples.size()));
    result.log.epoch_accuracy.push_back(static_cast<double>(correct) /
                                        static_cast<double>(samples.size()));
    if (on_epoch) on_epoch(epoch, result.log);
  }
  return result;
}

template <typename T>
Tensor<T> concat_features(const std::vector<Tensor<T>>& taps, std::size_t out_h,
                          std::size_t out_w) {
  if (taps.empty()) throw InvalidInput("concat_features: no taps");
  const std::size_t B = taps.front().dim(0);
  std::size_t N = 0;
  for (const auto& t : taps) {
    if (t.rank() != 4 || t.dim(0) != B) throw InvalidInput("concat_features: bad tap shape");
    N += t.dim(1);
  }
  const std::size_t plane = out_h * out_w;
  Tensor<T> out({B, N, out_h, out_w});
  std::size_t offset = 0;
  for (const auto& t : taps) {
    const Tensor<T> up = ops::bilinear_upsample(t, out_h, out_w);
    const std::size_t m = t.dim(1);
    for (std::size_t b = 0; b < B; ++b) {
      std::copy_n(up.data().begin() + static_cast<std::ptrdiff_t>(b * m * plane), m * plane,
                  out.data().begin() + static_cast<std::ptrdiff_t>((b * N + offset) * plane));
    }
    offset += m;
  }
  return out;
}

template <typename T>
Tensor<T> head_inputs(const Parameters<T>& params, const ModelSpec& spec,
                      const Tensor<T>& images, bool native_taps) {
  const ForwardOutput<T> fwd = forward(params, spec, images);
  if (!native_taps) {
    return ops::gap_forward(concat_features(fwd.taps, spec.height(), spec.width()));
  }
  const std::size_t B = images.dim(0);
  std::size_t N = 0;
  for (const auto& t : fwd.taps) N += t.dim(1);
  Tensor<T> out({B, N});
  std::size_t offset = 0;
  for (const auto& t : fwd.taps) {
    const Tensor<T> g = ops::gap_forward(t);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < t.dim(1); ++c) out.at(b, offset + c) = g.at(b, c);
    offset += t.dim(1);
  }
  return out;
}

HeadTraining train_gap_head(const std::vector<sim::Sample>& samples,
                            const Parameters<float>& params, const ModelSpec& spec,
                            const TapSet& taps, const TrainConfig& cfg) {
  return train_gap_head(samples, params, spec, taps, cfg,
                        make_head<float>(taps, spec.class_count));
}

HeadTraining train_gap_head(const std::vector<sim::Sample>& samples,
                            const Parameters<float>& params, const ModelSpec& spec,
                            const TapSet& taps, const TrainConfig& cfg,
                            HeadWeights<float> initial, const EpochCallback& on_epoch) {
  cfg.validate();
  if (samples.empty()) throw InvalidInput("train_gap_head: no samples");
  if (taps != derive_taps(spec)) throw InvalidInput("train_gap_head: tap set does not match spec");
  if (initial.weight.shape() != Shape{taps.total_channels(), spec.class_count}) {
    throw InvalidInput("train_gap_head: head shape does not match tap channels");
  }

  HeadTraining result;
  result.backbone_checksum_before = checksum(params);
  result.head = std::move(initial);
  const std::size_t N = taps.total_channels();

  // Without augmentation the frozen features never change; compute them once.
  const bool cache_features = !cfg.augmentation.any();
  std::vector<Tensor<float>> cached;
  if (cache_features) {
    cached.reserve(samples.size());
    for (const auto& s : samples) {
      const Tensor<float> x = s.image.reshaped({1, s.image.dim(0), s.image.dim(1), s.image.dim(2)});
      cached.push_back(head_inputs(params, spec, x, cfg.gap_on_native_taps).reshaped({N}));
    }
  }

  auto weight_state = ops::AdamState<float>::zeros_like(result.head.weight);
  auto bias_state = ops::AdamState<float>::zeros_like(result.head.bias);
  std::mt19937_64 rng(cfg.seed ^ kShuffleStream);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const ops::AdamConfig opt = cfg.adam();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0, batch = 0; start < order.size();
         start += cfg.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::span<const std::size_t> idx(order.data() + start, end - start);

      Tensor<float> features({idx.size(), N});
      if (cache_features) {
        for (std::size_t i = 0; i < idx.size(); ++i) {
          std::copy_n(cached[idx[i]].data().begin(), N,
                      features.data().begin() + static_cast<std::ptrdiff_t>(i * N));
        }
      } else {
        std::vector<Tensor<float>> images;
        for (auto i : idx) {
          images.push_back(augment(samples[i].image, samples[i].mask, cfg.augmentation, rng).image);
        }
        features = head_inputs(params, spec, stack<float>(images), cfg.gap_on_native_taps);
      }

      const Tensor<float> y = one_hot(samples, idx, spec.class_count);
      const Tensor<float> logits =
          ops::dense_forward(features, result.head.weight, result.head.bias);
      const ops::SoftmaxCrossEntropy<float> ce = ops::softmax_ce(logits, y);
      require_finite(ce.loss, "phase 2", epoch, batch);
      loss_sum += static_cast<double>(ce.loss) * static_cast<double>(idx.size());
      correct += count_correct(logits, y);

      const ops::DenseGrads<float> g =
          ops::dense_backward(features, result.head.weight, ce.grad_logits);
      ops::adam_step(result.head.weight, g.weights, weight_state, opt);
      ops::adam_step(result.head.bias, g.bias, bias_state, opt);
    }
    result.log.epoch_loss.push_back(loss_sum / static_cast<double>(samples.size()));
    result.log.epoch_accuracy.push_back(static_cast<double>(correct) /
                                        static_cast<double>(samples.size()));
    if (on_epoch) on_epoch(epoch, result.log);
  }
  result.backbone_checksum_after = checksum(params);
  return result;
}

template <typename T>
Tensor<T> predict(const Tensor<T>& images, const Parameters<T>& params,
                  const ModelSpec& spec, const TapSet& taps, const HeadWeights<T>& head) {
  if (head.weight.rank() != 2 || head.weight.dim(0) != taps.total_channels()) {
    throw InvalidInput("predict: head weights do not match tap channels");
  }
  const Tensor<T> features = head_inputs(params, spec, images);
  return ops::softmax(ops::dense_forward(features, head.weight, head.bias));
}

template <typename T>
Tensor<T> predict_backbone(const Tensor<T>& images, const Parameters<T>& params,
                           const ModelSpec& spec) {
  return ops::softmax(forward(params, spec, images).logits);
}

template Tensor<float> concat_features(const std::vector<Tensor<float>>&, std::size_t,
                                       std::size_t);
template Tensor<double> concat_features(const std::vector<Tensor<double>>&, std::size_t,
                                        std::size_t);
template Tensor<float> head_inputs(const Parameters<float>&, const ModelSpec&,
                                   const Tensor<float>&, bool);
template Tensor<double> head_inputs(const Parameters<double>&, const ModelSpec&,
                                    const Tensor<double>&, bool);
template Tensor<float> predict(const Tensor<float>&, const Parameters<float>&,
                               const ModelSpec&, const TapSet&, const HeadWeights<float>&);
template Tensor<double> predict(const Tensor<double>&, const Parameters<double>&,
                                const ModelSpec&, const TapSet&, const HeadWeights<double>&);
template Tensor<float> predict_backbone(const Tensor<float>&, const Parameters<float>&,
                                        const ModelSpec&);
template Tensor<double> predict_backbone(const Tensor<double>&, const Parameters<double>&,
                                         const ModelSpec&);

}  // namespace hrcam
