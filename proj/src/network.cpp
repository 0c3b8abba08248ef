#include "hrcam/network.hpp"

namespace hrcam {
namespace {

template <typename T>
const Tensor<T>& param(const Parameters<T>& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw InvalidInput("missing parameter " + name);
  return it->second;
}

template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

template <typename T>
ForwardOutput<T> forward(const Parameters<T>& params, const ModelSpec& spec,
                         const Tensor<T>& images, ForwardTrace<T>* trace) {
  const Shape& s = images.shape();
  if (s.size() != 4 || s[1] != spec.input_shape[0] || s[2] != spec.input_shape[1] ||
      s[3] != spec.input_shape[2]) {
    throw InvalidInput("forward: images " + shape_string(s) +
                       " do not match model input [B," +
                       std::to_string(spec.input_shape[0]) + "," +
                       std::to_string(spec.input_shape[1]) + "," +
                       std::to_string(spec.input_shape[2]) + "]");
  }
  if (trace) {
    trace->blocks.assign(spec.blocks.size(), {});
    trace->valid = false;
  }

  ForwardOutput<T> out;
  Tensor<T> x = images;
  if (spec.input_mean != 0.0) {
    const T shift = static_cast<T>(spec.input_mean);
    for (auto& v : x.data()) v -= shift;
  }
  for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
    const BlockSpec& blk = spec.blocks[b];
    const std::size_t n = blk.conv_channels.size();
    const ops::Conv2dParams cp{1, blk.kernel_size / 2};
    BlockTrace<T>* bt = trace ? &trace->blocks[b] : nullptr;
    if (bt) {
      bt->convs.resize(n);
      bt->pre_activations.resize(n);
    }
    Tensor<T> first;
    for (std::size_t i = 0; i < n; ++i) {
      Tensor<T> z = ops::conv2d_forward(x, param(params, conv_weight_name(b, i)),
                                        param(params, conv_bias_name(b, i)), cp,
                                        bt ? &bt->convs[i] : nullptr);
      if (blk.residual && i + 1 == n && i > 0) add_into(z, first);
      x = ops::relu_forward(z);
      if (bt) bt->pre_activations[i] = std::move(z);
      if (i == 0 && blk.residual) first = x;
    }
    if (bt) bt->output = x;
    if (blk.maxpool) {
      out.taps.push_back(x);
      if (b + 1 < spec.blocks.size()) {
        ops::MaxPoolResult<T> pooled = ops::maxpool_forward(x, 2, 2);
        x = pooled.output;
        if (bt) bt->pool = std::move(pooled);
      }
    }
  }

  out.features = x;
  Tensor<T> pooled = ops::gap_forward(out.features);
  out.logits = ops::dense_forward(pooled, param(params, kClassifierWeight),
                                  param(params, kClassifierBias));
  if (trace) {
    trace->pooled_features = std::move(pooled);
    trace->valid = true;
  }
  return out;
}

template <typename T>
BackwardOutput<T> backward(const Parameters<T>& params, const ModelSpec& spec,
                           const ForwardTrace<T>& trace,
                           const Tensor<T>& grad_logits,
                           const BackwardOptions& options) {
  if (!trace.valid) throw UsageError("backward: no forward pass recorded");
  BackwardOutput<T> out;
  const TapSet taps = derive_taps(spec);
  out.tap_grads.resize(taps.size());

  const ops::DenseGrads<T> fc = ops::dense_backward(
      trace.pooled_features, param(params, kClassifierWeight), grad_logits);
  if (options.param_grads) {
    out.grads[kClassifierWeight] = fc.weights;
    out.grads[kClassifierBias] = fc.bias;
  }
  Tensor<T> g = ops::gap_backward(trace.blocks.back().output.shape(), fc.input);
  out.feature_grad = g;

  std::size_t tap = taps.size();
  for (std::size_t b = spec.blocks.size(); b-- > 0;) {
    const BlockSpec& blk = spec.blocks[b];
    const BlockTrace<T>& bt = trace.blocks[b];
    if (bt.pool) g = ops::maxpool_backward(*bt.pool, g);
    if (blk.maxpool) {
      --tap;
      out.tap_grads[tap] = g;
      if (options.stop_at_tap && *options.stop_at_tap == tap) return out;
    }
    const std::size_t n = blk.conv_channels.size();
    Tensor<T> residual_grad;
    for (std::size_t i = n; i-- > 0;) {
      Tensor<T> gz = ops::relu_backward(bt.pre_activations[i], g);
      if (blk.residual && i + 1 == n && i > 0) residual_grad = gz;
      ops::Conv2dGrads<T> cg = ops::conv2d_backward(bt.convs[i], gz);
      if (options.param_grads) {
        out.grads[conv_weight_name(b, i)] = std::move(cg.kernel);
        out.grads[conv_bias_name(b, i)] = std::move(cg.bias);
      }
      g = std::move(cg.input);
      if (blk.residual && i == 1) add_into(g, residual_grad);
    }
  }
  return out;
}

template ForwardOutput<float> forward(const Parameters<float>&, const ModelSpec&,
                                      const Tensor<float>&, ForwardTrace<float>*);
template ForwardOutput<double> forward(const Parameters<double>&, const ModelSpec&,
                                       const Tensor<double>&, ForwardTrace<double>*);
template BackwardOutput<float> backward(const Parameters<float>&, const ModelSpec&,
                                        const ForwardTrace<float>&,
                                        const Tensor<float>&, const BackwardOptions&);
template BackwardOutput<double> backward(const Parameters<double>&, const ModelSpec&,
                                         const ForwardTrace<double>&,
                                         const Tensor<double>&, const BackwardOptions&);

}  // namespace hrcam
