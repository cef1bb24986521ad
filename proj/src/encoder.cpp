// SPDX-License-Identifier: Apache-2.0
#include "ran/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace ran {

void EncoderConfig::validate() const {
  if (channels_per_stage.empty()) throw std::invalid_argument("encoder: no stages");
  for (int c : channels_per_stage)
    if (c < 1) throw std::invalid_argument("encoder: channel count must be positive");
  if (kernel_size < 1 || kernel_size % 2 == 0)
    throw std::invalid_argument("encoder: kernel_size must be odd");
  if (pool_size < 2) throw std::invalid_argument("encoder: pool_size must be >= 2");
  if (pool_count != static_cast<int>(channels_per_stage.size()) - 1)
    throw std::invalid_argument("encoder: pool_count must equal stages - 1");
}

int64_t EncoderConfig::feature_stride() const {
  int64_t s = 1;
  for (int i = 0; i < pool_count; ++i) s *= pool_size;
  return s;
}

int64_t EncoderConfig::feature_length(int64_t time) const {
  // floor(floor(t/p)/p)... == floor(t/p^s)
  return time / feature_stride();
}

Tensor glorot_uniform(std::vector<int64_t> shape, int64_t fan_in, int64_t fan_out, Rng& rng,
                      double gain) {
  const double bound = gain * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return rng.uniform_tensor(std::move(shape), -bound, bound);
}

EncoderParams EncoderParams::init(const EncoderConfig& cfg, int modalities, Rng& rng) {
  cfg.validate();
  EncoderParams p;
  int64_t cin = modalities;
  for (int c : cfg.channels_per_stage) {
    ConvStage s;
    const int64_t k = cfg.kernel_size;
    s.kernels = glorot_uniform({k, cin, c}, k * cin, k * c, rng);
    s.bias = Tensor({c});
    p.stages.push_back(std::move(s));
    cin = c;
  }
  return p;
}

EncoderVars bind_encoder(GradTape& t, const EncoderParams& p) {
  EncoderVars v;
  for (const ConvStage& s : p.stages)
    v.stages.push_back({t.leaf_ref(&s.kernels), t.leaf_ref(&s.bias)});
  return v;
}

Var encode_t(GradTape& t, Var window, const EncoderVars& vars, const EncoderConfig& cfg) {
  const Tensor& w = t.value(window);
  if (w.rank() != 2 || w.dim(1) < 1)
    throw std::invalid_argument("encode: window must be [time, modalities]");
  if (w.dim(0) < cfg.feature_stride())
    throw std::invalid_argument("encode: window shorter than the pooling stride");
  Var x = window;
  const int stages = static_cast<int>(vars.stages.size());
  for (int i = 0; i < stages; ++i) {
    x = ops::tanh(t, ops::conv1d(t, x, vars.stages[i].kernels, vars.stages[i].bias));
    if (i < cfg.pool_count) x = ops::maxpool1d(t, x, cfg.pool_size);
  }
  return x;
}

FeatureMap encode(const Tensor& window, const EncoderParams& p, const EncoderConfig& cfg) {
  GradTape t;
  Var w = t.leaf_ref(&window, false);
  EncoderVars vars;
  for (const ConvStage& s : p.stages)
    vars.stages.push_back({t.leaf_ref(&s.kernels, false), t.leaf_ref(&s.bias, false)});
  Var out = encode_t(t, w, vars, cfg);
  return FeatureMap{t.value(out)};
}

BaselineCnnParams BaselineCnnParams::init(const BaselineCnnConfig& cfg, int modalities,
                                          int64_t window_length, Rng& rng) {
  BaselineCnnParams p;
  int64_t cin = modalities;
  int64_t time = window_length;
  const int stages = static_cast<int>(cfg.channels_per_stage.size());
  for (int i = 0; i < stages; ++i) {
    const int64_t c = cfg.channels_per_stage[static_cast<size_t>(i)];
    const int64_t k = cfg.kernel_size;
    p.stages.push_back({glorot_uniform({k, cin, c}, k * cin, k * c, rng), Tensor({c})});
    cin = c;
    if (i < stages - 1) time /= cfg.pool_size;
  }
  const int64_t flat = time * cin;
  p.dense_weight = glorot_uniform({flat, cfg.dense_units}, flat, cfg.dense_units, rng);
  p.dense_bias = Tensor({cfg.dense_units});
  // Classifier head starts near zero so an untrained model emits a
  // near-uniform distribution.
  p.out_weight = glorot_uniform({cfg.dense_units, cfg.num_classes}, cfg.dense_units,
                                cfg.num_classes, rng, 0.1);
  p.out_bias = Tensor({cfg.num_classes});
  return p;
}

BaselineCnnVars bind_baseline(GradTape& t, const BaselineCnnParams& p) {
  BaselineCnnVars v;
  for (const ConvStage& s : p.stages)
    v.stages.push_back({t.leaf_ref(&s.kernels), t.leaf_ref(&s.bias)});
  v.dense_weight = t.leaf_ref(&p.dense_weight);
  v.dense_bias = t.leaf_ref(&p.dense_bias);
  v.out_weight = t.leaf_ref(&p.out_weight);
  v.out_bias = t.leaf_ref(&p.out_bias);
  return v;
}

Var baseline_logits_t(GradTape& t, Var window, const BaselineCnnVars& vars,
                      const BaselineCnnConfig& cfg) {
  Var x = window;
  const int stages = static_cast<int>(vars.stages.size());
  for (int i = 0; i < stages; ++i) {
    x = ops::tanh(t, ops::conv1d(t, x, vars.stages[i].kernels, vars.stages[i].bias));
    if (i < stages - 1) x = ops::maxpool1d(t, x, cfg.pool_size);
  }
  Var hidden = ops::tanh(t, ops::dense(t, ops::flatten(t, x), vars.dense_weight, vars.dense_bias));
  return ops::dense(t, hidden, vars.out_weight, vars.out_bias);
}

Tensor baseline_cnn_forward(const Tensor& window, const BaselineCnnParams& p,
                            const BaselineCnnConfig& cfg) {
  GradTape t;
  Var w = t.leaf_ref(&window, false);
  BaselineCnnVars vars;
  for (const ConvStage& s : p.stages)
    vars.stages.push_back({t.leaf_ref(&s.kernels, false), t.leaf_ref(&s.bias, false)});
  vars.dense_weight = t.leaf_ref(&p.dense_weight, false);
  vars.dense_bias = t.leaf_ref(&p.dense_bias, false);
  vars.out_weight = t.leaf_ref(&p.out_weight, false);
  vars.out_bias = t.leaf_ref(&p.out_bias, false);
  Var probs = ops::softmax(t, baseline_logits_t(t, w, vars, cfg));
  return t.value(probs);
}

}  // namespace ran
