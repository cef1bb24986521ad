// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "ran/ops.hpp"
#include "ran/rng.hpp"

namespace ran {

/// Convolutional feature-extractor layout: one conv stage per entry of
/// channels_per_stage, with a max-pool between consecutive stages (so
/// pool_count = stages - 1).
struct EncoderConfig {
  std::vector<int> channels_per_stage{16, 32, 64, 128};
  int kernel_size = 5;
  int pool_size = 2;
  int pool_count = 3;

  void validate() const;
  /// Raw samples covered by one feature position: pool_size^pool_count.
  int64_t feature_stride() const;
  /// L = floor(time / pool^count) for any time >= pool^count.
  int64_t feature_length(int64_t time) const;
  int feature_depth() const { return channels_per_stage.back(); }
};

/// Encoder output a = {a_1..a_L}, one depth-D feature vector per retained
/// temporal position.
struct FeatureMap {
  Tensor vectors;  // [L, D]
  int64_t length() const { return vectors.dim(0); }
  int64_t depth() const { return vectors.dim(1); }
};

struct ConvStage {
  Tensor kernels;  // [k, cin, cout]
  Tensor bias;     // [cout]
};

struct EncoderParams {
  std::vector<ConvStage> stages;
  static EncoderParams init(const EncoderConfig& cfg, int modalities, Rng& rng);
};

struct ConvStageVars {
  Var kernels, bias;
};

struct EncoderVars {
  std::vector<ConvStageVars> stages;
};

EncoderVars bind_encoder(GradTape& t, const EncoderParams& p);

/// Tape-level forward: conv (tanh) stages with pooling between them.
Var encode_t(GradTape& t, Var window, const EncoderVars& vars, const EncoderConfig& cfg);

/// Plain forward for inference paths.
FeatureMap encode(const Tensor& window, const EncoderParams& p, const EncoderConfig& cfg);

/// Standalone baseline classifier: conv stages with pooling between them,
/// one hidden dense layer, softmax output. Used only for the side-by-side
/// comparison experiments.
struct BaselineCnnConfig {
  std::vector<int> channels_per_stage{32, 64, 128};
  int kernel_size = 5;
  int pool_size = 2;
  int dense_units = 100;
  int num_classes = 3;
};

struct BaselineCnnParams {
  std::vector<ConvStage> stages;
  Tensor dense_weight, dense_bias;  // flattened features -> dense_units
  Tensor out_weight, out_bias;      // dense_units -> num_classes
  static BaselineCnnParams init(const BaselineCnnConfig& cfg, int modalities, int64_t window_length,
                                Rng& rng);
};

struct BaselineCnnVars {
  std::vector<ConvStageVars> stages;
  Var dense_weight, dense_bias, out_weight, out_bias;
};

BaselineCnnVars bind_baseline(GradTape& t, const BaselineCnnParams& p);
Var baseline_logits_t(GradTape& t, Var window, const BaselineCnnVars& vars,
                      const BaselineCnnConfig& cfg);

/// Class probabilities for one window; sums to 1.
Tensor baseline_cnn_forward(const Tensor& window, const BaselineCnnParams& p,
                            const BaselineCnnConfig& cfg);

/// Scaled uniform init, +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(std::vector<int64_t> shape, int64_t fan_in, int64_t fan_out, Rng& rng,
                      double gain = 1.0);

}  // namespace ran
