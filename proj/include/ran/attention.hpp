// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "ran/encoder.hpp"

namespace ran {

/// Additive attention parameters. Scores are
///   e_i = score_vector . tanh(feature_projection^T a_i
///                             + hidden_projection^T h_prev + hidden_bias)
/// normalized by softmax, and the context is the weighted feature average.
struct AttentionParams {
  Tensor feature_projection;  // [D, A]
  Tensor hidden_projection;   // [H, A]
  Tensor hidden_bias;         // [A]
  Tensor score_vector;        // [A]
  static AttentionParams init(int depth, int hidden, int width, Rng& rng);
};

struct AttentionVars {
  Var feature_projection, hidden_projection, hidden_bias, score_vector;
};

AttentionVars bind_attention(GradTape& t, const AttentionParams& p);

/// Per-step weights and raw scores over the temporal positions.
struct AttentionMap {
  std::vector<Tensor> weights;  // alpha_t, each [L], rows sum to 1
  std::vector<Tensor> scores;   // e_t, each [L]
  int steps() const { return static_cast<int>(weights.size()); }
};

struct AttendNodes {
  Var scores;   // e_t [L]
  Var weights;  // alpha_t [L]
  Var context;  // z_t [D]
};

/// The feature-side projection features * feature_projection is step
/// independent; compute it once per sample and reuse it across steps.
Var project_features(GradTape& t, Var features, const AttentionVars& v);

/// One attention step given the precomputed feature projection.
AttendNodes attend_step(GradTape& t, Var projected, Var features, Var h_prev,
                        const AttentionVars& v);

/// Plain single-step convenience: scores, weights and context for one
/// hidden state. Throws on an empty feature map.
struct AttentionStep {
  Tensor scores, weights, context;
};
AttentionStep attend(const FeatureMap& features, const Tensor& h_prev, const AttentionParams& p);

/// JSON export consumed by the inspect-attention command:
/// {sample_id, steps:[{step, predicted_label, alpha:[...]}]}.
std::string attention_map_json(const std::string& sample_id,
                               const std::vector<std::string>& predicted_labels,
                               const AttentionMap& map);

}  // namespace ran
