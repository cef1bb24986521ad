// SPDX-License-Identifier: Apache-2.0
#include "ran/attention.hpp"

#include <nlohmann/json.hpp>

namespace ran {

AttentionParams AttentionParams::init(int depth, int hidden, int width, Rng& rng) {
  AttentionParams p;
  p.feature_projection = glorot_uniform({depth, width}, depth, width, rng);
  p.hidden_projection = glorot_uniform({hidden, width}, hidden, width, rng);
  p.hidden_bias = Tensor({width});
  p.score_vector = glorot_uniform({width}, width, 1, rng);
  return p;
}

AttentionVars bind_attention(GradTape& t, const AttentionParams& p) {
  return AttentionVars{t.leaf_ref(&p.feature_projection), t.leaf_ref(&p.hidden_projection),
                       t.leaf_ref(&p.hidden_bias), t.leaf_ref(&p.score_vector)};
}

Var project_features(GradTape& t, Var features, const AttentionVars& v) {
  const Tensor& f = t.value(features);
  if (f.rank() != 2 || f.dim(0) < 1)
    throw std::invalid_argument("attend: feature map must be non-empty [L, D]");
  return ops::matmul(t, features, v.feature_projection);
}

AttendNodes attend_step(GradTape& t, Var projected, Var features, Var h_prev,
                        const AttentionVars& v) {
  Var hidden_term = ops::add(t, ops::dense(t, h_prev, v.hidden_projection), v.hidden_bias);
  Var pre = ops::tanh(t, ops::add_rowvec(t, projected, hidden_term));
  Var scores = ops::matvec(t, pre, v.score_vector);
  Var weights = ops::softmax(t, scores);
  Var context = ops::dense(t, weights, features);  // z = sum_i alpha_i a_i
  return AttendNodes{scores, weights, context};
}

AttentionStep attend(const FeatureMap& features, const Tensor& h_prev, const AttentionParams& p) {
  GradTape t;
  Var f = t.leaf_ref(&features.vectors, false);
  Var h = t.leaf_ref(&h_prev, false);
  AttentionVars v{t.leaf_ref(&p.feature_projection, false),
                  t.leaf_ref(&p.hidden_projection, false), t.leaf_ref(&p.hidden_bias, false),
                  t.leaf_ref(&p.score_vector, false)};
  AttendNodes n = attend_step(t, project_features(t, f, v), f, h, v);
  return AttentionStep{t.value(n.scores), t.value(n.weights), t.value(n.context)};
}

std::string attention_map_json(const std::string& sample_id,
                               const std::vector<std::string>& predicted_labels,
                               const AttentionMap& map) {
  nlohmann::json steps = nlohmann::json::array();
  for (int s = 0; s < map.steps(); ++s) {
    nlohmann::json step;
    step["step"] = s + 1;
    step["predicted_label"] =
        s < static_cast<int>(predicted_labels.size()) ? predicted_labels[static_cast<size_t>(s)]
                                                      : "";
    step["alpha"] = map.weights[static_cast<size_t>(s)].data;
    steps.push_back(std::move(step));
  }
  nlohmann::json out;
  out["sample_id"] = sample_id;
  out["steps"] = std::move(steps);
  return out.dump();
}

}  // namespace ran
