// SPDX-License-Identifier: Apache-2.0
#include "ran/decoder.hpp"

#include <algorithm>
#include <stdexcept>

namespace ran {

LabelVocabulary LabelVocabulary::for_classes(const std::vector<std::string>& classes) {
  LabelVocabulary v;
  v.tokens = {"START", "END", "PAD"};
  for (const std::string& c : classes) {
    if (c == "START" || c == "END" || c == "PAD")
      throw std::invalid_argument("vocabulary: class name collides with a special token");
    v.tokens.push_back(c);
  }
  return v;
}

int LabelVocabulary::index_of(const std::string& name) const {
  for (size_t i = 0; i < tokens.size(); ++i)
    if (tokens[i] == name) return static_cast<int>(i);
  throw std::invalid_argument("vocabulary: unknown token '" + name + "'");
}

DecoderParams DecoderParams::init(int depth, int hidden, int embedding_width, int vocab,
                                  Rng& rng) {
  DecoderParams p;
  for (auto& g : p.gates) {
    g.label_weight = glorot_uniform({embedding_width, hidden}, embedding_width, hidden, rng);
    g.hidden_weight = glorot_uniform({hidden, hidden}, hidden, hidden, rng);
    g.context_weight = glorot_uniform({depth, hidden}, depth, hidden, rng);
    g.bias = Tensor({hidden});
  }
  p.embedding = glorot_uniform({vocab, embedding_width}, vocab, embedding_width, rng);
  p.init_c_weight = glorot_uniform({depth, hidden}, depth, hidden, rng);
  p.init_c_bias = Tensor({hidden});
  p.init_h_weight = glorot_uniform({depth, hidden}, depth, hidden, rng);
  p.init_h_bias = Tensor({hidden});
  // Output projections start small so the untrained distribution is near
  // uniform.
  p.out_hidden_weight = glorot_uniform({hidden, vocab}, hidden, vocab, rng, 0.1);
  p.out_context_weight = glorot_uniform({depth, vocab}, depth, vocab, rng, 0.1);
  p.out_bias = Tensor({vocab});
  return p;
}

DecoderVars bind_decoder(GradTape& t, const DecoderParams& p) {
  DecoderVars v;
  for (int g = 0; g < 4; ++g)
    v.gates[g] = GateVars{t.leaf_ref(&p.gates[g].label_weight),
                          t.leaf_ref(&p.gates[g].hidden_weight),
                          t.leaf_ref(&p.gates[g].context_weight), t.leaf_ref(&p.gates[g].bias)};
  v.embedding = t.leaf_ref(&p.embedding);
  v.init_c_weight = t.leaf_ref(&p.init_c_weight);
  v.init_c_bias = t.leaf_ref(&p.init_c_bias);
  v.init_h_weight = t.leaf_ref(&p.init_h_weight);
  v.init_h_bias = t.leaf_ref(&p.init_h_bias);
  v.out_hidden_weight = t.leaf_ref(&p.out_hidden_weight);
  v.out_context_weight = t.leaf_ref(&p.out_context_weight);
  v.out_bias = t.leaf_ref(&p.out_bias);
  return v;
}

namespace {
DecoderVars bind_decoder_frozen(GradTape& t, const DecoderParams& p) {
  DecoderVars v;
  for (int g = 0; g < 4; ++g)
    v.gates[g] =
        GateVars{t.leaf_ref(&p.gates[g].label_weight, false),
                 t.leaf_ref(&p.gates[g].hidden_weight, false),
                 t.leaf_ref(&p.gates[g].context_weight, false), t.leaf_ref(&p.gates[g].bias, false)};
  v.embedding = t.leaf_ref(&p.embedding, false);
  v.init_c_weight = t.leaf_ref(&p.init_c_weight, false);
  v.init_c_bias = t.leaf_ref(&p.init_c_bias, false);
  v.init_h_weight = t.leaf_ref(&p.init_h_weight, false);
  v.init_h_bias = t.leaf_ref(&p.init_h_bias, false);
  v.out_hidden_weight = t.leaf_ref(&p.out_hidden_weight, false);
  v.out_context_weight = t.leaf_ref(&p.out_context_weight, false);
  v.out_bias = t.leaf_ref(&p.out_bias, false);
  return v;
}

AttentionVars bind_attention_frozen(GradTape& t, const AttentionParams& p) {
  return AttentionVars{t.leaf_ref(&p.feature_projection, false),
                       t.leaf_ref(&p.hidden_projection, false), t.leaf_ref(&p.hidden_bias, false),
                       t.leaf_ref(&p.score_vector, false)};
}
}  // namespace

std::pair<Var, Var> init_state_t(GradTape& t, Var features, const DecoderVars& v) {
  const Tensor& f = t.value(features);
  if (f.rank() != 2 || f.dim(0) < 1)
    throw std::invalid_argument("init_state: feature map must be non-empty");
  Var mean = ops::mean_rows(t, features);
  Var h0 = ops::tanh(t, ops::dense(t, mean, v.init_h_weight, v.init_h_bias));
  Var c0 = ops::tanh(t, ops::dense(t, mean, v.init_c_weight, v.init_c_bias));
  return {h0, c0};
}

namespace {
Var gate_preact(GradTape& t, Var x, Var h, Var z, const GateVars& g) {
  Var a = ops::dense(t, x, g.label_weight, g.bias);
  Var b = ops::dense(t, h, g.hidden_weight);
  Var c = ops::dense(t, z, g.context_weight);
  return ops::add(t, ops::add(t, a, b), c);
}
}  // namespace

std::pair<Var, Var> lstm_step_t(GradTape& t, Var h_prev, Var c_prev, int token, Var context,
                                const DecoderVars& v) {
  Var x = ops::embed_row(t, v.embedding, token);
  Var gate_in = ops::sigmoid(t, gate_preact(t, x, h_prev, context, v.gates[0]));
  Var gate_forget = ops::sigmoid(t, gate_preact(t, x, h_prev, context, v.gates[1]));
  Var candidate = ops::tanh(t, gate_preact(t, x, h_prev, context, v.gates[2]));
  Var gate_out = ops::sigmoid(t, gate_preact(t, x, h_prev, context, v.gates[3]));
  Var memory = ops::add(t, ops::mul(t, gate_forget, c_prev), ops::mul(t, gate_in, candidate));
  Var hidden = ops::mul(t, gate_out, ops::tanh(t, memory));
  return {hidden, memory};
}

Var output_logits_t(GradTape& t, Var hidden, Var context, const DecoderVars& v) {
  Var from_h = ops::dense(t, hidden, v.out_hidden_weight, v.out_bias);
  Var from_z = ops::dense(t, context, v.out_context_weight);
  return ops::add(t, from_h, from_z);
}

LSTMState init_state(const FeatureMap& features, const DecoderParams& p) {
  GradTape t;
  Var f = t.leaf_ref(&features.vectors, false);
  DecoderVars v = bind_decoder_frozen(t, p);
  auto [h0, c0] = init_state_t(t, f, v);
  return LSTMState{t.value(h0), t.value(c0)};
}

LSTMState lstm_step(const LSTMState& prev, int token, const Tensor& context,
                    const DecoderParams& p, int vocab_size) {
  if (token < 0 || token >= vocab_size)
    throw std::invalid_argument("lstm_step: unknown token");
  GradTape t;
  DecoderVars v = bind_decoder_frozen(t, p);
  Var h = t.leaf_ref(&prev.hidden, false);
  Var c = t.leaf_ref(&prev.memory, false);
  Var z = t.leaf_ref(&context, false);
  auto [h2, c2] = lstm_step_t(t, h, c, token, z, v);
  return LSTMState{t.value(h2), t.value(c2)};
}

Tensor output_distribution(const LSTMState& state, const Tensor& context,
                           const DecoderParams& p) {
  GradTape t;
  DecoderVars v = bind_decoder_frozen(t, p);
  Var h = t.leaf_ref(&state.hidden, false);
  Var z = t.leaf_ref(&context, false);
  Var probs = ops::softmax(t, output_logits_t(t, h, z, v));
  return t.value(probs);
}

std::vector<int> DecodeResult::activity_tokens(const LabelVocabulary& vocab) const {
  std::vector<int> out;
  for (const DecodeStep& s : steps)
    if (!vocab.is_special(s.token)) out.push_back(s.token);
  return out;
}

DecodeResult decode_greedy(const FeatureMap& features, const AttentionParams& attention,
                           const DecoderParams& decoder, const LabelVocabulary& vocab,
                           int max_steps) {
  if (max_steps < 1) throw std::invalid_argument("decode_greedy: max_steps must be >= 1");
  if (decoder.embedding.dim(0) != vocab.size())
    throw std::invalid_argument("decode_greedy: vocabulary/decoder size mismatch");
  GradTape t;
  Var f = t.leaf_ref(&features.vectors, false);
  AttentionVars av = bind_attention_frozen(t, attention);
  DecoderVars dv = bind_decoder_frozen(t, decoder);

  DecodeResult result;
  Var projected = project_features(t, f, av);
  auto [h, c] = init_state_t(t, f, dv);
  int prev_token = LabelVocabulary::kStart;
  for (int step = 0; step < max_steps; ++step) {
    AttendNodes at = attend_step(t, projected, f, h, av);
    auto [h2, c2] = lstm_step_t(t, h, c, prev_token, at.context, dv);
    Var probs = ops::softmax(t, output_logits_t(t, h2, at.context, dv));
    const Tensor& pv = t.value(probs);
    int best = 0;
    for (int i = 1; i < pv.numel(); ++i)
      if (pv.at(i) > pv.at(best)) best = i;

    result.steps.push_back(DecodeStep{best, pv, t.value(at.context)});
    result.attention.weights.push_back(t.value(at.weights));
    result.attention.scores.push_back(t.value(at.scores));

    if (best == LabelVocabulary::kEnd) break;
    prev_token = best;
    h = h2;
    c = c2;
  }
  return result;
}

int scored_step_count(const std::vector<int>& target, const LabelVocabulary& vocab) {
  if (target.empty() || target[0] != LabelVocabulary::kStart)
    throw std::invalid_argument("teacher forcing: target must begin with START");
  int end_pos = -1;
  for (size_t i = 1; i < target.size(); ++i) {
    const int tok = target[i];
    if (tok < 0 || tok >= vocab.size())
      throw std::invalid_argument("teacher forcing: unknown token in target");
    if (end_pos < 0) {
      if (tok == LabelVocabulary::kStart || tok == LabelVocabulary::kPad)
        throw std::invalid_argument("teacher forcing: unexpected special before END");
      if (tok == LabelVocabulary::kEnd) end_pos = static_cast<int>(i);
    } else if (tok != LabelVocabulary::kPad) {
      throw std::invalid_argument("teacher forcing: non-PAD token after END");
    }
  }
  if (end_pos < 0) throw std::invalid_argument("teacher forcing: target missing END");
  return end_pos;
}

TeacherForcedResult decode_teacher_forced(const FeatureMap& features,
                                          const std::vector<int>& target,
                                          const AttentionParams& attention,
                                          const DecoderParams& decoder,
                                          const LabelVocabulary& vocab) {
  const int scored = scored_step_count(target, vocab);
  GradTape t;
  Var f = t.leaf_ref(&features.vectors, false);
  AttentionVars av = bind_attention_frozen(t, attention);
  DecoderVars dv = bind_decoder_frozen(t, decoder);

  TeacherForcedResult result;
  result.scored_steps = scored;
  Var projected = project_features(t, f, av);
  auto [h, c] = init_state_t(t, f, dv);
  for (int step = 1; step <= scored; ++step) {
    AttendNodes at = attend_step(t, projected, f, h, av);
    auto [h2, c2] = lstm_step_t(t, h, c, target[static_cast<size_t>(step - 1)], at.context, dv);
    Var probs = ops::softmax(t, output_logits_t(t, h2, at.context, dv));
    const Tensor& pv = t.value(probs);
    int best = 0;
    for (int i = 1; i < pv.numel(); ++i)
      if (pv.at(i) > pv.at(best)) best = i;
    result.step_probabilities.push_back(pv);
    result.step_argmax.push_back(best);
    result.attention.weights.push_back(t.value(at.weights));
    result.attention.scores.push_back(t.value(at.scores));
    h = h2;
    c = c2;
  }
  return result;
}

}  // namespace ran
