// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "ran/attention.hpp"

namespace ran {

/// Token inventory: three specials followed by the activity classes.
struct LabelVocabulary {
  static constexpr int kStart = 0;
  static constexpr int kEnd = 1;
  static constexpr int kPad = 2;

  std::vector<std::string> tokens;  // [START, END, PAD, class_1..class_K]

  static LabelVocabulary for_classes(const std::vector<std::string>& classes);

  int size() const { return static_cast<int>(tokens.size()); }
  int num_classes() const { return size() - 3; }
  bool is_special(int idx) const { return idx >= 0 && idx < 3; }
  int class_token(int class_index) const { return 3 + class_index; }
  int class_index(int token) const { return token - 3; }
  const std::string& name(int token) const { return tokens.at(static_cast<size_t>(token)); }
  int index_of(const std::string& name) const;  // throws on unknown token
};

struct LSTMState {
  Tensor hidden;  // h_t [H], entries in (-1, 1)
  Tensor memory;  // c_t [H]
};

struct GateParams {
  Tensor label_weight;    // W [Emb, H]
  Tensor hidden_weight;   // U [H, H]
  Tensor context_weight;  // Z [D, H]
  Tensor bias;            // b [H]
};

struct DecoderParams {
  GateParams gates[4];  // input, forget, candidate, output
  Tensor embedding;     // [vocab, Emb]
  Tensor init_c_weight, init_c_bias;  // mean feature [D] -> [H]
  Tensor init_h_weight, init_h_bias;
  Tensor out_hidden_weight;   // [H, vocab]
  Tensor out_context_weight;  // [D, vocab]
  Tensor out_bias;            // [vocab]

  static DecoderParams init(int depth, int hidden, int embedding_width, int vocab, Rng& rng);
};

struct GateVars {
  Var label_weight, hidden_weight, context_weight, bias;
};

struct DecoderVars {
  GateVars gates[4];
  Var embedding;
  Var init_c_weight, init_c_bias, init_h_weight, init_h_bias;
  Var out_hidden_weight, out_context_weight, out_bias;
};

DecoderVars bind_decoder(GradTape& t, const DecoderParams& p);

/// c_0 and h_0 from the feature mean through one tanh perceptron each.
std::pair<Var, Var> init_state_t(GradTape& t, Var features, const DecoderVars& v);  // (h0, c0)

/// One LSTM cell update conditioned on the previous label token and the
/// attention context. Returns (h_t, c_t).
std::pair<Var, Var> lstm_step_t(GradTape& t, Var h_prev, Var c_prev, int token, Var context,
                                const DecoderVars& v);

/// Deep output layer logits from hidden state and context.
Var output_logits_t(GradTape& t, Var hidden, Var context, const DecoderVars& v);

// Plain wrappers around the tape builders.
LSTMState init_state(const FeatureMap& features, const DecoderParams& p);
LSTMState lstm_step(const LSTMState& prev, int token, const Tensor& context,
                    const DecoderParams& p, int vocab_size);
Tensor output_distribution(const LSTMState& state, const Tensor& context, const DecoderParams& p);

struct DecodeStep {
  int token = 0;
  Tensor probabilities;  // [vocab]
  Tensor context;        // z_t [D]
};

/// Greedy decode transcript. steps includes the terminating END step when
/// one was produced; activity_tokens() strips the specials.
struct DecodeResult {
  std::vector<DecodeStep> steps;
  AttentionMap attention;
  std::vector<int> activity_tokens(const LabelVocabulary& vocab) const;
};

/// Argmax decoding from START; stops at the first END or after max_steps.
DecodeResult decode_greedy(const FeatureMap& features, const AttentionParams& attention,
                           const DecoderParams& decoder, const LabelVocabulary& vocab,
                           int max_steps);

/// Teacher forcing: target must be [START, classes.., END, PAD..]; step t
/// feeds target[t-1] and scores target[t]; PAD steps are not scored.
struct TeacherForcedResult {
  std::vector<Tensor> step_probabilities;  // one [vocab] row per scored step
  std::vector<int> step_argmax;
  AttentionMap attention;  // steps up to and including END
  int scored_steps = 0;
};
TeacherForcedResult decode_teacher_forced(const FeatureMap& features,
                                          const std::vector<int>& target,
                                          const AttentionParams& attention,
                                          const DecoderParams& decoder,
                                          const LabelVocabulary& vocab);

/// Number of scored steps (position of END) for a well-formed target;
/// throws if the target is malformed.
int scored_step_count(const std::vector<int>& target, const LabelVocabulary& vocab);

}  // namespace ran
