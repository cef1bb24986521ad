// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "ran/decoder.hpp"

namespace ran {

/// The full recurrent attention network: CNN encoder, additive attention,
/// LSTM decoder with a deep output layer.
struct RanModel {
  LabelVocabulary vocab;
  EncoderConfig encoder_config;
  int modalities = 3;
  int hidden_size = 128;
  int attention_width = 128;
  int embedding_size = 32;
  int max_steps = 10;

  EncoderParams encoder;
  AttentionParams attention;
  DecoderParams decoder;

  static RanModel init(const LabelVocabulary& vocab, int modalities, const EncoderConfig& cfg,
                       int hidden, int attention_width, int embedding, int max_steps,
                       uint64_t seed);
};

struct ParamRef {
  std::string name;
  Tensor* tensor;
};

/// Stable, named enumeration of every learned tensor; the order defines the
/// gradient layout used by the optimizer and the checkpoint contents.
std::vector<ParamRef> list_parameters(RanModel& m);
std::vector<ParamRef> list_parameters(BaselineCnnParams& p);

struct BoundModel {
  std::vector<Var> flat;  // aligned with list_parameters order
  EncoderVars encoder;
  AttentionVars attention;
  DecoderVars decoder;
};

/// Registers every parameter as a gradient-requiring leaf on the tape.
BoundModel bind_model(GradTape& t, RanModel& m);

/// Encoder + decoder unrolled under teacher forcing with the training loss:
/// nll = -sum_t log p(y_t) over scored steps, and the attention penalty
/// sum_i (tau - sum_t alpha_ti)^2 over the same steps.
struct UnrolledLoss {
  Var total, nll, penalty;
  std::vector<Var> step_weights;           // alpha_t vars, scored steps
  std::vector<Tensor> step_probabilities;  // softmax rows (reporting only)
  std::vector<int> step_argmax;
  int scored_steps = 0;
};
UnrolledLoss teacher_forced_loss_t(GradTape& t, Var window, const BoundModel& b, RanModel& m,
                                   const std::vector<int>& target, double tau, double lambda);

/// Greedy decode of a raw window (encode + decode).
DecodeResult decode_window(const RanModel& m, const Tensor& window);

}  // namespace ran
