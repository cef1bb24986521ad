// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <iosfwd>
#include <map>

#include "ran/datasets.hpp"
#include "ran/model.hpp"

namespace ran {

struct TrainConfig {
  double learning_rate = 0.00025;
  int batch_size = 50;
  int epochs = 100;
  double tau = 1.0;        // doubly stochastic target mass per position
  double reg_weight = 1.0; // lambda in front of the attention penalty
  uint64_t seed = 1;
  int max_steps = 10;      // T
  double clip_norm = 5.0;  // global gradient-norm clip
  void validate() const;
};

struct LossOutput {
  double total = 0.0;
  double nll = 0.0;
  double attention_penalty = 0.0;
  int clamped_probabilities = 0;  // zero-probability targets clamped before log
};

/// Loss of one teacher-forced transcript from plain values:
/// nll = -sum_t log p(y_t) over the scored steps (probabilities clamped at
/// 1e-12), penalty = sum_i (tau - sum_t alpha_ti)^2. Attention rows must sum
/// to 1 within 1e-6.
LossOutput sequence_loss(const std::vector<Tensor>& step_probabilities,
                         const std::vector<int>& target,
                         const std::vector<Tensor>& attention_rows, const TrainConfig& cfg);

struct AdamState {
  std::vector<Tensor> m, v;
  int64_t t = 0;
};

/// Standard Adam (beta1=0.9, beta2=0.999, eps=1e-8) with bias correction.
/// Throws, naming the parameter, when a gradient is not finite.
void adam_step(const std::vector<ParamRef>& params, const std::vector<Tensor>& gradients,
               AdamState& state, const TrainConfig& cfg);

struct Dataset {
  std::vector<WeakSample> train, test;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;  // teacher-forced exact-match over the epoch
  double test_acc = 0.0;   // greedy sequence accuracy on the test split
};

struct TrainResult {
  std::vector<EpochRecord> log;
};

/// Full training loop: per-epoch shuffling from the run seed, batch-mean
/// gradients (samples evaluated in parallel, accumulated in index order, so
/// runs are bit-reproducible), norm clipping, Adam updates. Writes one JSON
/// line per epoch to log_stream when given.
TrainResult train(RanModel& model, const Dataset& data, const TrainConfig& cfg,
                  std::ostream* log_stream = nullptr,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

struct EvalMetrics {
  double sequence_accuracy = 0.0;
  double token_accuracy = 0.0;
  std::map<std::pair<int, int>, int64_t> confusion;  // (target, predicted) class pairs
  int64_t samples = 0;
};

/// Greedy-decode evaluation; sequence accuracy is the exact match of activity
/// token lists with specials stripped.
EvalMetrics evaluate(const RanModel& model, const std::vector<WeakSample>& data);

/// Gradients of the batch-mean loss for one sample (order matches
/// list_parameters).
struct SamplePass {
  std::vector<Tensor> gradients;
  LossOutput loss;
  bool teacher_forced_exact = false;
};
SamplePass run_sample(RanModel& model, const WeakSample& sample, const TrainConfig& cfg);

// Baseline CNN training/eval on atomically labeled windows, for the
// comparison experiments.
struct BaselineModel {
  std::vector<std::string> class_names;
  BaselineCnnConfig config;
  BaselineCnnParams params;
  int modalities = 3;
};
struct BaselineDataset {
  std::vector<WeakSample> train, test;  // weak_label holds one atomic class
};
std::vector<EpochRecord> train_baseline(BaselineModel& model, const BaselineDataset& data,
                                        const TrainConfig& cfg);
double evaluate_baseline(const BaselineModel& model, const std::vector<WeakSample>& data);

}  // namespace ran
