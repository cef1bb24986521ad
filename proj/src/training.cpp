// SPDX-License-Identifier: Apache-2.0
#include "ran/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "ran/kernels.hpp"

namespace ran {

void TrainConfig::validate() const {
  if (learning_rate <= 0) throw std::invalid_argument("train: learning_rate must be positive");
  if (tau <= 0) throw std::invalid_argument("train: tau must be positive");
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (max_steps < 2) throw std::invalid_argument("train: max_steps must be >= 2");
}

LossOutput sequence_loss(const std::vector<Tensor>& step_probabilities,
                         const std::vector<int>& target,
                         const std::vector<Tensor>& attention_rows, const TrainConfig& cfg) {
  cfg.validate();
  if (step_probabilities.size() != attention_rows.size())
    throw std::invalid_argument("sequence_loss: steps/attention size mismatch");
  const int scored = static_cast<int>(step_probabilities.size());
  if (static_cast<int>(target.size()) < scored + 1)
    throw std::invalid_argument("sequence_loss: target shorter than scored steps");

  LossOutput out;
  for (int t = 0; t < scored; ++t) {
    const Tensor& row = attention_rows[static_cast<size_t>(t)];
    const double mass = kernels::sum(row.data.data(), row.numel());
    if (std::fabs(mass - 1.0) > 1e-6)
      throw std::invalid_argument("sequence_loss: attention row does not sum to 1");
    double p = step_probabilities[static_cast<size_t>(t)].at(target[static_cast<size_t>(t + 1)]);
    if (p < 1e-12) {
      p = 1e-12;
      ++out.clamped_probabilities;
    }
    out.nll -= std::log(p);
  }
  const int64_t length = attention_rows.empty() ? 0 : attention_rows[0].numel();
  for (int64_t i = 0; i < length; ++i) {
    double mass = 0.0;
    for (const Tensor& row : attention_rows) mass += row.at(i);
    const double dev = cfg.tau - mass;
    out.attention_penalty += dev * dev;
  }
  out.total = out.nll + cfg.reg_weight * out.attention_penalty;
  return out;
}

void adam_step(const std::vector<ParamRef>& params, const std::vector<Tensor>& gradients,
               AdamState& state, const TrainConfig& cfg) {
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  if (params.size() != gradients.size())
    throw std::invalid_argument("adam_step: params/gradients size mismatch");
  if (state.m.empty()) {
    for (const ParamRef& p : params) {
      state.m.emplace_back(p.tensor->shape);
      state.v.emplace_back(p.tensor->shape);
    }
  }
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam_step: optimizer state size mismatch");

  state.t += 1;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.t));
  for (size_t p = 0; p < params.size(); ++p) {
    Tensor& w = *params[p].tensor;
    const Tensor& g = gradients[p];
    if (!w.same_shape(g))
      throw std::invalid_argument("adam_step: gradient shape mismatch for " + params[p].name);
    Tensor& m = state.m[p];
    Tensor& v = state.v[p];
    for (int64_t i = 0; i < w.numel(); ++i) {
      const double gi = g.at(i);
      if (!std::isfinite(gi))
        throw std::runtime_error("adam_step: non-finite gradient for parameter " +
                                 params[p].name);
      m.at(i) = kBeta1 * m.at(i) + (1.0 - kBeta1) * gi;
      v.at(i) = kBeta2 * v.at(i) + (1.0 - kBeta2) * gi * gi;
      const double mhat = m.at(i) / bc1;
      const double vhat = v.at(i) / bc2;
      w.at(i) -= cfg.learning_rate * mhat / (std::sqrt(vhat) + kEps);
    }
  }
}

SamplePass run_sample(RanModel& model, const WeakSample& sample, const TrainConfig& cfg) {
  const std::vector<int> target = encode_label_sequence(sample.weak_label, model.vocab,
                                                        cfg.max_steps);
  GradTape tape;
  BoundModel bound = bind_model(tape, model);
  Var window = tape.leaf_ref(&sample.window, false);
  UnrolledLoss loss =
      teacher_forced_loss_t(tape, window, bound, model, target, cfg.tau, cfg.reg_weight);
  tape.backward(loss.total);

  SamplePass out;
  out.gradients.reserve(bound.flat.size());
  for (Var v : bound.flat) out.gradients.push_back(tape.grad(v));
  out.loss.total = tape.value(loss.total).at(0);
  out.loss.nll = tape.value(loss.nll).at(0);
  out.loss.attention_penalty = tape.value(loss.penalty).at(0);
  out.teacher_forced_exact = true;
  for (int t = 0; t < loss.scored_steps; ++t)
    if (loss.step_argmax[static_cast<size_t>(t)] != target[static_cast<size_t>(t + 1)])
      out.teacher_forced_exact = false;
  return out;
}

namespace {

double global_norm(const std::vector<Tensor>& grads) {
  double acc = 0.0;
  for (const Tensor& g : grads)
    for (double v : g.data) acc += v * v;
  return std::sqrt(acc);
}

std::vector<int> greedy_activities(const RanModel& model, const WeakSample& s) {
  return decode_window(model, s.window).activity_tokens(model.vocab);
}

}  // namespace

EvalMetrics evaluate(const RanModel& model, const std::vector<WeakSample>& data) {
  EvalMetrics m;
  m.samples = static_cast<int64_t>(data.size());
  if (data.empty()) return m;
  std::vector<std::vector<int>> preds(data.size());
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < static_cast<int64_t>(data.size()); ++i)
    preds[static_cast<size_t>(i)] = greedy_activities(model, data[static_cast<size_t>(i)]);

  int64_t exact = 0, token_hits = 0, token_total = 0;
  for (size_t i = 0; i < data.size(); ++i) {
    std::vector<int> truth;
    for (int c : data[i].weak_label) truth.push_back(model.vocab.class_token(c));
    const std::vector<int>& pred = preds[i];
    if (pred == truth) ++exact;
    const size_t positions = std::max(truth.size(), pred.size());
    token_total += static_cast<int64_t>(positions);
    for (size_t p = 0; p < positions; ++p) {
      if (p < truth.size() && p < pred.size()) {
        if (truth[p] == pred[p]) ++token_hits;
        m.confusion[{model.vocab.class_index(truth[p]), model.vocab.class_index(pred[p])}]++;
      }
    }
  }
  m.sequence_accuracy = static_cast<double>(exact) / static_cast<double>(data.size());
  m.token_accuracy =
      token_total ? static_cast<double>(token_hits) / static_cast<double>(token_total) : 1.0;
  return m;
}

TrainResult train(RanModel& model, const Dataset& data, const TrainConfig& cfg,
                  std::ostream* log_stream, const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  if (data.train.empty()) throw std::invalid_argument("train: empty training set");

  std::vector<ParamRef> params = list_parameters(model);
  AdamState adam;
  Rng shuffle_rng(cfg.seed ^ 0x5eedb00ULL);

  std::vector<size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    int64_t tf_exact = 0;

    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      const size_t n = std::min(order.size() - start, static_cast<size_t>(cfg.batch_size));
      std::vector<SamplePass> passes(n);
      // Per-sample tapes are independent; accumulation below stays in index
      // order so results do not depend on thread count.
#pragma omp parallel for schedule(dynamic)
      for (int64_t i = 0; i < static_cast<int64_t>(n); ++i)
        passes[static_cast<size_t>(i)] =
            run_sample(model, data.train[order[start + static_cast<size_t>(i)]], cfg);

      std::vector<Tensor> batch_grad;
      batch_grad.reserve(params.size());
      for (const ParamRef& p : params) batch_grad.emplace_back(p.tensor->shape);
      const double inv = 1.0 / static_cast<double>(n);
      for (const SamplePass& pass : passes) {
        loss_sum += pass.loss.total;
        tf_exact += pass.teacher_forced_exact ? 1 : 0;
        for (size_t p = 0; p < params.size(); ++p)
          kernels::axpy(inv, pass.gradients[p].data.data(), batch_grad[p].data.data(),
                        batch_grad[p].numel());
      }

      const double norm = global_norm(batch_grad);
      if (cfg.clip_norm > 0 && norm > cfg.clip_norm) {
        const double scale = cfg.clip_norm / norm;
        for (Tensor& g : batch_grad)
          for (double& v : g.data) v *= scale;
      }
      adam_step(params, batch_grad, adam, cfg);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_acc = static_cast<double>(tf_exact) / static_cast<double>(order.size());
    rec.test_acc = data.test.empty() ? 0.0 : evaluate(model, data.test).sequence_accuracy;
    result.log.push_back(rec);
    if (log_stream) {
      nlohmann::json j{{"epoch", rec.epoch},
                       {"train_loss", rec.train_loss},
                       {"train_acc", rec.train_acc},
                       {"test_acc", rec.test_acc}};
      (*log_stream) << j.dump() << "\n";
    }
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

std::vector<EpochRecord> train_baseline(BaselineModel& model, const BaselineDataset& data,
                                        const TrainConfig& cfg) {
  cfg.validate();
  if (data.train.empty()) throw std::invalid_argument("train_baseline: empty training set");
  std::vector<ParamRef> params = list_parameters(model.params);
  AdamState adam;
  Rng shuffle_rng(cfg.seed ^ 0x5eedb00ULL);
  std::vector<size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<EpochRecord> log;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    int64_t hits = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      const size_t n = std::min(order.size() - start, static_cast<size_t>(cfg.batch_size));
      struct Pass {
        std::vector<Tensor> grads;
        double loss = 0.0;
        bool hit = false;
      };
      std::vector<Pass> passes(n);
#pragma omp parallel for schedule(dynamic)
      for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) {
        const WeakSample& s = data.train[order[start + static_cast<size_t>(i)]];
        GradTape tape;
        BaselineCnnVars vars = bind_baseline(tape, model.params);
        Var window = tape.leaf_ref(&s.window, false);
        Var logits = baseline_logits_t(tape, window, vars, model.config);
        Var loss = ops::cross_entropy(tape, logits, s.weak_label.at(0));
        tape.backward(loss);
        Pass& pass = passes[static_cast<size_t>(i)];
        // Flatten the bound vars in list_parameters order.
        std::vector<Var> flat;
        for (const auto& st : vars.stages) {
          flat.push_back(st.kernels);
          flat.push_back(st.bias);
        }
        flat.push_back(vars.dense_weight);
        flat.push_back(vars.dense_bias);
        flat.push_back(vars.out_weight);
        flat.push_back(vars.out_bias);
        for (Var v : flat) pass.grads.push_back(tape.grad(v));
        pass.loss = tape.value(loss).at(0);
        const Tensor& lv = tape.value(logits);
        int best = 0;
        for (int j = 1; j < lv.numel(); ++j)
          if (lv.at(j) > lv.at(best)) best = j;
        pass.hit = best == s.weak_label.at(0);
      }
      std::vector<Tensor> batch_grad;
      for (const ParamRef& p : params) batch_grad.emplace_back(p.tensor->shape);
      const double inv = 1.0 / static_cast<double>(n);
      for (const Pass& pass : passes) {
        loss_sum += pass.loss;
        hits += pass.hit ? 1 : 0;
        for (size_t p = 0; p < params.size(); ++p)
          kernels::axpy(inv, pass.grads[p].data.data(), batch_grad[p].data.data(),
                        batch_grad[p].numel());
      }
      const double norm = global_norm(batch_grad);
      if (cfg.clip_norm > 0 && norm > cfg.clip_norm) {
        const double scale = cfg.clip_norm / norm;
        for (Tensor& g : batch_grad)
          for (double& v : g.data) v *= scale;
      }
      adam_step(params, batch_grad, adam, cfg);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_acc = static_cast<double>(hits) / static_cast<double>(order.size());
    rec.test_acc = data.test.empty() ? 0.0 : evaluate_baseline(model, data.test);
    log.push_back(rec);
  }
  return log;
}

double evaluate_baseline(const BaselineModel& model, const std::vector<WeakSample>& data) {
  if (data.empty()) return 0.0;
  std::vector<char> hit(data.size(), 0);
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < static_cast<int64_t>(data.size()); ++i) {
    const WeakSample& s = data[static_cast<size_t>(i)];
    Tensor probs = baseline_cnn_forward(s.window, model.params, model.config);
    int best = 0;
    for (int j = 1; j < probs.numel(); ++j)
      if (probs.at(j) > probs.at(best)) best = j;
    hit[static_cast<size_t>(i)] = best == s.weak_label.at(0) ? 1 : 0;
  }
  int64_t hits = 0;
  for (char h : hit) hits += h;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace ran
