// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "ran/reference.hpp"
#include "ran/training.hpp"

using namespace ran;
using test::max_abs_diff;
using test::rand_tensor;

namespace {

// Small everything: window 16x2 -> L=8 features of depth 6.
EncoderConfig tiny_encoder() {
  EncoderConfig cfg;
  cfg.channels_per_stage = {4, 6};
  cfg.kernel_size = 3;
  cfg.pool_size = 2;
  cfg.pool_count = 1;
  return cfg;
}

RanModel tiny_model(uint64_t seed) {
  LabelVocabulary v = LabelVocabulary::for_classes({"A", "B"});
  return RanModel::init(v, 2, tiny_encoder(), 6, 6, 4, 6, seed);
}

TrainConfig tiny_config() {
  TrainConfig tc;
  tc.batch_size = 8;
  tc.epochs = 10;
  tc.learning_rate = 0.005;
  tc.max_steps = 6;
  return tc;
}

// Two easily separable waveform classes.
Tensor tiny_window(Rng& rng, int cls) {
  Tensor w({16, 2});
  for (int64_t i = 0; i < 16; ++i) {
    const double t = static_cast<double>(i);
    const double v = cls == 0 ? std::sin(0.8 * t) : std::sin(2.4 * t);
    w.at(i, cls == 0 ? 0 : 1) = v;
    w.at(i, 0) += rng.normal(0, 0.05);
    w.at(i, 1) += rng.normal(0, 0.05);
  }
  return w;
}

Dataset tiny_dataset(uint64_t seed, int per_class_train = 24, int per_class_test = 8) {
  Rng rng(seed);
  Dataset d;
  for (int cls = 0; cls < 2; ++cls) {
    for (int i = 0; i < per_class_train; ++i)
      d.train.push_back(WeakSample{tiny_window(rng, cls), {cls}, {}, "s01", 0});
    for (int i = 0; i < per_class_test; ++i)
      d.test.push_back(WeakSample{tiny_window(rng, cls), {cls}, {}, "s02", 0});
  }
  return d;
}

}  // namespace

TEST_CASE("sequence_loss: both terms vanish on a perfect transcript") {
  TrainConfig cfg;
  // Two scored steps over two positions, each step one-hot on its own
  // position, so every position receives exactly tau = 1.
  std::vector<Tensor> probs = {Tensor({4}, {0, 0, 1, 0}), Tensor({4}, {0, 1, 0, 0})};
  std::vector<int> target = {LabelVocabulary::kStart, 2, LabelVocabulary::kEnd};
  std::vector<Tensor> alphas = {Tensor({2}, {1, 0}), Tensor({2}, {0, 1})};
  LossOutput out = sequence_loss(probs, target, alphas, cfg);
  CHECK(out.nll == 0.0);
  CHECK(out.attention_penalty == 0.0);
  CHECK(out.total == 0.0);
}

TEST_CASE("sequence_loss: uniform attention penalty has the closed form") {
  TrainConfig cfg;
  const int64_t L = 10;
  const int c = 3;
  std::vector<Tensor> alphas;
  std::vector<Tensor> probs;
  std::vector<int> target = {LabelVocabulary::kStart, 3, 3, LabelVocabulary::kEnd};
  for (int t = 0; t < c; ++t) {
    Tensor a({L});
    a.fill(1.0 / static_cast<double>(L));
    alphas.push_back(a);
    Tensor p({5});
    p.at(target[static_cast<size_t>(t + 1)]) = 1.0;
    probs.push_back(p);
  }
  LossOutput out = sequence_loss(probs, target, alphas, cfg);
  const double want = static_cast<double>(L) *
                      std::pow(cfg.tau - static_cast<double>(c) / static_cast<double>(L), 2);
  CHECK(out.attention_penalty == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("sequence_loss penalty matches the double-loop transcription") {
  Rng rng(71);
  TrainConfig cfg;
  for (int rep = 0; rep < 50; ++rep) {
    const int64_t L = 3 + rng.index(12);
    const int c = 1 + static_cast<int>(rng.index(4));
    std::vector<Tensor> alphas;
    std::vector<Tensor> probs;
    std::vector<int> target = {LabelVocabulary::kStart};
    for (int t = 0; t < c; ++t) {
      // Random positive rows normalized to 1.
      Tensor a = rand_tensor(rng, {L}, 0.01, 1.0);
      double sum = 0;
      for (double v : a.data) sum += v;
      for (double& v : a.data) v /= sum;
      alphas.push_back(a);
      Tensor p = rand_tensor(rng, {6}, 0.01, 1.0);
      double ps = 0;
      for (double v : p.data) ps += v;
      for (double& v : p.data) v /= ps;
      probs.push_back(p);
      target.push_back(3 + static_cast<int>(rng.index(3)));
    }
    target.back() = LabelVocabulary::kEnd;
    LossOutput out = sequence_loss(probs, target, alphas, cfg);
    CHECK(std::fabs(out.attention_penalty - reference::penalty_naive(alphas, cfg.tau)) < 1e-12);
    CHECK(out.total == doctest::Approx(out.nll + cfg.reg_weight * out.attention_penalty));
    CHECK(out.attention_penalty >= 0.0);
  }
}

TEST_CASE("sequence_loss rejects unnormalized attention and clamps zero probabilities") {
  TrainConfig cfg;
  std::vector<Tensor> probs = {Tensor({4}, {0, 0, 0, 1})};
  std::vector<int> target = {LabelVocabulary::kStart, LabelVocabulary::kEnd};
  std::vector<Tensor> bad_alpha = {Tensor({2}, {0.5, 0.9})};
  CHECK_THROWS_AS(sequence_loss(probs, target, bad_alpha, cfg), std::invalid_argument);

  std::vector<Tensor> ok_alpha = {Tensor({2}, {0.5, 0.5})};
  std::vector<Tensor> zero_prob = {Tensor({4}, {1, 0, 0, 0})};  // p(END) = 0
  LossOutput out = sequence_loss(zero_prob, target, ok_alpha, cfg);
  CHECK(out.clamped_probabilities == 1);
  CHECK(out.nll == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Tensor w({3}, {0.5, -0.25, 1.5});
  std::vector<ParamRef> params{{"w", &w}};
  std::vector<Tensor> grads{Tensor({3})};
  AdamState state;
  TrainConfig cfg;
  adam_step(params, grads, state, cfg);
  CHECK(w.data == std::vector<double>{0.5, -0.25, 1.5});
}

TEST_CASE("adam: the first step moves by about -lr * sign(gradient)") {
  Tensor w({3}, {1.0, 2.0, 3.0});
  std::vector<ParamRef> params{{"w", &w}};
  std::vector<Tensor> grads{Tensor({3}, {0.2, -0.01, 5.0})};
  AdamState state;
  TrainConfig cfg;
  adam_step(params, grads, state, cfg);
  // After bias correction, m_hat = g and v_hat = g^2, so the step is
  // -lr * g / (|g| + eps') per coordinate.
  CHECK(w.at(0) == doctest::Approx(1.0 - cfg.learning_rate).epsilon(1e-4));
  CHECK(w.at(1) == doctest::Approx(2.0 + cfg.learning_rate).epsilon(1e-4));
  CHECK(w.at(2) == doctest::Approx(3.0 - cfg.learning_rate).epsilon(1e-4));
}

TEST_CASE("adam: 100 steps on a convex quadratic decrease it monotonically after step 5") {
  Tensor x({1}, {4.0});
  std::vector<ParamRef> params{{"x", &x}};
  AdamState state;
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  double prev = HUGE_VAL;
  for (int step = 1; step <= 100; ++step) {
    const double objective = 0.5 * x.at(0) * x.at(0);
    if (step > 5) CHECK(objective < prev);
    prev = objective;
    std::vector<Tensor> grads{Tensor({1}, {x.at(0)})};
    adam_step(params, grads, state, cfg);
  }
}

TEST_CASE("adam aborts on a non-finite gradient, naming the parameter") {
  Tensor w({2});
  std::vector<ParamRef> params{{"decoder.broken", &w}};
  std::vector<Tensor> grads{Tensor({2}, {0.1, std::nan("")})};
  AdamState state;
  TrainConfig cfg;
  try {
    adam_step(params, grads, state, cfg);
    FAIL("expected a runtime_error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("decoder.broken") != std::string::npos);
  }
}

TEST_CASE("training is reproducible: same seed, identical epoch logs") {
  Dataset data = tiny_dataset(81);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 4;
  cfg.seed = 5;

  std::ostringstream log1, log2;
  RanModel m1 = tiny_model(7);
  train(m1, data, cfg, &log1);
  RanModel m2 = tiny_model(7);
  train(m2, data, cfg, &log2);
  CHECK(log1.str() == log2.str());
  CHECK(!log1.str().empty());

  // And identical final parameters, bit for bit.
  std::vector<ParamRef> p1 = list_parameters(m1), p2 = list_parameters(m2);
  for (size_t i = 0; i < p1.size(); ++i) CHECK(p1[i].tensor->data == p2[i].tensor->data);
}

TEST_CASE("loss on the tiny task decreases over the first 10 epochs") {
  Dataset data = tiny_dataset(82);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 10;
  RanModel model = tiny_model(9);
  TrainResult r = train(model, data, cfg);
  REQUIRE(r.log.size() == 10);
  CHECK(r.log.back().train_loss < r.log.front().train_loss);
  CHECK(r.log.back().test_acc >= 0.5);  // learns something on the toy task
}

TEST_CASE("train rejects an empty dataset") {
  RanModel model = tiny_model(10);
  Dataset empty;
  CHECK_THROWS_AS(train(model, empty, tiny_config()), std::invalid_argument);
}

TEST_CASE("evaluate counting rules: perfect, empty, and 9-of-10") {
  Rng rng(83);
  // A model that always predicts END immediately -> empty activity list.
  LabelVocabulary v = LabelVocabulary::for_classes({"A", "B"});
  RanModel model = RanModel::init(v, 2, tiny_encoder(), 6, 6, 4, 6, 11);
  model.decoder.out_bias.fill(0.0);
  model.decoder.out_bias.at(LabelVocabulary::kEnd) = 60.0;
  model.decoder.out_hidden_weight.fill(0.0);
  model.decoder.out_context_weight.fill(0.0);

  std::vector<WeakSample> all_empty;
  for (int i = 0; i < 10; ++i)
    all_empty.push_back(WeakSample{rand_tensor(rng, {16, 2}), {}, {}, "s", 0});
  CHECK(evaluate(model, all_empty).sequence_accuracy == 1.0);

  std::vector<WeakSample> non_empty;
  for (int i = 0; i < 10; ++i)
    non_empty.push_back(WeakSample{rand_tensor(rng, {16, 2}), {0}, {}, "s", 0});
  CHECK(evaluate(model, non_empty).sequence_accuracy == 0.0);

  std::vector<WeakSample> mixed = all_empty;
  mixed[3].weak_label = {1};  // the single miss
  CHECK(evaluate(model, mixed).sequence_accuracy == doctest::Approx(0.9));
}

TEST_CASE("tape loss agrees with the plain sequence_loss computation") {
  Rng rng(84);
  RanModel model = tiny_model(12);
  Tensor window = rand_tensor(rng, {16, 2});
  TrainConfig cfg = tiny_config();
  const std::vector<int> target = encode_label_sequence({0, 1}, model.vocab, cfg.max_steps);

  GradTape tape;
  BoundModel bound = bind_model(tape, model);
  Var w = tape.leaf_ref(&window, false);
  UnrolledLoss unrolled = teacher_forced_loss_t(tape, w, bound, model, target, cfg.tau,
                                                cfg.reg_weight);

  std::vector<Tensor> alpha_rows;
  for (Var a : unrolled.step_weights) alpha_rows.push_back(tape.value(a));
  LossOutput plain = sequence_loss(unrolled.step_probabilities, target, alpha_rows, cfg);
  CHECK(tape.value(unrolled.nll).at(0) == doctest::Approx(plain.nll).epsilon(1e-9));
  CHECK(tape.value(unrolled.penalty).at(0) ==
        doctest::Approx(plain.attention_penalty).epsilon(1e-9));
  CHECK(tape.value(unrolled.total).at(0) == doctest::Approx(plain.total).epsilon(1e-9));
}
