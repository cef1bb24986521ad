// SPDX-License-Identifier: Apache-2.0
#include "ran/model.hpp"

#include "ran/kernels.hpp"

namespace ran {

RanModel RanModel::init(const LabelVocabulary& vocab, int modalities, const EncoderConfig& cfg,
                        int hidden, int attention_width, int embedding, int max_steps,
                        uint64_t seed) {
  cfg.validate();
  if (vocab.num_classes() < 1) throw std::invalid_argument("model: vocabulary has no classes");
  RanModel m;
  m.vocab = vocab;
  m.encoder_config = cfg;
  m.modalities = modalities;
  m.hidden_size = hidden;
  m.attention_width = attention_width;
  m.embedding_size = embedding;
  m.max_steps = max_steps;
  Rng rng(seed);
  m.encoder = EncoderParams::init(cfg, modalities, rng);
  m.attention = AttentionParams::init(cfg.feature_depth(), hidden, attention_width, rng);
  m.decoder = DecoderParams::init(cfg.feature_depth(), hidden, embedding, vocab.size(), rng);
  return m;
}

std::vector<ParamRef> list_parameters(RanModel& m) {
  std::vector<ParamRef> out;
  for (size_t i = 0; i < m.encoder.stages.size(); ++i) {
    const std::string base = "encoder.stage" + std::to_string(i);
    out.push_back({base + ".kernels", &m.encoder.stages[i].kernels});
    out.push_back({base + ".bias", &m.encoder.stages[i].bias});
  }
  out.push_back({"attention.feature_projection", &m.attention.feature_projection});
  out.push_back({"attention.hidden_projection", &m.attention.hidden_projection});
  out.push_back({"attention.hidden_bias", &m.attention.hidden_bias});
  out.push_back({"attention.score_vector", &m.attention.score_vector});
  static const char* kGateNames[4] = {"input", "forget", "candidate", "output"};
  for (int g = 0; g < 4; ++g) {
    const std::string base = std::string("decoder.gate_") + kGateNames[g];
    out.push_back({base + ".label_weight", &m.decoder.gates[g].label_weight});
    out.push_back({base + ".hidden_weight", &m.decoder.gates[g].hidden_weight});
    out.push_back({base + ".context_weight", &m.decoder.gates[g].context_weight});
    out.push_back({base + ".bias", &m.decoder.gates[g].bias});
  }
  out.push_back({"decoder.embedding", &m.decoder.embedding});
  out.push_back({"decoder.init_c.weight", &m.decoder.init_c_weight});
  out.push_back({"decoder.init_c.bias", &m.decoder.init_c_bias});
  out.push_back({"decoder.init_h.weight", &m.decoder.init_h_weight});
  out.push_back({"decoder.init_h.bias", &m.decoder.init_h_bias});
  out.push_back({"decoder.output.hidden_weight", &m.decoder.out_hidden_weight});
  out.push_back({"decoder.output.context_weight", &m.decoder.out_context_weight});
  out.push_back({"decoder.output.bias", &m.decoder.out_bias});
  return out;
}

std::vector<ParamRef> list_parameters(BaselineCnnParams& p) {
  std::vector<ParamRef> out;
  for (size_t i = 0; i < p.stages.size(); ++i) {
    const std::string base = "baseline.stage" + std::to_string(i);
    out.push_back({base + ".kernels", &p.stages[i].kernels});
    out.push_back({base + ".bias", &p.stages[i].bias});
  }
  out.push_back({"baseline.dense.weight", &p.dense_weight});
  out.push_back({"baseline.dense.bias", &p.dense_bias});
  out.push_back({"baseline.output.weight", &p.out_weight});
  out.push_back({"baseline.output.bias", &p.out_bias});
  return out;
}

BoundModel bind_model(GradTape& t, RanModel& m) {
  BoundModel b;
  std::unordered_map<std::string, Var> by_name;
  for (const ParamRef& r : list_parameters(m)) {
    Var v = t.leaf_ref(r.tensor, true);
    b.flat.push_back(v);
    by_name.emplace(r.name, v);
  }
  auto get = [&](const std::string& name) { return by_name.at(name); };
  for (size_t i = 0; i < m.encoder.stages.size(); ++i) {
    const std::string base = "encoder.stage" + std::to_string(i);
    b.encoder.stages.push_back({get(base + ".kernels"), get(base + ".bias")});
  }
  b.attention = AttentionVars{get("attention.feature_projection"),
                              get("attention.hidden_projection"), get("attention.hidden_bias"),
                              get("attention.score_vector")};
  static const char* kGateNames[4] = {"input", "forget", "candidate", "output"};
  for (int g = 0; g < 4; ++g) {
    const std::string base = std::string("decoder.gate_") + kGateNames[g];
    b.decoder.gates[g] = GateVars{get(base + ".label_weight"), get(base + ".hidden_weight"),
                                  get(base + ".context_weight"), get(base + ".bias")};
  }
  b.decoder.embedding = get("decoder.embedding");
  b.decoder.init_c_weight = get("decoder.init_c.weight");
  b.decoder.init_c_bias = get("decoder.init_c.bias");
  b.decoder.init_h_weight = get("decoder.init_h.weight");
  b.decoder.init_h_bias = get("decoder.init_h.bias");
  b.decoder.out_hidden_weight = get("decoder.output.hidden_weight");
  b.decoder.out_context_weight = get("decoder.output.context_weight");
  b.decoder.out_bias = get("decoder.output.bias");
  return b;
}

UnrolledLoss teacher_forced_loss_t(GradTape& t, Var window, const BoundModel& b, RanModel& m,
                                   const std::vector<int>& target, double tau, double lambda) {
  UnrolledLoss out;
  out.scored_steps = scored_step_count(target, m.vocab);

  Var features = encode_t(t, window, b.encoder, m.encoder_config);
  Var projected = project_features(t, features, b.attention);
  auto [h, c] = init_state_t(t, features, b.decoder);

  Var nll;
  Var weight_sum;
  for (int step = 1; step <= out.scored_steps; ++step) {
    AttendNodes at = attend_step(t, projected, features, h, b.attention);
    auto [h2, c2] =
        lstm_step_t(t, h, c, target[static_cast<size_t>(step - 1)], at.context, b.decoder);
    Var logits = output_logits_t(t, h2, at.context, b.decoder);
    Var step_loss = ops::cross_entropy(t, logits, target[static_cast<size_t>(step)]);
    nll = nll.valid() ? ops::add(t, nll, step_loss) : step_loss;
    weight_sum = weight_sum.valid() ? ops::add(t, weight_sum, at.weights) : at.weights;
    out.step_weights.push_back(at.weights);

    Tensor probs(t.value(logits).shape);
    kernels::softmax(t.value(logits).data.data(), probs.data.data(), probs.numel());
    int best = 0;
    for (int i = 1; i < probs.numel(); ++i)
      if (probs.at(i) > probs.at(best)) best = i;
    out.step_probabilities.push_back(std::move(probs));
    out.step_argmax.push_back(best);

    h = h2;
    c = c2;
  }
  out.nll = nll;
  out.penalty = ops::sumsq_dev(t, weight_sum, tau);
  out.total = ops::add(t, nll, ops::scale(t, out.penalty, lambda));
  return out;
}

DecodeResult decode_window(const RanModel& m, const Tensor& window) {
  FeatureMap features = encode(window, m.encoder, m.encoder_config);
  return decode_greedy(features, m.attention, m.decoder, m.vocab, m.max_steps);
}

}  // namespace ran
