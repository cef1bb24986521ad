// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "ran/evaluation.hpp"

using namespace ran;

namespace {

// Small fast experiment: short windows, small model, few epochs.
ExperimentSpec smoke_spec(const std::string& case_id) {
  ExperimentSpec spec;
  spec.case_id = case_id;
  spec.synthetic.sampling_rate = 25.0;
  spec.synthetic.activity_duration = 2.0;
  spec.synthetic.window_length = 100;
  spec.synthetic.gap_min = 0.8;
  spec.synthetic.gap_max = 1.2;
  spec.synthetic.subjects = 4;
  spec.synthetic.cycles_per_order = 3;
  spec.synthetic.passes = 1;
  spec.segmentation.window_length = 100;
  spec.segmentation.stride = 50;
  spec.train_subjects = 3;
  spec.per_type_train_cap = 20;
  spec.per_type_test_cap = 10;
  spec.encoder.channels_per_stage = {6, 10};
  spec.encoder.kernel_size = 3;
  spec.encoder.pool_size = 2;
  spec.encoder.pool_count = 1;
  spec.hidden_size = 12;
  spec.attention_width = 12;
  spec.embedding_size = 6;
  spec.train.epochs = 2;
  spec.train.batch_size = 16;
  return spec;
}

std::set<std::vector<int>> type_set(const std::vector<std::vector<int>>& v) {
  return std::set<std::vector<int>>(v.begin(), v.end());
}

}  // namespace

TEST_CASE("case recipes reproduce the experiment table") {
  CaseRecipe c1 = case_recipe("1");
  CHECK(type_set(c1.train_types) == std::set<std::vector<int>>{{0}, {1}, {2}});
  CHECK(type_set(c1.test_types) == type_set(c1.train_types));

  CaseRecipe c2 = case_recipe("2");
  CHECK(c2.train_types.size() == 6);
  CHECK(type_set(c2.test_types) == type_set(c2.train_types));

  CaseRecipe c4 = case_recipe("4");
  CHECK(type_set(c4.train_types) ==
        std::set<std::vector<int>>{{0}, {1}, {2}, {0, 1}, {0, 2}, {1, 2}});
  CHECK(type_set(c4.test_types) == std::set<std::vector<int>>{{1, 0}, {2, 0}, {2, 1}});

  CaseRecipe c5 = case_recipe("5");
  CHECK(type_set(c5.train_types) ==
        std::set<std::vector<int>>{{0}, {1}, {2}, {0, 1}, {1, 0}, {0, 2}, {2, 0}});
  CHECK(type_set(c5.test_types) == std::set<std::vector<int>>{{1, 2}, {2, 1}});

  CHECK_THROWS_AS(case_recipe("9"), std::invalid_argument);
}

TEST_CASE("case 3's train set is the union of case 1's and case 2's") {
  std::set<std::vector<int>> expected = type_set(case_recipe("1").train_types);
  for (const auto& t : case_recipe("2").train_types) expected.insert(t);
  CHECK(type_set(case_recipe("3").train_types) == expected);
}

TEST_CASE("public-dataset protocol recipes exist") {
  CHECK(case_recipe("unimib").train_types.size() == 3);
  CHECK(case_recipe("strict").train_types.size() == 3);
  CHECK(case_recipe("weak").train_types.size() == 9);
}

TEST_CASE("build_case_dataset filters by type and honors the caps") {
  Rng rng(61);
  std::vector<WeakSample> pool;
  for (int i = 0; i < 30; ++i)
    pool.push_back(WeakSample{Tensor({4, 3}), {i % 3}, {}, "s01", 0});
  for (int i = 0; i < 10; ++i)
    pool.push_back(WeakSample{Tensor({4, 3}), {0, 1}, {}, "s01", 0});

  Dataset d = build_case_dataset(case_recipe("1"), pool, pool, 5, 2, 7);
  CHECK(d.train.size() == 15);  // 3 types x cap 5
  CHECK(d.test.size() == 6);
  for (const WeakSample& s : d.train) CHECK(s.weak_label.size() == 1);

  Dataset all = build_case_dataset(case_recipe("3"), pool, pool, 0, 0, 7);
  CHECK(all.train.size() == 40);  // no cap keeps everything matching
}

TEST_CASE("paper reference constants are embedded and labeled") {
  nlohmann::json refs = paper_reference_table();
  CHECK(refs["unimib"]["cnn"] == 0.725);
  CHECK(refs["unimib"]["ran"] == 0.728);
  CHECK(refs["opportunity"]["strict"]["cnn"] == 0.778);
  CHECK(refs["opportunity"]["strict"]["ran"] == 0.786);
  CHECK(refs["opportunity"]["weak"]["ran"] == 0.775);
  CHECK(refs["swlm_cases"]["2"]["ran"] == 0.990);
  CHECK(refs["swlm_cases"]["3"]["ran"] == 0.985);
  CHECK(refs["swlm_cases"]["4"]["ran_reversed_asterisk"] == 0.856);
  const std::string note = refs["note"];
  CHECK(note.find("reference") != std::string::npos);
}

TEST_CASE("run_case produces a complete, deterministic report") {
  ExperimentSpec spec = smoke_spec("1");
  CaseReport r1 = run_case(spec, 99);
  CaseReport r2 = run_case(spec, 99);
  CHECK(r1.to_json().dump() == r2.to_json().dump());

  CHECK(r1.case_id == "1");
  CHECK(!r1.train_type_counts.empty());
  CHECK(!r1.epochs.empty());
  CHECK(r1.resolved_config.contains("learning_rate"));
  CHECK(r1.to_json().contains("paper_reference"));
  CHECK(r1.median_top_region_iou.has_value());  // synthetic data carries spans
  CHECK(!r1.table().empty());
}

TEST_CASE("run_case on case 4 reports reversed and multiset accuracies") {
  ExperimentSpec spec = smoke_spec("4");
  CaseReport r = run_case(spec, 3);
  CHECK(r.reversed_accuracy.has_value());
  CHECK(r.multiset_accuracy.has_value());
  CHECK(*r.multiset_accuracy >= *r.reversed_accuracy - 1e-12);
}

TEST_CASE("compare_baseline trains both models on the same split") {
  ExperimentSpec spec = smoke_spec("1");
  BaselineComparison cmp = compare_baseline(spec, 5);
  CHECK(cmp.case_id == "1");
  CHECK(cmp.atomic_classes == 3);
  CHECK(cmp.cnn_accuracy >= 0.0);
  CHECK(cmp.cnn_accuracy <= 1.0);
  CHECK(cmp.to_json().contains("paper_reference"));
}

TEST_CASE("baseline CNN learns synthetic single activities to high accuracy") {
  // Strictly labeled single-activity windows, as in the recognition-only
  // comparisons.
  SyntheticSpec synth = SyntheticSpec::default_swlm();
  synth.sampling_rate = 50.0;
  synth.activity_duration = 2.5;
  synth.window_length = 151;
  synth.gap_min = 1.5;
  synth.gap_max = 2.0;
  synth.subjects = 5;
  synth.cycles_per_order = 6;
  synth.passes = 1;

  SegmentConfig seg;
  seg.window_length = 151;
  seg.stride = 75;

  std::vector<SensorSequence> seqs = generate_synthetic(synth, 13);
  auto [train_sub, test_sub] = default_subject_split(seqs, 4);
  auto [train_seqs, test_seqs] = split_by_subject(seqs, train_sub, test_sub);
  BaselineDataset data;
  for (const auto& s : train_seqs)
    for (WeakSample& w : segment(s, seg))
      if (w.weak_label.size() == 1) data.train.push_back(std::move(w));
  for (const auto& s : test_seqs)
    for (WeakSample& w : segment(s, seg))
      if (w.weak_label.size() == 1) data.test.push_back(std::move(w));
  REQUIRE(data.train.size() > 100);
  REQUIRE(data.test.size() > 20);

  BaselineModel model;
  model.class_names = {"A", "B", "C"};
  model.config.num_classes = 3;
  Rng rng(29);
  model.params = BaselineCnnParams::init(model.config, 3, seg.window_length, rng);

  TrainConfig tc;
  tc.epochs = 30;
  tc.batch_size = 25;
  tc.learning_rate = 0.001;
  tc.seed = 17;
  std::vector<EpochRecord> log = train_baseline(model, data, tc);
  REQUIRE(!log.empty());
  CHECK(log.back().test_acc >= 0.99);
}
