// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "ran/localization.hpp"
#include "ran/reference.hpp"

using namespace ran;
using test::rand_tensor;

namespace {
LocalizationConfig cfg_of(double f, int p, int s, double d) {
  LocalizationConfig c;
  c.sampling_rate = f;
  c.pool_size = p;
  c.pool_count = s;
  c.mean_duration = d;
  return c;
}
}  // namespace

TEST_CASE("window size rule: published value, even rounding, and the floor") {
  CHECK(window_size(cfg_of(30, 2, 3, 3)) == 12);   // 30/8*3 = 11.25 -> 12
  CHECK(window_size(cfg_of(50, 2, 3, 5)) == 32);   // 31.25 -> 32
  CHECK(window_size(cfg_of(8, 2, 3, 1)) == 2);     // 1.0 -> minimum 2
  CHECK(window_size(cfg_of(32, 2, 3, 3)) == 12);   // exact even stays
}

TEST_CASE("window clamping warns and yields the largest even width") {
  std::string warning;
  CHECK(clamp_window(32, 81, &warning) == 32);
  CHECK(warning.empty());
  CHECK(clamp_window(32, 21, &warning) == 20);
  CHECK(!warning.empty());
  CHECK(clamp_window(32, 20, nullptr) == 20);
}

TEST_CASE("aggregate_scores: uniform weights give (w+1)/n inside, less at borders") {
  const int64_t n = 30;
  const int w = 6;
  std::vector<double> alpha(n, 1.0 / static_cast<double>(n));
  std::vector<double> s = aggregate_scores(alpha, w);
  for (int64_t i = w / 2; i < n - w / 2; ++i)
    CHECK(s[static_cast<size_t>(i)] ==
          doctest::Approx((w + 1.0) / static_cast<double>(n)).epsilon(1e-12));
  CHECK(s[0] < s[static_cast<size_t>(w / 2)]);
  CHECK(s[static_cast<size_t>(n - 1)] < s[static_cast<size_t>(n - w / 2 - 1)]);
  // Border windows shrink monotonically toward the edges.
  for (int64_t i = 0; i < w / 2; ++i) CHECK(s[static_cast<size_t>(i)] <= s[static_cast<size_t>(i + 1)] + 1e-15);
}

TEST_CASE("aggregate_scores: one-hot support is exactly the window reach") {
  const int64_t n = 25;
  const int w = 8;
  const int64_t k = 11;
  std::vector<double> alpha(n, 0.0);
  alpha[static_cast<size_t>(k)] = 1.0;
  std::vector<double> s = aggregate_scores(alpha, w);
  for (int64_t i = 0; i < n; ++i) {
    if (std::llabs(i - k) <= w / 2)
      CHECK(s[static_cast<size_t>(i)] == 1.0);
    else
      CHECK(s[static_cast<size_t>(i)] == 0.0);
  }
}

TEST_CASE("prefix-sum aggregation matches the naive double loop") {
  Rng rng(91);
  for (int rep = 0; rep < 100; ++rep) {
    const int64_t n = 4 + rng.index(197);
    std::vector<double> alpha(static_cast<size_t>(n));
    for (double& v : alpha) v = rng.uniform();
    int w = 2 + 2 * static_cast<int>(rng.index(std::max<int64_t>(1, n / 2)));
    w = std::min<int>(w, static_cast<int>(n % 2 == 0 ? n : n - 1));
    std::vector<double> fast = aggregate_scores(alpha, w);
    std::vector<double> slow = reference::sliding_sum_naive(alpha, w);
    for (size_t i = 0; i < alpha.size(); ++i) CHECK(std::fabs(fast[i] - slow[i]) < 1e-12);

    // Coverage identity: sum_i s_i counts every alpha_j once per window
    // containing j.
    double total = 0.0;
    for (double v : fast) total += v;
    double expected = 0.0;
    for (int64_t j = 0; j < n; ++j) {
      const int64_t lo = std::max<int64_t>(0, j - w / 2);
      const int64_t hi = std::min<int64_t>(n - 1, j + w / 2);
      expected += alpha[static_cast<size_t>(j)] * static_cast<double>(hi - lo + 1);
    }
    CHECK(total == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("aggregate_scores rejects odd or out-of-range widths") {
  std::vector<double> alpha(10, 0.1);
  CHECK_THROWS_AS(aggregate_scores(alpha, 3), std::invalid_argument);
  CHECK_THROWS_AS(aggregate_scores(alpha, 0), std::invalid_argument);
  CHECK_THROWS_AS(aggregate_scores(alpha, 12), std::invalid_argument);
}

TEST_CASE("normalize_scores: direct example, degenerate case, affine invariance") {
  std::vector<double> s{1, 2, 3};
  std::vector<double> n = normalize_scores(s);
  CHECK(n[0] == 0.0);
  CHECK(n[1] == doctest::Approx(0.5));
  CHECK(n[2] == 1.0);

  std::vector<double> flat(5, 0.37);
  for (double v : normalize_scores(flat)) CHECK(v == 0.0);

  Rng rng(92);
  std::vector<double> raw(17);
  for (double& v : raw) v = rng.uniform(-3, 3);
  std::vector<double> base = normalize_scores(raw);
  std::vector<double> mapped(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) mapped[i] = 2.5 * raw[i] - 7.0;
  std::vector<double> again = normalize_scores(mapped);
  for (size_t i = 0; i < raw.size(); ++i) CHECK(std::fabs(base[i] - again[i]) < 1e-12);

  CHECK_THROWS_AS(normalize_scores({}), std::invalid_argument);
}

TEST_CASE("region extraction: direct thresholding and monotonicity") {
  LabelVocabulary v = LabelVocabulary::for_classes({"A"});
  DecodeResult decoded;
  decoded.steps.push_back(DecodeStep{v.class_token(0), Tensor({2}), Tensor({2})});
  // Attention over 4 positions crafted so the normalized scores are known.
  decoded.attention.weights.push_back(Tensor({4}, {0.0, 0.45, 0.55, 0.0}));
  decoded.attention.scores.push_back(Tensor({4}));

  LocalizationConfig cfg = cfg_of(16, 2, 3, 1);  // w = 2
  LocalizationResult r = localize(decoded, v, cfg);
  REQUIRE(r.steps.size() == 1);
  REQUIRE(r.steps[0].regions.size() == 1);
  const ActivityRegion& region = r.steps[0].regions[0];
  CHECK(region.feature_begin >= 1);
  CHECK(region.feature_end <= 2);
  CHECK(region.raw_begin == region.feature_begin * 8);
  CHECK(region.raw_end == (region.feature_end + 1) * 8);
  CHECK(region.peak == 1.0);

  // Raising the threshold never enlarges a region.
  LocalizationConfig tighter = cfg;
  tighter.threshold = 0.9;
  LocalizationResult r2 = localize(decoded, v, tighter);
  int64_t len1 = 0, len2 = 0;
  for (const auto& reg : r.steps[0].regions) len1 += reg.feature_end - reg.feature_begin + 1;
  for (const auto& reg : r2.steps[0].regions) len2 += reg.feature_end - reg.feature_begin + 1;
  CHECK(len2 <= len1);
}

TEST_CASE("constant attention yields zero regions") {
  LabelVocabulary v = LabelVocabulary::for_classes({"A"});
  DecodeResult decoded;
  decoded.steps.push_back(DecodeStep{v.class_token(0), Tensor({2}), Tensor({2})});
  Tensor flat({12});
  flat.fill(1.0 / 12.0);
  decoded.attention.weights.push_back(flat);
  decoded.attention.scores.push_back(Tensor({12}));
  LocalizationResult r = localize(decoded, v, cfg_of(16, 2, 3, 1));
  REQUIRE(r.steps.size() == 1);
  CHECK(r.steps[0].regions.empty());
}

TEST_CASE("END and PAD steps are skipped; thresholds below everything give none") {
  LabelVocabulary v = LabelVocabulary::for_classes({"A"});
  DecodeResult decoded;
  decoded.steps.push_back(DecodeStep{LabelVocabulary::kEnd, Tensor({2}), Tensor({2})});
  decoded.attention.weights.push_back(Tensor({8}, {1, 0, 0, 0, 0, 0, 0, 0}));
  decoded.attention.scores.push_back(Tensor({8}));
  LocalizationResult r = localize(decoded, v, cfg_of(16, 2, 3, 1));
  CHECK(r.steps.empty());
}

TEST_CASE("interval IoU: identical, disjoint, and the 1/3 example") {
  CHECK(interval_iou(5, 25, 5, 25) == 1.0);
  CHECK(interval_iou(0, 10, 20, 30) == 0.0);
  CHECK(interval_iou(0, 100, 50, 150) == doctest::Approx(1.0 / 3.0));
  ActivityRegion r;
  r.raw_begin = 0;
  r.raw_end = 100;
  CHECK(localization_iou(r, 50, 150) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("plot CSV carries the documented columns at the feature stride") {
  StepLocalization step;
  step.label = 3;
  step.alpha = {0.25, 0.75};
  step.summed = {1.0, 1.0};
  step.normalized = {0.0, 1.0};
  std::ostringstream out;
  write_plot_csv(out, step, cfg_of(16, 2, 3, 1));
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "raw_index,alpha,s,s_bar,threshold_flag");
  std::getline(in, line);
  CHECK(line.rfind("0,0.25,1,0,0", 0) == 0);
  std::getline(in, line);
  CHECK(line.rfind("8,0.75,1,1,1", 0) == 0);
}
