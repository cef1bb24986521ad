// SPDX-License-Identifier: Apache-2.0
#include "ran/localization.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

namespace ran {

void LocalizationConfig::validate() const {
  if (sampling_rate <= 0 || mean_duration <= 0)
    throw std::invalid_argument("localization: rate and duration must be positive");
  if (pool_size < 2 || pool_count < 0)
    throw std::invalid_argument("localization: bad pooling description");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("localization: threshold must be in (0,1)");
}

int64_t LocalizationConfig::feature_stride() const {
  int64_t s = 1;
  for (int i = 0; i < pool_count; ++i) s *= pool_size;
  return s;
}

int window_size(const LocalizationConfig& cfg) {
  cfg.validate();
  const double w = cfg.sampling_rate / static_cast<double>(cfg.feature_stride()) *
                   cfg.mean_duration;
  const int even = 2 * static_cast<int>(std::ceil(w / 2.0));
  return std::max(2, even);
}

int clamp_window(int w, int64_t n, std::string* warning) {
  if (w <= n) return w;
  const int clamped = static_cast<int>(n % 2 == 0 ? n : n - 1);
  const int result = std::max(2, clamped);
  if (warning)
    *warning += "window width " + std::to_string(w) + " exceeds score length " +
                std::to_string(n) + ", clamped to " + std::to_string(result) + "\n";
  return result;
}

std::vector<double> aggregate_scores(const std::vector<double>& alpha, int w) {
  const int64_t n = static_cast<int64_t>(alpha.size());
  if (w % 2 != 0) throw std::invalid_argument("aggregate_scores: w must be even");
  if (w < 2 || w > n) throw std::invalid_argument("aggregate_scores: w out of range");
  const int64_t half = w / 2;
  std::vector<double> prefix(static_cast<size_t>(n + 1), 0.0);
  for (int64_t i = 0; i < n; ++i) prefix[static_cast<size_t>(i + 1)] =
      prefix[static_cast<size_t>(i)] + alpha[static_cast<size_t>(i)];
  std::vector<double> s(alpha.size(), 0.0);
  for (int64_t i = 0; i < n; ++i) {
    const int64_t lo = std::max<int64_t>(0, i - half);        // inclusive, 0-based
    const int64_t hi = std::min<int64_t>(n - 1, i + half);    // inclusive, 0-based
    s[static_cast<size_t>(i)] =
        prefix[static_cast<size_t>(hi + 1)] - prefix[static_cast<size_t>(lo)];
  }
  return s;
}

std::vector<double> normalize_scores(const std::vector<double>& s) {
  if (s.empty()) throw std::invalid_argument("normalize_scores: empty input");
  const auto [mn_it, mx_it] = std::minmax_element(s.begin(), s.end());
  const double mn = *mn_it, mx = *mx_it;
  std::vector<double> out(s.size(), 0.0);
  if (mx == mn) return out;  // constant scores carry no localization signal
  const double inv = 1.0 / (mx - mn);
  for (size_t i = 0; i < s.size(); ++i) out[i] = (s[i] - mn) * inv;
  return out;
}

namespace {
std::vector<ActivityRegion> regions_above(const std::vector<double>& normalized, double threshold,
                                          int label, int64_t stride) {
  std::vector<ActivityRegion> out;
  const int64_t n = static_cast<int64_t>(normalized.size());
  int64_t i = 0;
  while (i < n) {
    if (normalized[static_cast<size_t>(i)] > threshold) {
      ActivityRegion r;
      r.label = label;
      r.feature_begin = i;
      r.peak = normalized[static_cast<size_t>(i)];
      while (i + 1 < n && normalized[static_cast<size_t>(i + 1)] > threshold) {
        ++i;
        r.peak = std::max(r.peak, normalized[static_cast<size_t>(i)]);
      }
      r.feature_end = i;
      r.raw_begin = r.feature_begin * stride;
      r.raw_end = (r.feature_end + 1) * stride;
      out.push_back(r);
    }
    ++i;
  }
  return out;
}
}  // namespace

LocalizationResult localize(const DecodeResult& decoded, const LabelVocabulary& vocab,
                            const LocalizationConfig& cfg) {
  cfg.validate();
  LocalizationResult result;
  const int64_t stride = cfg.feature_stride();
  for (size_t s = 0; s < decoded.steps.size(); ++s) {
    const int token = decoded.steps[s].token;
    if (vocab.is_special(token)) continue;  // END/PAD steps carry no location
    StepLocalization step;
    step.label = token;
    const Tensor& alpha = decoded.attention.weights[s];
    step.alpha.assign(alpha.data.begin(), alpha.data.end());
    int w = window_size(cfg);
    w = clamp_window(w, static_cast<int64_t>(step.alpha.size()));
    result.window_width = w;
    step.summed = aggregate_scores(step.alpha, w);
    step.normalized = normalize_scores(step.summed);
    step.regions = regions_above(step.normalized, cfg.threshold, token, stride);
    result.steps.push_back(std::move(step));
  }
  if (result.window_width == 0) result.window_width = window_size(cfg);
  return result;
}

double interval_iou(int64_t a_begin, int64_t a_end, int64_t b_begin, int64_t b_end) {
  const int64_t inter = std::min(a_end, b_end) - std::max(a_begin, b_begin);
  if (inter <= 0) return 0.0;
  const int64_t uni = (a_end - a_begin) + (b_end - b_begin) - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

double localization_iou(const ActivityRegion& region, int64_t truth_begin, int64_t truth_end) {
  return interval_iou(region.raw_begin, region.raw_end, truth_begin, truth_end);
}

std::string localization_json(const std::string& sample_id, const LocalizationResult& result,
                              const LabelVocabulary& vocab) {
  nlohmann::json steps = nlohmann::json::array();
  for (const StepLocalization& s : result.steps) {
    nlohmann::json regions = nlohmann::json::array();
    for (const ActivityRegion& r : s.regions)
      regions.push_back({{"start_raw", r.raw_begin}, {"end_raw", r.raw_end}, {"peak", r.peak}});
    steps.push_back({{"label", vocab.name(s.label)},
                     {"s_bar", s.normalized},
                     {"regions", std::move(regions)}});
  }
  nlohmann::json out;
  out["sample_id"] = sample_id;
  out["window_width"] = result.window_width;
  out["steps"] = std::move(steps);
  return out.dump();
}

void write_plot_csv(std::ostream& out, const StepLocalization& step,
                    const LocalizationConfig& cfg) {
  const int64_t stride = cfg.feature_stride();
  out << "raw_index,alpha,s,s_bar,threshold_flag\n";
  for (size_t i = 0; i < step.alpha.size(); ++i) {
    out << static_cast<int64_t>(i) * stride << ',' << step.alpha[i] << ',' << step.summed[i]
        << ',' << step.normalized[i] << ',' << (step.normalized[i] > cfg.threshold ? 1 : 0)
        << '\n';
  }
}

}  // namespace ran
