// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ran/decoder.hpp"

namespace ran {

struct LocalizationConfig {
  double sampling_rate = 50.0;  // f, Hz
  int pool_size = 2;            // p
  int pool_count = 3;           // s
  double mean_duration = 5.0;   // d, seconds
  double threshold = 0.7;
  void validate() const;
  int64_t feature_stride() const;  // p^s
};

/// Maximum sliding-window width w = f / p^s * d, rounded up to the next even
/// integer, never below 2.
int window_size(const LocalizationConfig& cfg);

/// Largest even w <= n when the computed width exceeds the score length;
/// appends a note to *warning when clamping happens.
int clamp_window(int w, int64_t n, std::string* warning = nullptr);

/// Sliding sum s_i = sum alpha_j over j in [max(1, i-w/2), min(n, i+w/2)]
/// (1-based), via prefix sums. w must be even and in [2, n].
std::vector<double> aggregate_scores(const std::vector<double>& alpha, int w);

/// Min-max normalization to [0, 1]; a constant input maps to all zeros.
std::vector<double> normalize_scores(const std::vector<double>& s);

/// Contiguous run of feature positions whose normalized score clears the
/// threshold, mapped back to raw-sample coordinates.
struct ActivityRegion {
  int label = 0;               // class token
  int64_t feature_begin = 0;   // inclusive feature indices
  int64_t feature_end = 0;
  int64_t raw_begin = 0;       // [raw_begin, raw_end) in window samples
  int64_t raw_end = 0;
  double peak = 0.0;
};

struct StepLocalization {
  int label = 0;  // class token of the decoded step
  std::vector<double> alpha, summed, normalized;
  std::vector<ActivityRegion> regions;
};

struct LocalizationResult {
  std::vector<StepLocalization> steps;
  int window_width = 0;
};

/// Scores and regions for every decoded activity step (specials skipped).
LocalizationResult localize(const DecodeResult& decoded, const LabelVocabulary& vocab,
                            const LocalizationConfig& cfg);

double interval_iou(int64_t a_begin, int64_t a_end, int64_t b_begin, int64_t b_end);

/// IoU of a predicted region against a truth span, both in raw coordinates.
double localization_iou(const ActivityRegion& region, int64_t truth_begin, int64_t truth_end);

/// JSON export: {sample_id, steps:[{label, s_bar:[...], regions:[...]}]}.
std::string localization_json(const std::string& sample_id, const LocalizationResult& result,
                              const LabelVocabulary& vocab);

/// Plot-ready CSV for one step: raw_index, alpha, s, s_bar, threshold_flag.
void write_plot_csv(std::ostream& out, const StepLocalization& step,
                    const LocalizationConfig& cfg);

}  // namespace ran
