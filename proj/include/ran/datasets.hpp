// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ran/decoder.hpp"

namespace ran {

/// Half-open span [begin, end) of one activity instance in raw-sample
/// coordinates.
struct ActivitySpan {
  int class_index = 0;
  int64_t begin = 0;
  int64_t end = 0;
  int64_t length() const { return end - begin; }
};

struct SensorSequence {
  Tensor samples;  // [time, modalities]
  double sampling_rate = 50.0;
  std::string subject_id;
  std::vector<ActivitySpan> annotations;  // sorted, non-overlapping
};

/// One fixed-length window plus its sequential weak label. Truth spans are
/// window-relative and carried for evaluation only; training never sees them.
struct WeakSample {
  Tensor window;
  std::vector<int> weak_label;  // class indices, temporal order
  std::vector<ActivitySpan> truth_spans;
  std::string subject_id;
  int64_t origin_offset = 0;
};

enum class EmptyWindowPolicy { kDrop, kNullClass };

struct SegmentConfig {
  int64_t window_length = 650;
  int64_t stride = 325;
  double overlap_min = 0.5;  // fraction of the activity's own length
  EmptyWindowPolicy empty_policy = EmptyWindowPolicy::kDrop;
  int null_class = -1;  // class index standing in for background windows
};

/// Sliding windows at offsets 0, stride, 2*stride, ...; an activity enters a
/// window's weak label when at least overlap_min of its own length lies
/// inside. Returns empty (with a warning) when the sequence is too short.
std::vector<WeakSample> segment(const SensorSequence& seq, const SegmentConfig& cfg);

/// One synthetic activity class: a sinusoid at a class-specific frequency
/// mixed across the three axes.
struct ClassWaveform {
  double amplitude = 1.0;
  double frequency = 2.0;  // Hz
  std::array<double, 3> axis_mix{1.0, 0.0, 0.0};
};

/// Mirrors the wearable collection protocol: subjects repeat the configured
/// activity orders in cycles, with low-noise gaps between activities.
struct SyntheticSpec {
  std::vector<ClassWaveform> classes;
  std::vector<std::vector<int>> orders;  // e.g. {{0,1,2},{2,1,0}}
  double activity_duration = 5.0;        // seconds
  double gap_min = 2.0, gap_max = 3.0;   // seconds
  double noise_std = 0.1;
  double sampling_rate = 50.0;
  int64_t window_length = 650;
  int subjects = 10;
  int cycles_per_order = 6;  // repetitions of each order per pass
  int passes = 2;            // alternating passes over the orders
  double amplitude_jitter = 0.15;  // per-subject scale spread
  double frequency_jitter = 0.05;
  void validate() const;

  static SyntheticSpec default_swlm();
};

std::vector<SensorSequence> generate_synthetic(const SyntheticSpec& spec, uint64_t seed);

/// Subject-wise partition; the sets must be disjoint. Items whose subject is
/// in neither set are excluded.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_by_subject(const std::vector<T>& data,
                                                           const std::set<std::string>& train,
                                                           const std::set<std::string>& test) {
  for (const std::string& s : train)
    if (test.count(s)) throw std::invalid_argument("split_by_subject: overlapping subject sets");
  std::pair<std::vector<T>, std::vector<T>> out;
  for (const T& item : data) {
    if (train.count(item.subject_id))
      out.first.push_back(item);
    else if (test.count(item.subject_id))
      out.second.push_back(item);
  }
  return out;
}

/// CSV schema (documented in the README):
///   line 1: "# sampling_rate_hz=<rate>"
///   line 2: header "subject,timestamp,ax,ay,az[,...]"
///   data:   one row per sample, monotone timestamps per subject.
/// Companion annotation CSV: "subject,class,start_index,end_index".
void write_sequences_csv(const std::string& data_path, const std::string& annotations_path,
                         const std::vector<SensorSequence>& sequences,
                         const std::vector<std::string>& class_names);

std::vector<SensorSequence> load_csv(const std::string& data_path,
                                     const std::string& annotations_path,
                                     const std::vector<std::string>& class_names);

/// [START, classes.., END, PAD..] of length exactly max_steps; rejects weak
/// labels that cannot fit.
std::vector<int> encode_label_sequence(const std::vector<int>& weak_label,
                                       const LabelVocabulary& vocab, int max_steps);

/// First n subjects (sorted) for training, the rest for test.
std::pair<std::set<std::string>, std::set<std::string>> default_subject_split(
    const std::vector<SensorSequence>& sequences, int train_count);

}  // namespace ran
