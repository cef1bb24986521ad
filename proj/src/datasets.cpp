// SPDX-License-Identifier: Apache-2.0
#include "ran/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "ran/rng.hpp"

namespace ran {

std::vector<WeakSample> segment(const SensorSequence& seq, const SegmentConfig& cfg) {
  if (cfg.window_length < 1 || cfg.stride < 1)
    throw std::invalid_argument("segment: window_length and stride must be positive");
  const int64_t time = seq.samples.dim(0);
  const int64_t mods = seq.samples.dim(1);
  std::vector<WeakSample> out;
  if (cfg.window_length > time) {
    std::cerr << "warning: segment: window length " << cfg.window_length
              << " exceeds sequence length " << time << "; no samples produced\n";
    return out;
  }
  for (int64_t off = 0; off + cfg.window_length <= time; off += cfg.stride) {
    WeakSample s;
    s.subject_id = seq.subject_id;
    s.origin_offset = off;
    s.window = Tensor({cfg.window_length, mods});
    std::copy_n(seq.samples.data.data() + off * mods, cfg.window_length * mods,
                s.window.data.data());
    const int64_t lo = off, hi = off + cfg.window_length;
    for (const ActivitySpan& a : seq.annotations) {
      const int64_t ov = std::min(hi, a.end) - std::max(lo, a.begin);
      if (ov <= 0 || a.length() <= 0) continue;
      if (static_cast<double>(ov) / static_cast<double>(a.length()) >= cfg.overlap_min) {
        s.weak_label.push_back(a.class_index);
        s.truth_spans.push_back(ActivitySpan{a.class_index, std::max<int64_t>(0, a.begin - lo),
                                             std::min<int64_t>(cfg.window_length, a.end - lo)});
      }
    }
    if (s.weak_label.empty()) {
      if (cfg.empty_policy == EmptyWindowPolicy::kDrop) continue;
      s.weak_label.push_back(cfg.null_class);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void SyntheticSpec::validate() const {
  if (classes.empty()) throw std::invalid_argument("synthetic: no classes");
  if (orders.empty()) throw std::invalid_argument("synthetic: no activity orders");
  for (const auto& o : orders)
    for (int c : o)
      if (c < 0 || c >= static_cast<int>(classes.size()))
        throw std::invalid_argument("synthetic: order references unknown class");
  if (sampling_rate <= 0 || activity_duration <= 0)
    throw std::invalid_argument("synthetic: rate and duration must be positive");
  if (gap_min < 0 || gap_max < gap_min)
    throw std::invalid_argument("synthetic: bad gap range");
  if (window_length < static_cast<int64_t>(sampling_rate * activity_duration))
    throw std::invalid_argument("synthetic: window shorter than one activity");
  if (subjects < 1 || cycles_per_order < 1 || passes < 1)
    throw std::invalid_argument("synthetic: counts must be positive");
}

SyntheticSpec SyntheticSpec::default_swlm() {
  SyntheticSpec s;
  s.classes = {
      ClassWaveform{1.0, 1.2, {0.9, 0.3, 0.1}},
      ClassWaveform{1.0, 2.3, {0.2, 0.9, 0.2}},
      ClassWaveform{1.0, 3.6, {0.1, 0.3, 0.9}},
  };
  s.orders = {{0, 1, 2}, {2, 1, 0}};
  return s;
}

std::vector<SensorSequence> generate_synthetic(const SyntheticSpec& spec, uint64_t seed) {
  spec.validate();
  Rng root(seed);
  std::vector<SensorSequence> out;
  const int64_t act_len = static_cast<int64_t>(spec.sampling_rate * spec.activity_duration);
  for (int subj = 0; subj < spec.subjects; ++subj) {
    Rng rng = root.fork();
    SensorSequence seq;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s%02d", subj + 1);
    seq.subject_id = buf;
    seq.sampling_rate = spec.sampling_rate;

    // Per-subject jitter on amplitude, frequency and phase.
    std::vector<double> amp(spec.classes.size()), freq(spec.classes.size()),
        phase(spec.classes.size());
    for (size_t c = 0; c < spec.classes.size(); ++c) {
      amp[c] = spec.classes[c].amplitude *
               (1.0 + rng.uniform(-spec.amplitude_jitter, spec.amplitude_jitter));
      freq[c] = spec.classes[c].frequency *
                (1.0 + rng.uniform(-spec.frequency_jitter, spec.frequency_jitter));
      phase[c] = rng.uniform(0.0, 6.283185307179586);
    }

    std::vector<double> samples;  // interleaved [time, 3]
    auto push_gap = [&](double seconds) {
      const int64_t n = static_cast<int64_t>(seconds * spec.sampling_rate);
      for (int64_t i = 0; i < n; ++i)
        for (int a = 0; a < 3; ++a) samples.push_back(rng.normal(0.0, spec.noise_std));
    };
    auto push_activity = [&](int c) {
      const int64_t begin = static_cast<int64_t>(samples.size()) / 3;
      const ClassWaveform& w = spec.classes[static_cast<size_t>(c)];
      for (int64_t i = 0; i < act_len; ++i) {
        const double t = static_cast<double>(i) / spec.sampling_rate;
        // Smooth quarter-second ramp at both edges.
        const double ramp_len = 0.25 * spec.sampling_rate;
        double env = 1.0;
        if (static_cast<double>(i) < ramp_len) env = static_cast<double>(i) / ramp_len;
        const double tail = static_cast<double>(act_len - 1 - i);
        if (tail < ramp_len) env = std::min(env, tail / ramp_len);
        const double base =
            amp[static_cast<size_t>(c)] *
            std::sin(6.283185307179586 * freq[static_cast<size_t>(c)] * t +
                     phase[static_cast<size_t>(c)]);
        for (int a = 0; a < 3; ++a)
          samples.push_back(env * base * w.axis_mix[static_cast<size_t>(a)] +
                            rng.normal(0.0, spec.noise_std));
      }
      seq.annotations.push_back(ActivitySpan{c, begin, begin + act_len});
    };

    for (int pass = 0; pass < spec.passes; ++pass) {
      for (const auto& order : spec.orders) {
        for (int cyc = 0; cyc < spec.cycles_per_order; ++cyc) {
          for (int c : order) {
            push_gap(rng.uniform(spec.gap_min, spec.gap_max));
            push_activity(c);
          }
        }
        // Long rest between recordings keeps windows from straddling them.
        push_gap(2.0 * static_cast<double>(spec.window_length) / spec.sampling_rate);
      }
    }
    const int64_t time = static_cast<int64_t>(samples.size()) / 3;
    seq.samples = Tensor({time, 3}, std::move(samples));
    out.push_back(std::move(seq));
  }
  return out;
}

void write_sequences_csv(const std::string& data_path, const std::string& annotations_path,
                         const std::vector<SensorSequence>& sequences,
                         const std::vector<std::string>& class_names) {
  std::ofstream data(data_path);
  if (!data) throw std::runtime_error("cannot open for writing: " + data_path);
  const double rate = sequences.empty() ? 50.0 : sequences[0].sampling_rate;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", rate);
  data << "# sampling_rate_hz=" << buf << "\n";
  data << "subject,timestamp,ax,ay,az\n";
  for (const SensorSequence& seq : sequences) {
    const int64_t time = seq.samples.dim(0);
    const int64_t mods = seq.samples.dim(1);
    if (mods != 3) throw std::invalid_argument("write_sequences_csv: expects 3 modalities");
    for (int64_t i = 0; i < time; ++i) {
      std::snprintf(buf, sizeof(buf), "%.6f", static_cast<double>(i) / seq.sampling_rate);
      data << seq.subject_id << ',' << buf;
      for (int64_t a = 0; a < mods; ++a) {
        std::snprintf(buf, sizeof(buf), "%.17g", seq.samples.at(i, a));
        data << ',' << buf;
      }
      data << '\n';
    }
  }
  if (!data.good()) throw std::runtime_error("write failed: " + data_path);

  std::ofstream ann(annotations_path);
  if (!ann) throw std::runtime_error("cannot open for writing: " + annotations_path);
  ann << "subject,class,start_index,end_index\n";
  for (const SensorSequence& seq : sequences)
    for (const ActivitySpan& a : seq.annotations)
      ann << seq.subject_id << ',' << class_names.at(static_cast<size_t>(a.class_index)) << ','
          << a.begin << ',' << a.end << '\n';
  if (!ann.good()) throw std::runtime_error("write failed: " + annotations_path);
}

namespace {
std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& path, int64_t line_no) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed number '" + s +
                             "'");
  }
}
}  // namespace

std::vector<SensorSequence> load_csv(const std::string& data_path,
                                     const std::string& annotations_path,
                                     const std::vector<std::string>& class_names) {
  std::ifstream data(data_path);
  if (!data) throw std::runtime_error("cannot open: " + data_path);
  std::string line;
  int64_t line_no = 0;

  // Metadata line.
  double rate = 0.0;
  if (!std::getline(data, line)) throw std::runtime_error(data_path + ": empty file");
  ++line_no;
  if (line.rfind("# sampling_rate_hz=", 0) != 0)
    throw std::runtime_error(data_path + ":1: missing '# sampling_rate_hz=' metadata line");
  rate = parse_double(line.substr(19), data_path, line_no);
  if (rate <= 0) throw std::runtime_error(data_path + ":1: sampling rate must be positive");

  // Column header.
  if (!std::getline(data, line))
    throw std::runtime_error(data_path + ": missing column header");
  ++line_no;
  std::vector<std::string> header = split_fields(line);
  if (header.size() < 5 || header[0] != "subject" || header[1] != "timestamp")
    throw std::runtime_error(data_path + ":2: schema error, expected header "
                             "'subject,timestamp,ax,ay,az[,...]'");
  const size_t channels = header.size() - 2;

  std::map<std::string, std::vector<double>> rows;  // subject -> interleaved samples
  std::map<std::string, double> last_ts;
  std::vector<std::string> order;
  while (std::getline(data, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f = split_fields(line);
    if (f.size() != header.size())
      throw std::runtime_error(data_path + ":" + std::to_string(line_no) +
                               ": malformed row, expected " + std::to_string(header.size()) +
                               " fields, got " + std::to_string(f.size()));
    const std::string& subj = f[0];
    const double ts = parse_double(f[1], data_path, line_no);
    auto it = rows.find(subj);
    if (it == rows.end()) {
      order.push_back(subj);
      it = rows.emplace(subj, std::vector<double>{}).first;
      last_ts[subj] = ts;
    } else if (ts < last_ts[subj]) {
      throw std::runtime_error(data_path + ":" + std::to_string(line_no) +
                               ": timestamps must be monotone per subject");
    }
    last_ts[subj] = ts;
    for (size_t c = 0; c < channels; ++c)
      it->second.push_back(parse_double(f[2 + c], data_path, line_no));
  }
  if (rows.empty())
    std::cerr << "warning: " << data_path << ": no data rows, returning empty list\n";

  std::vector<SensorSequence> out;
  for (const std::string& subj : order) {
    SensorSequence seq;
    seq.subject_id = subj;
    seq.sampling_rate = rate;
    std::vector<double>& v = rows[subj];
    const int64_t time = static_cast<int64_t>(v.size() / channels);
    seq.samples = Tensor({time, static_cast<int64_t>(channels)}, std::move(v));
    out.push_back(std::move(seq));
  }

  if (!annotations_path.empty()) {
    std::ifstream ann(annotations_path);
    if (!ann) throw std::runtime_error("cannot open: " + annotations_path);
    int64_t ann_line = 0;
    if (!std::getline(ann, line))
      throw std::runtime_error(annotations_path + ": empty file");
    ++ann_line;
    if (split_fields(line) != std::vector<std::string>{"subject", "class", "start_index",
                                                       "end_index"})
      throw std::runtime_error(annotations_path +
                               ":1: schema error, expected 'subject,class,start_index,end_index'");
    while (std::getline(ann, line)) {
      ++ann_line;
      if (line.empty()) continue;
      std::vector<std::string> f = split_fields(line);
      if (f.size() != 4)
        throw std::runtime_error(annotations_path + ":" + std::to_string(ann_line) +
                                 ": malformed row");
      auto cls = std::find(class_names.begin(), class_names.end(), f[1]);
      if (cls == class_names.end())
        throw std::runtime_error(annotations_path + ":" + std::to_string(ann_line) +
                                 ": unknown class '" + f[1] + "'");
      ActivitySpan span;
      span.class_index = static_cast<int>(cls - class_names.begin());
      span.begin = static_cast<int64_t>(parse_double(f[2], annotations_path, ann_line));
      span.end = static_cast<int64_t>(parse_double(f[3], annotations_path, ann_line));
      for (SensorSequence& seq : out)
        if (seq.subject_id == f[0]) {
          seq.annotations.push_back(span);
          break;
        }
    }
    for (SensorSequence& seq : out)
      std::sort(seq.annotations.begin(), seq.annotations.end(),
                [](const ActivitySpan& a, const ActivitySpan& b) { return a.begin < b.begin; });
  }
  return out;
}

std::vector<int> encode_label_sequence(const std::vector<int>& weak_label,
                                       const LabelVocabulary& vocab, int max_steps) {
  if (static_cast<int>(weak_label.size()) > max_steps - 2)
    throw std::invalid_argument("encode_label_sequence: too many activities for the step budget");
  std::vector<int> out;
  out.reserve(static_cast<size_t>(max_steps));
  out.push_back(LabelVocabulary::kStart);
  for (int c : weak_label) {
    const int tok = vocab.class_token(c);
    if (tok < 3 || tok >= vocab.size())
      throw std::invalid_argument("encode_label_sequence: class index out of range");
    out.push_back(tok);
  }
  out.push_back(LabelVocabulary::kEnd);
  while (static_cast<int>(out.size()) < max_steps) out.push_back(LabelVocabulary::kPad);
  return out;
}

std::pair<std::set<std::string>, std::set<std::string>> default_subject_split(
    const std::vector<SensorSequence>& sequences, int train_count) {
  std::set<std::string> all;
  for (const SensorSequence& s : sequences) all.insert(s.subject_id);
  std::set<std::string> train, test;
  int i = 0;
  for (const std::string& s : all) {
    if (i++ < train_count)
      train.insert(s);
    else
      test.insert(s);
  }
  return {train, test};
}

}  // namespace ran
