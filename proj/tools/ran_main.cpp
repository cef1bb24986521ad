// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: gen-data, train, eval, localize, inspect-attention.
// Exit codes: 0 success, 1 internal failure, 2 invalid usage or input.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ran/checkpoint.hpp"
#include "ran/config.hpp"
#include "ran/evaluation.hpp"

namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ran::SyntheticSpec synthetic_from_config(const ran::KeyValueConfig& cfg) {
  ran::SyntheticSpec spec = ran::SyntheticSpec::default_swlm();
  spec.subjects = static_cast<int>(cfg.get_int("subjects", spec.subjects));
  spec.sampling_rate = cfg.get_double("sampling_rate", spec.sampling_rate);
  spec.window_length = cfg.get_int("window_length", spec.window_length);
  spec.activity_duration = cfg.get_double("activity_duration", spec.activity_duration);
  spec.gap_min = cfg.get_double("gap_min", spec.gap_min);
  spec.gap_max = cfg.get_double("gap_max", spec.gap_max);
  spec.noise_std = cfg.get_double("noise_std", spec.noise_std);
  spec.cycles_per_order = static_cast<int>(cfg.get_int("cycles_per_order", spec.cycles_per_order));
  spec.passes = static_cast<int>(cfg.get_int("passes", spec.passes));
  spec.amplitude_jitter = cfg.get_double("amplitude_jitter", spec.amplitude_jitter);
  spec.frequency_jitter = cfg.get_double("frequency_jitter", spec.frequency_jitter);
  return spec;
}

ran::TrainConfig train_from_config(const ran::KeyValueConfig& cfg) {
  ran::TrainConfig tc;
  tc.learning_rate = cfg.get_double("learning_rate", tc.learning_rate);
  tc.batch_size = static_cast<int>(cfg.get_int("batch_size", tc.batch_size));
  tc.epochs = static_cast<int>(cfg.get_int("epochs", tc.epochs));
  tc.tau = cfg.get_double("tau", tc.tau);
  tc.reg_weight = cfg.get_double("reg_weight", tc.reg_weight);
  tc.seed = static_cast<uint64_t>(cfg.get_int("seed", static_cast<int64_t>(tc.seed)));
  tc.max_steps = static_cast<int>(cfg.get_int("max_steps", tc.max_steps));
  tc.clip_norm = cfg.get_double("clip_norm", tc.clip_norm);
  return tc;
}

ran::SegmentConfig segment_from_config(const ran::KeyValueConfig& cfg) {
  ran::SegmentConfig sc;
  sc.window_length = cfg.get_int("window_length", sc.window_length);
  sc.stride = cfg.get_int("stride", sc.window_length / 2);
  sc.overlap_min = cfg.get_double("overlap_min", sc.overlap_min);
  if (cfg.get_bool("keep_empty_windows", false)) {
    sc.empty_policy = ran::EmptyWindowPolicy::kNullClass;
    sc.null_class = static_cast<int>(cfg.get_int("null_class", 0));
  }
  return sc;
}

std::vector<std::string> classes_from_config(const ran::KeyValueConfig& cfg) {
  std::vector<std::string> names;
  std::istringstream ss(cfg.get_string("classes", "A,B,C"));
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) names.push_back(item);
  if (names.empty()) throw UsageError("config: empty class list");
  return names;
}

struct LoadedData {
  std::vector<ran::SensorSequence> sequences;
  std::vector<std::string> class_names;
};

LoadedData load_data_dir(const std::string& dir, const ran::KeyValueConfig& cfg) {
  const std::string data_csv = dir + "/data.csv";
  const std::string ann_csv = dir + "/annotations.csv";
  if (!std::filesystem::exists(data_csv))
    throw UsageError("data directory missing data.csv: " + dir);
  LoadedData out;
  out.class_names = classes_from_config(cfg);
  out.sequences = ran::load_csv(
      data_csv, std::filesystem::exists(ann_csv) ? ann_csv : std::string{}, out.class_names);
  return out;
}

int cmd_gen_data(const std::string& spec_path, const std::string& out_dir, uint64_t seed) {
  ran::KeyValueConfig cfg =
      spec_path.empty() ? ran::KeyValueConfig{} : ran::KeyValueConfig::parse_file(spec_path);
  ran::SyntheticSpec spec = synthetic_from_config(cfg);
  std::vector<std::string> names = classes_from_config(cfg);
  if (names.size() != spec.classes.size())
    throw UsageError("gen-data: class list and waveform count differ");
  std::filesystem::create_directories(out_dir);
  std::vector<ran::SensorSequence> sequences = ran::generate_synthetic(spec, seed);
  ran::write_sequences_csv(out_dir + "/data.csv", out_dir + "/annotations.csv", sequences, names);
  json meta{{"subjects", spec.subjects},
            {"classes", names},
            {"sampling_rate", spec.sampling_rate},
            {"seed", seed}};
  std::ofstream(out_dir + "/generation.json") << meta.dump(2) << "\n";
  std::cout << "wrote " << sequences.size() << " subject sequences to " << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& data_dir, const std::string& case_id,
              const std::string& config_path, const std::string& out_ckpt,
              const std::string& log_path, int64_t seed_flag) {
  ran::KeyValueConfig cfg =
      config_path.empty() ? ran::KeyValueConfig{} : ran::KeyValueConfig::parse_file(config_path);
  ran::TrainConfig tc = train_from_config(cfg);
  if (seed_flag >= 0) tc.seed = static_cast<uint64_t>(seed_flag);
  ran::SegmentConfig sc = segment_from_config(cfg);

  LoadedData data = load_data_dir(data_dir, cfg);
  const int train_subject_count =
      static_cast<int>(cfg.get_int("train_subjects", (7 * static_cast<int64_t>(
          std::max<size_t>(1, data.sequences.size())) + 9) / 10));
  auto [train_subjects, test_subjects] =
      ran::default_subject_split(data.sequences, train_subject_count);
  auto [train_seqs, test_seqs] =
      ran::split_by_subject(data.sequences, train_subjects, test_subjects);

  std::vector<ran::WeakSample> train_pool, test_pool;
  for (const auto& s : train_seqs) {
    auto w = ran::segment(s, sc);
    train_pool.insert(train_pool.end(), w.begin(), w.end());
  }
  for (const auto& s : test_seqs) {
    auto w = ran::segment(s, sc);
    test_pool.insert(test_pool.end(), w.begin(), w.end());
  }

  ran::CaseRecipe recipe = ran::case_recipe(case_id);
  ran::Dataset dataset = ran::build_case_dataset(
      recipe, train_pool, test_pool,
      static_cast<int>(cfg.get_int("per_type_train_cap", 0)),
      static_cast<int>(cfg.get_int("per_type_test_cap", 0)), tc.seed);
  if (dataset.train.empty()) throw UsageError("train: no training samples for case " + case_id);

  ran::LabelVocabulary vocab = ran::LabelVocabulary::for_classes(data.class_names);
  ran::EncoderConfig ec;
  ec.channels_per_stage = cfg.get_int_list("channels_per_stage", ec.channels_per_stage);
  ec.kernel_size = static_cast<int>(cfg.get_int("kernel_size", ec.kernel_size));
  ec.pool_size = static_cast<int>(cfg.get_int("pool_size", ec.pool_size));
  ec.pool_count = static_cast<int>(cfg.get_int("pool_count",
                                               static_cast<int64_t>(ec.channels_per_stage.size()) - 1));
  ran::RanModel model = ran::RanModel::init(
      vocab, 3, ec, static_cast<int>(cfg.get_int("hidden_size", 128)),
      static_cast<int>(cfg.get_int("attention_width", 128)),
      static_cast<int>(cfg.get_int("embedding_size", 32)), tc.max_steps, tc.seed ^ 0x1417ULL);

  std::ofstream log;
  std::ostream* log_stream = nullptr;
  if (!log_path.empty()) {
    log.open(log_path);
    if (!log) throw UsageError("cannot open log for writing: " + log_path);
    log_stream = &log;
  } else {
    log_stream = &std::cout;
  }

  json resolved{{"command", "train"},
                {"case", case_id},
                {"learning_rate", tc.learning_rate},
                {"batch_size", tc.batch_size},
                {"epochs", tc.epochs},
                {"tau", tc.tau},
                {"reg_weight", tc.reg_weight},
                {"seed", tc.seed},
                {"max_steps", tc.max_steps},
                {"clip_norm", tc.clip_norm},
                {"window_length", sc.window_length},
                {"stride", sc.stride},
                {"train_samples", dataset.train.size()},
                {"test_samples", dataset.test.size()}};
  (*log_stream) << json{{"resolved_config", resolved}}.dump() << "\n";

  ran::TrainResult result = ran::train(model, dataset, tc, log_stream);

  json extra{{"resolved_config", resolved},
             {"data",
              {{"sampling_rate", data.sequences.empty() ? 50.0 : data.sequences[0].sampling_rate},
               {"window_length", sc.window_length},
               {"stride", sc.stride},
               {"mean_duration", cfg.get_double("activity_duration", 5.0)}}},
             {"created", {{"tool", "ran"}, {"version", "0.1.0"}, {"seed", tc.seed}}}};
  if (!result.log.empty()) {
    const auto& last = result.log.back();
    extra["metrics"] = {{"final_train_loss", last.train_loss},
                        {"final_train_acc", last.train_acc},
                        {"final_test_acc", last.test_acc}};
  }
  ran::save_ran_checkpoint(out_ckpt, model, extra);
  std::cerr << "checkpoint written to " << out_ckpt << "\n";
  return 0;
}

ran::LocalizationConfig localization_from_metadata(const json& metadata, double threshold) {
  ran::LocalizationConfig lc;
  lc.threshold = threshold;
  const json& model = metadata.at("model");
  lc.pool_size = model.at("pool_size").get<int>();
  lc.pool_count = model.at("pool_count").get<int>();
  if (metadata.contains("extra") && metadata["extra"].contains("data")) {
    const json& d = metadata["extra"]["data"];
    lc.sampling_rate = d.value("sampling_rate", 50.0);
    lc.mean_duration = d.value("mean_duration", 5.0);
  }
  return lc;
}

std::vector<ran::WeakSample> windows_from_input(const json& metadata, const std::string& input_csv,
                                                const ran::RanModel& model) {
  std::vector<std::string> classes(model.vocab.tokens.begin() + 3, model.vocab.tokens.end());
  std::vector<ran::SensorSequence> sequences = ran::load_csv(input_csv, "", classes);
  ran::SegmentConfig sc;
  if (metadata.contains("extra") && metadata["extra"].contains("data")) {
    const json& d = metadata["extra"]["data"];
    sc.window_length = d.value("window_length", static_cast<int64_t>(650));
    sc.stride = d.value("stride", sc.window_length / 2);
  }
  sc.empty_policy = ran::EmptyWindowPolicy::kNullClass;  // keep every window
  sc.null_class = 0;
  std::vector<ran::WeakSample> windows;
  for (const auto& s : sequences) {
    auto w = ran::segment(s, sc);
    windows.insert(windows.end(), w.begin(), w.end());
  }
  return windows;
}

int cmd_localize(const std::string& ckpt, const std::string& input_csv, const std::string& out_json,
                 double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw UsageError("localize: threshold must be in (0,1)");
  json metadata;
  ran::RanModel model = ran::load_ran_checkpoint(ckpt, &metadata);
  ran::LocalizationConfig lc = localization_from_metadata(metadata, threshold);
  std::vector<ran::WeakSample> windows = windows_from_input(metadata, input_csv, model);

  json all = json::array();
  const std::string stem =
      (std::filesystem::path(out_json).parent_path() /
       std::filesystem::path(out_json).stem()).string();
  for (size_t i = 0; i < windows.size(); ++i) {
    const std::string sample_id =
        windows[i].subject_id + "_w" + std::to_string(windows[i].origin_offset);
    ran::DecodeResult decoded = ran::decode_window(model, windows[i].window);
    ran::LocalizationResult loc = ran::localize(decoded, model.vocab, lc);
    all.push_back(json::parse(ran::localization_json(sample_id, loc, model.vocab)));
    for (size_t st = 0; st < loc.steps.size(); ++st) {
      std::ofstream csv(stem + "_" + sample_id + "_step" + std::to_string(st + 1) + ".csv");
      ran::write_plot_csv(csv, loc.steps[st], lc);
    }
  }
  std::ofstream out(out_json);
  if (!out) throw UsageError("cannot open for writing: " + out_json);
  out << all.dump(2) << "\n";
  std::cout << "localized " << windows.size() << " windows\n";
  return 0;
}

int cmd_inspect_attention(const std::string& ckpt, const std::string& input_csv,
                          const std::string& out_json) {
  json metadata;
  ran::RanModel model = ran::load_ran_checkpoint(ckpt, &metadata);
  std::vector<ran::WeakSample> windows = windows_from_input(metadata, input_csv, model);
  json all = json::array();
  for (size_t i = 0; i < windows.size(); ++i) {
    const std::string sample_id =
        windows[i].subject_id + "_w" + std::to_string(windows[i].origin_offset);
    ran::DecodeResult decoded = ran::decode_window(model, windows[i].window);
    std::vector<std::string> labels;
    for (const auto& st : decoded.steps) labels.push_back(model.vocab.name(st.token));
    all.push_back(json::parse(ran::attention_map_json(sample_id, labels, decoded.attention)));
  }
  std::ofstream out(out_json);
  if (!out) throw UsageError("cannot open for writing: " + out_json);
  out << all.dump(2) << "\n";
  std::cout << "inspected " << windows.size() << " windows\n";
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data_dir, const std::string& case_id,
             const std::string& split, const std::string& config_path) {
  ran::KeyValueConfig cfg =
      config_path.empty() ? ran::KeyValueConfig{} : ran::KeyValueConfig::parse_file(config_path);
  json metadata;
  ran::RanModel model = ran::load_ran_checkpoint(ckpt, &metadata);
  ran::KeyValueConfig data_cfg = cfg;
  LoadedData data = load_data_dir(data_dir, data_cfg);

  ran::SegmentConfig sc = segment_from_config(cfg);
  if (metadata.contains("extra") && metadata["extra"].contains("data")) {
    const json& d = metadata["extra"]["data"];
    sc.window_length = d.value("window_length", sc.window_length);
    sc.stride = d.value("stride", sc.stride);
  }
  const int train_subject_count = static_cast<int>(
      cfg.get_int("train_subjects",
                  (7 * static_cast<int64_t>(std::max<size_t>(1, data.sequences.size())) + 9) / 10));
  auto [train_subjects, test_subjects] =
      ran::default_subject_split(data.sequences, train_subject_count);
  auto [train_seqs, test_seqs] =
      ran::split_by_subject(data.sequences, train_subjects, test_subjects);
  const auto& seqs = split == "train" ? train_seqs : test_seqs;

  std::vector<ran::WeakSample> pool;
  for (const auto& s : seqs) {
    auto w = ran::segment(s, sc);
    pool.insert(pool.end(), w.begin(), w.end());
  }
  ran::CaseRecipe recipe = ran::case_recipe(case_id);
  const auto& types = split == "train" ? recipe.train_types : recipe.test_types;
  std::vector<ran::WeakSample> selected;
  for (const auto& s : pool)
    for (const auto& t : types)
      if (s.weak_label == t) {
        selected.push_back(s);
        break;
      }
  if (selected.empty()) throw UsageError("eval: no samples for case " + case_id);

  ran::EvalMetrics m = ran::evaluate(model, selected);
  json out{{"case", case_id},
           {"split", split},
           {"samples", m.samples},
           {"sequence_accuracy", m.sequence_accuracy},
           {"token_accuracy", m.token_accuracy},
           {"paper_reference", ran::paper_reference_table()}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recurrent attention network for sequentially weak-labeled sensor windows"};
  app.require_subcommand(1);

  std::string spec_path, out_dir, data_dir, config_path, ckpt, input_csv, out_json, log_path;
  std::string case_id = "1", split = "test";
  int64_t seed = 7;
  double threshold = 0.7;

  CLI::App* gen = app.add_subcommand("gen-data", "Generate synthetic sensor CSVs");
  gen->add_option("--spec", spec_path, "Synthetic spec (key = value file)");
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--seed", seed, "Generator seed");

  CLI::App* train = app.add_subcommand("train", "Train on generated or loaded data");
  train->add_option("--data", data_dir, "Data directory (data.csv + annotations.csv)")->required();
  train->add_option("--case", case_id, "Experiment case: 1..5, strict, weak, unimib");
  train->add_option("--config", config_path, "Key-value config file");
  train->add_option("--out", ckpt, "Checkpoint output path")->required();
  train->add_option("--log", log_path, "Line-delimited JSON log (default: stdout)");
  int64_t train_seed = -1;
  train->add_option("--seed", train_seed, "Override config seed");

  CLI::App* loc_cmd = app.add_subcommand("localize", "Temporal localization from a checkpoint");
  loc_cmd->add_option("--ckpt", ckpt, "Checkpoint path")->required();
  loc_cmd->add_option("--input", input_csv, "Input sensor CSV")->required();
  loc_cmd->add_option("--out", out_json, "Output JSON path")->required();
  loc_cmd->add_option("--threshold", threshold, "Score threshold in (0,1)");

  CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a data directory");
  ev->add_option("--ckpt", ckpt, "Checkpoint path")->required();
  ev->add_option("--data", data_dir, "Data directory")->required();
  ev->add_option("--case", case_id, "Experiment case");
  ev->add_option("--split", split, "train or test")->check(CLI::IsMember({"train", "test"}));
  ev->add_option("--config", config_path, "Key-value config file");

  CLI::App* insp = app.add_subcommand("inspect-attention", "Export per-step attention maps");
  insp->add_option("--ckpt", ckpt, "Checkpoint path")->required();
  insp->add_option("--input", input_csv, "Input sensor CSV")->required();
  insp->add_option("--out", out_json, "Output JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(spec_path, out_dir, static_cast<uint64_t>(seed));
    if (train->parsed())
      return cmd_train(data_dir, case_id, config_path, ckpt, log_path, train_seed);
    if (loc_cmd->parsed()) return cmd_localize(ckpt, input_csv, out_json, threshold);
    if (ev->parsed()) return cmd_eval(ckpt, data_dir, case_id, split, config_path);
    if (insp->parsed()) return cmd_inspect_attention(ckpt, input_csv, out_json);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    // Runtime errors out of this codebase come from input files and
    // configuration, except the optimizer's non-finite-gradient abort.
    const std::string what = e.what();
    std::cerr << "error: " << what << "\n";
    return what.rfind("adam_step:", 0) == 0 ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
