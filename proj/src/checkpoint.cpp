// SPDX-License-Identifier: Apache-2.0
#include "ran/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace ran {

namespace {

constexpr char kMagic[8] = {'R', 'A', 'N', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void write_le(std::ostream& out, T value) {
  unsigned char buf[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<unsigned char>((static_cast<uint64_t>(value) >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

void write_f32_le(std::ostream& out, float value) {
  uint32_t bits;
  std::memcpy(&bits, &value, sizeof(bits));
  write_le<uint32_t>(out, bits);
}

float read_f32_le(std::istream& in) {
  uint32_t bits = read_le<uint32_t>(in);
  float value;
  std::memcpy(&value, &bits, sizeof(value));
  return value;
}

}  // namespace

void save_checkpoint(const std::string& path, const nlohmann::json& metadata,
                     const std::vector<ParamRef>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::string meta = metadata.dump();
  write_le<uint64_t>(out, meta.size());
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  for (const ParamRef& p : params) {
    write_le<uint32_t>(out, static_cast<uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    write_le<uint32_t>(out, static_cast<uint32_t>(p.tensor->rank()));
    for (int64_t d : p.tensor->shape) write_le<uint32_t>(out, static_cast<uint32_t>(d));
    for (double v : p.tensor->data) write_f32_le(out, static_cast<float>(v));
  }
  if (!out.good()) throw std::runtime_error("checkpoint: write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const uint64_t meta_len = read_le<uint64_t>(in);
  std::string meta(meta_len, '\0');
  in.read(meta.data(), static_cast<std::streamsize>(meta_len));
  if (!in) throw std::runtime_error("checkpoint: truncated metadata in " + path);

  LoadedCheckpoint loaded;
  try {
    loaded.metadata = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint: malformed metadata JSON: " + std::string(e.what()));
  }
  while (in.peek() != EOF) {
    const uint32_t name_len = read_le<uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw std::runtime_error("checkpoint: truncated tensor name in " + path);
    const uint32_t rank = read_le<uint32_t>(in);
    std::vector<int64_t> shape;
    for (uint32_t i = 0; i < rank; ++i) shape.push_back(read_le<uint32_t>(in));
    Tensor t(shape);
    for (int64_t i = 0; i < t.numel(); ++i) t.at(i) = static_cast<double>(read_f32_le(in));
    loaded.tensors.emplace_back(std::move(name), std::move(t));
  }
  return loaded;
}

void save_ran_checkpoint(const std::string& path, RanModel& model, const nlohmann::json& extra) {
  nlohmann::json meta;
  std::vector<std::string> classes(model.vocab.tokens.begin() + 3, model.vocab.tokens.end());
  meta["model"] = {{"kind", "ran"},
                   {"classes", classes},
                   {"channels_per_stage", model.encoder_config.channels_per_stage},
                   {"kernel_size", model.encoder_config.kernel_size},
                   {"pool_size", model.encoder_config.pool_size},
                   {"pool_count", model.encoder_config.pool_count},
                   {"modalities", model.modalities},
                   {"hidden_size", model.hidden_size},
                   {"attention_width", model.attention_width},
                   {"embedding_size", model.embedding_size},
                   {"max_steps", model.max_steps}};
  meta["vocab"] = model.vocab.tokens;
  if (!extra.is_null()) meta["extra"] = extra;
  save_checkpoint(path, meta, list_parameters(model));
}

RanModel load_ran_checkpoint(const std::string& path, nlohmann::json* metadata_out) {
  LoadedCheckpoint loaded = load_checkpoint(path);
  const nlohmann::json& md = loaded.metadata.at("model");
  if (md.at("kind").get<std::string>() != "ran")
    throw std::runtime_error("checkpoint: not a RAN model checkpoint");
  EncoderConfig cfg;
  cfg.channels_per_stage = md.at("channels_per_stage").get<std::vector<int>>();
  cfg.kernel_size = md.at("kernel_size").get<int>();
  cfg.pool_size = md.at("pool_size").get<int>();
  cfg.pool_count = md.at("pool_count").get<int>();
  LabelVocabulary vocab =
      LabelVocabulary::for_classes(md.at("classes").get<std::vector<std::string>>());
  RanModel model = RanModel::init(vocab, md.at("modalities").get<int>(), cfg,
                                  md.at("hidden_size").get<int>(),
                                  md.at("attention_width").get<int>(),
                                  md.at("embedding_size").get<int>(),
                                  md.at("max_steps").get<int>(), /*seed=*/0);
  std::map<std::string, Tensor*> slots;
  for (const ParamRef& p : list_parameters(model)) slots[p.name] = p.tensor;
  size_t assigned = 0;
  for (auto& [name, tensor] : loaded.tensors) {
    auto it = slots.find(name);
    if (it == slots.end())
      throw std::runtime_error("checkpoint: unexpected parameter '" + name + "'");
    if (it->second->shape != tensor.shape)
      throw std::runtime_error("checkpoint: shape mismatch for parameter '" + name + "'");
    *it->second = std::move(tensor);
    ++assigned;
  }
  if (assigned != slots.size())
    throw std::runtime_error("checkpoint: missing parameters (got " + std::to_string(assigned) +
                             " of " + std::to_string(slots.size()) + ")");
  if (metadata_out) *metadata_out = std::move(loaded.metadata);
  return model;
}

void quantize_parameters_f32(RanModel& model) {
  for (const ParamRef& p : list_parameters(model))
    for (double& v : p.tensor->data) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace ran
