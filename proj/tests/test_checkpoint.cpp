// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "ran/checkpoint.hpp"

using namespace ran;
using test::rand_tensor;

namespace {

std::string temp_path(const std::string& name) {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("ran_ckpt_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return (dir / (name + "_" + std::to_string(counter++))).string();
}

RanModel small_model(uint64_t seed) {
  LabelVocabulary v = LabelVocabulary::for_classes({"A", "B"});
  EncoderConfig cfg;
  cfg.channels_per_stage = {4, 6};
  cfg.kernel_size = 3;
  cfg.pool_size = 2;
  cfg.pool_count = 1;
  return RanModel::init(v, 2, cfg, 6, 6, 4, 6, seed);
}

}  // namespace

TEST_CASE("round trip restores every parameter within f32 precision") {
  RanModel model = small_model(1);
  const std::string path = temp_path("roundtrip");
  save_ran_checkpoint(path, model, {{"note", "test"}});

  nlohmann::json metadata;
  RanModel loaded = load_ran_checkpoint(path, &metadata);
  CHECK(metadata["extra"]["note"] == "test");
  CHECK(metadata["model"]["kind"] == "ran");

  std::vector<ParamRef> a = list_parameters(model), b = list_parameters(loaded);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    REQUIRE(a[i].tensor->shape == b[i].tensor->shape);
    for (int64_t j = 0; j < a[i].tensor->numel(); ++j) {
      const double original = a[i].tensor->at(j);
      const double restored = b[i].tensor->at(j);
      CHECK(restored == static_cast<double>(static_cast<float>(original)));
    }
  }
}

TEST_CASE("round trip preserves greedy decodes exactly under consistent quantization") {
  RanModel model = small_model(2);
  Rng rng(42);
  std::vector<Tensor> batch;
  for (int i = 0; i < 8; ++i) batch.push_back(rand_tensor(rng, {16, 2}));

  const std::string path = temp_path("decode");
  save_ran_checkpoint(path, model);
  RanModel loaded = load_ran_checkpoint(path);
  quantize_parameters_f32(model);  // apply the same quantization to the live model

  for (const Tensor& window : batch) {
    DecodeResult a = decode_window(model, window);
    DecodeResult b = decode_window(loaded, window);
    REQUIRE(a.steps.size() == b.steps.size());
    for (size_t s = 0; s < a.steps.size(); ++s) {
      CHECK(a.steps[s].token == b.steps[s].token);
      CHECK(a.steps[s].probabilities.data == b.steps[s].probabilities.data);
    }
  }
}

TEST_CASE("saving twice produces byte-identical files") {
  RanModel model = small_model(3);
  const std::string p1 = temp_path("bytes"), p2 = temp_path("bytes");
  save_ran_checkpoint(p1, model, {{"seed", 3}});
  save_ran_checkpoint(p2, model, {{"seed", 3}});
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  CHECK(s1.substr(0, 8) == "RANCKPT1");
}

TEST_CASE("corrupt magic is rejected with a bad-magic error") {
  RanModel model = small_model(4);
  const std::string path = temp_path("magic");
  save_ran_checkpoint(path, model);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("JUNKJUNK", 8);
  }
  try {
    load_ran_checkpoint(path);
    FAIL("expected bad magic");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("bad magic") != std::string::npos);
  }
}

TEST_CASE("truncated and mismatched checkpoints are rejected") {
  RanModel model = small_model(5);
  const std::string path = temp_path("trunc");
  save_ran_checkpoint(path, model);
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 32);
  CHECK_THROWS_AS(load_ran_checkpoint(path), std::runtime_error);

  CHECK_THROWS_AS(load_ran_checkpoint(temp_path("missing_file")), std::runtime_error);
}
