// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "ran/model.hpp"

namespace ran {

// Checkpoint layout, little-endian throughout:
//   magic "RANCKPT1"
//   u64   metadata byte length
//   bytes UTF-8 JSON metadata
//   per parameter, in order:
//     u32   name length, name bytes
//     u32   rank, u32 dims[rank]
//     f32   payload (row-major)
// Values are stored in 32-bit floats; loading widens back to f64.

void save_checkpoint(const std::string& path, const nlohmann::json& metadata,
                     const std::vector<ParamRef>& params);

struct LoadedCheckpoint {
  nlohmann::json metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

/// Throws std::runtime_error with "bad magic" on a corrupt header.
LoadedCheckpoint load_checkpoint(const std::string& path);

/// Serializes the model plus caller metadata (stored under "extra").
void save_ran_checkpoint(const std::string& path, RanModel& model,
                         const nlohmann::json& extra = {});

/// Rebuilds the model from the stored description and parameter arrays.
RanModel load_ran_checkpoint(const std::string& path, nlohmann::json* metadata_out = nullptr);

/// Rounds every parameter through f32, matching what a save/load round trip
/// produces; decode comparisons use this to apply quantization consistently.
void quantize_parameters_f32(RanModel& model);

}  // namespace ran
