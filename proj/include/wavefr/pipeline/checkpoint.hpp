// Copyright (c) the wavefr authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// WFCK checkpoint container. All integers little-endian.
//
//   "WFCK"  u32 version  u64 json_len  json_bytes
//   u32 tensor_count
//   repeated: u32 name_len  name  u8 dtype(0 = f32)  u32 rank  u64 dims[rank]
//             f32 payload[prod(dims)]
//
// Tensors are stored sorted by name. Reading a file with another version is
// an error, never a reinterpretation.

#ifndef WAVEFR_PIPELINE_CHECKPOINT_HPP_
#define WAVEFR_PIPELINE_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "wavefr/nn/params.hpp"

namespace wfr::pipeline {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointTensor {
  std::string name;
  nn::Shape shape;
  std::vector<float> data;
};

struct Checkpoint {
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<CheckpointTensor> tensors;
};

// Throws ContractError on duplicate names or a payload/shape mismatch.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
// Throws IoError on malformed input, version mismatch or duplicate names.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes,
                             const std::string& origin = "<memory>");

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint make_checkpoint(const nn::ParameterStore<float>& params,
                           nlohmann::json metadata);
nn::ParameterStore<float> checkpoint_params(const Checkpoint& ckpt);

}  // namespace wfr::pipeline

#endif  // WAVEFR_PIPELINE_CHECKPOINT_HPP_
