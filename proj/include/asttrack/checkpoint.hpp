// Copyright 2026 The asttrack Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "asttrack/nnet.hpp"

namespace asttrack {

// On-disk layout, little-endian:
//   "A3BX" | u32 version
//   u32 stack_count, then per stack: u32 layer_count, per layer u32 in, u32 out, u8 activation
//   u64 param_count | param_count x float32
//   u32 metadata_length | metadata (UTF-8 JSON)
//   u32 CRC32 of every preceding byte
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  nnet::NetworkLayout layout;
  std::vector<float> params;
  nlohmann::json metadata = nlohmann::json::object();
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace asttrack
