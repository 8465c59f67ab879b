// Copyright 2026 The verilm Authors.
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

#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "verilm/adapter/model.hpp"

namespace verilm::adapter {

/// Binary layout: magic "VLMCKPT\0", u32 version, u64 header length, JSON
/// header (model config, tensor table, user metadata), then every tensor as
/// little-endian float32 in table order.
inline constexpr char kCheckpointMagic[8] = {'V', 'L', 'M', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

struct Checkpoint {
  AdapterModel<float> model;
  nlohmann::json metadata;
};

std::string encode_checkpoint(const AdapterModel<float>& model, const nlohmann::json& metadata = {});
/// Throws ParseError on a bad magic, version, truncated data or a tensor
/// table that does not match the configured layout.
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const AdapterModel<float>& model,
                     const nlohmann::json& metadata = {});
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace verilm::adapter
