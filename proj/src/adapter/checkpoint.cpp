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

#include "verilm/adapter/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "verilm/error.hpp"

namespace verilm::adapter {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little endian");

template <class U>
void put(std::string& out, U v) {
  char buf[sizeof(U)];
  std::memcpy(buf, &v, sizeof(U));
  out.append(buf, sizeof(U));
}

template <class U>
U take(std::string_view bytes, std::size_t& pos) {
  if (bytes.size() - pos < sizeof(U)) throw ParseError(0, "checkpoint: truncated");
  U v;
  std::memcpy(&v, bytes.data() + pos, sizeof(U));
  pos += sizeof(U);
  return v;
}

}  // namespace

nlohmann::json to_json(const ModelConfig& c) {
  return {{"d_spk", c.d_spk},         {"d_model", c.d_model},       {"n_heads", c.n_heads},
          {"n_blocks", c.n_blocks},   {"d_ff", c.d_ff},             {"lora_rank", c.lora_rank},
          {"lora_alpha", c.lora_alpha}, {"lora", c.lora},           {"train_head", c.train_head}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.d_spk = j.at("d_spk").get<std::size_t>();
    c.d_model = j.at("d_model").get<std::size_t>();
    c.n_heads = j.at("n_heads").get<std::size_t>();
    c.n_blocks = j.at("n_blocks").get<std::size_t>();
    c.d_ff = j.at("d_ff").get<std::size_t>();
    c.lora_rank = j.at("lora_rank").get<std::size_t>();
    c.lora_alpha = j.at("lora_alpha").get<double>();
    c.lora = j.at("lora").get<bool>();
    c.train_head = j.at("train_head").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("checkpoint: bad model config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string encode_checkpoint(const AdapterModel<float>& model, const nlohmann::json& metadata) {
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& t : model.params().tensors())
    tensors.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}, {"trainable", t.trainable}});
  nlohmann::json header = {{"model", to_json(model.config())},
                           {"tensors", tensors},
                           {"metadata", metadata.is_null() ? nlohmann::json::object() : metadata}};
  const std::string h = header.dump();
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, h.size());
  out += h;
  auto flat = model.params().flat();
  out.append(reinterpret_cast<const char*>(flat.data()), flat.size_bytes());
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < sizeof kCheckpointMagic ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
    throw ParseError(0, "checkpoint: bad magic");
  std::size_t pos = sizeof kCheckpointMagic;
  const auto version = take<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion)
    throw ParseError(0, "checkpoint: unsupported version " + std::to_string(version));
  const auto hlen = take<std::uint64_t>(bytes, pos);
  if (bytes.size() - pos < hlen) throw ParseError(0, "checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, hlen));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("checkpoint: bad header: ") + e.what());
  }
  pos += hlen;
  Checkpoint ck{AdapterModel<float>(model_config_from_json(header.at("model"))),
                header.value("metadata", nlohmann::json::object())};
  const auto& table = header.at("tensors");
  const auto& tensors = ck.model.params().tensors();
  if (table.size() != tensors.size()) throw ParseError(0, "checkpoint: tensor table mismatch");
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& e = table[i];
    if (e.at("name").get<std::string>() != tensors[i].name ||
        e.at("rows").get<std::size_t>() != tensors[i].rows ||
        e.at("cols").get<std::size_t>() != tensors[i].cols)
      throw ParseError(0, "checkpoint: tensor '" + tensors[i].name + "' does not match the layout");
  }
  auto flat = ck.model.params().flat();
  if (bytes.size() - pos != flat.size_bytes()) throw ParseError(0, "checkpoint: data size mismatch");
  std::memcpy(flat.data(), bytes.data() + pos, flat.size_bytes());
  ck.model.refresh_frozen_cache();
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const AdapterModel<float>& model,
                     const nlohmann::json& metadata) {
  const std::string bytes = encode_checkpoint(model, metadata);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace verilm::adapter
