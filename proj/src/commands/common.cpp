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

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "verilm/adapter/checkpoint.hpp"
#include "verilm/backends.hpp"
#include "verilm/commands.hpp"
#include "verilm/error.hpp"
#include "verilm/hash.hpp"

namespace verilm::cli {

using nlohmann::json;

json result_config(const json& config) {
  json c = config;
  for (const char* key : {"out", "concurrency", "max_requests_per_second"}) c.erase(key);
  return c;
}

std::string config_hash(const json& config) { return fnv1a64_hex(result_config(config).dump()); }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(text.data(), std::streamsize(text.size()));
  if (!out) throw Error("write failed: " + path.string());
}

void update_run_manifest(const std::filesystem::path& dir, const std::string& command,
                         const json& entry) {
  const auto path = dir / "manifest.json";
  json doc = json::object();
  if (std::filesystem::exists(path)) {
    try {
      doc = json::parse(read_text(path));
    } catch (const json::exception&) {
      doc = json::object();
    }
  }
  doc["schema"] = "verilm.manifest/1";
  doc["runs"][command] = entry;
  write_text(path, doc.dump(2) + "\n");
}

AdapterBackend::AdapterBackend(std::shared_ptr<const adapter::AdapterModel<float>> model,
                               std::shared_ptr<const EmbeddingTable> embeddings, std::string id)
    : model_(std::move(model)), embeddings_(std::move(embeddings)), id_(std::move(id)) {
  if (!model_ || !embeddings_) throw ConfigError("adapter backend needs a model and embeddings");
  if (embeddings_->dim() != model_->config().d_spk)
    throw ConfigError("adapter backend: embedding dim " + std::to_string(embeddings_->dim()) +
                      " does not match the checkpoint (" + std::to_string(model_->config().d_spk) +
                      ")");
}

BackendResponse AdapterBackend::respond(const RenderedPrompt& prompt, ResponseMode mode) const {
  if (mode != ResponseMode::logits)
    throw BackendError("adapter backend only serves logits", false);
  auto a = embeddings_->index_of(prompt.enroll.str());
  auto b = embeddings_->index_of(prompt.test.str());
  if (!a || !b)
    throw BackendError("adapter: no embedding for '" + (a ? prompt.test : prompt.enroll).str() + "'",
                       false);
  auto lg = model_->forward(embeddings_->row(*a), embeddings_->row(*b));
  BackendResponse r;
  r.kind = ResponseMode::logits;
  r.logit_yes = lg.yes;
  r.logit_no = lg.no;
  r.answer_position = "first_generated";
  return r;
}

namespace {

std::shared_ptr<const EmbeddingTable> load_embeddings(const BackendSpec& spec) {
  if (!spec.embeddings) throw ConfigError("backend '" + spec.spec + "' needs --embeddings");
  return std::make_shared<const EmbeddingTable>(EmbeddingTable::parse(read_text(*spec.embeddings)));
}

}  // namespace

std::unique_ptr<Backend> make_backend(const BackendSpec& spec) {
  const std::string& s = spec.spec;
  if (s == "oracle") return std::make_unique<OracleBackend>(load_embeddings(spec), spec.oracle);
  if (s.starts_with("http:")) {
    std::string url = s.starts_with("http://") ? s : s.substr(5);
    if (!url.starts_with("http://") && !url.starts_with("https://")) url = "http://" + url;
    return std::make_unique<HttpBackend>(url, spec.token);
  }
  if (s.starts_with("replay:"))
    return std::make_unique<ReplayBackend>(ReplayBackend::from_jsonl(read_text(s.substr(7))));
  if (s.starts_with("adapter:")) {
    auto ck = adapter::load_checkpoint(s.substr(8));
    auto model = std::make_shared<const adapter::AdapterModel<float>>(std::move(ck.model));
    return std::make_unique<AdapterBackend>(model, load_embeddings(spec), "adapter");
  }
  throw ConfigError("unknown backend '" + s + "' (expected oracle, http:<url>, replay:<file> or "
                    "adapter:<checkpoint>)");
}

}  // namespace verilm::cli
