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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "verilm/adapter/model.hpp"
#include "verilm/backends.hpp"
#include "verilm/embeddings.hpp"
#include "verilm/metrics.hpp"
#include "verilm/scoring.hpp"

namespace verilm::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kBackendUnreachable = 2 };

/// Hash of a run config, ignoring keys that do not change results
/// (output location, concurrency, throttling).
std::string config_hash(const nlohmann::json& config);
/// `config` without those keys.
nlohmann::json result_config(const nlohmann::json& config);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);
/// Merges `entry` under `command` into `<dir>/manifest.json`.
void update_run_manifest(const std::filesystem::path& dir, const std::string& command,
                         const nlohmann::json& entry);

/// Scores with a trained adapter checkpoint (logits mode only).
class AdapterBackend final : public Backend {
 public:
  AdapterBackend(std::shared_ptr<const adapter::AdapterModel<float>> model,
                 std::shared_ptr<const EmbeddingTable> embeddings, std::string id);
  std::string id() const override { return id_; }
  BackendResponse respond(const RenderedPrompt& prompt, ResponseMode mode) const override;

 private:
  std::shared_ptr<const adapter::AdapterModel<float>> model_;
  std::shared_ptr<const EmbeddingTable> embeddings_;
  std::string id_;
};

struct BackendSpec {
  std::string spec;  // oracle | http:<url> | replay:<file> | adapter:<checkpoint>
  std::optional<std::filesystem::path> embeddings;
  std::string token;  // bearer token for http
  SyntheticOracleConfig oracle;
};

std::unique_ptr<Backend> make_backend(const BackendSpec& spec);

struct SynthArgs {
  std::size_t n_speakers = 200;
  std::size_t utts_per_speaker = 10;
  std::size_t dim = 32;
  double noise_sigma = 0.1;
  std::size_t n_trials = 10000;
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";
};

struct EvalArgs {
  std::filesystem::path trials;
  BackendSpec backend;
  Protocol protocol = Protocol::llr;
  std::string template_spec;  // empty = builtin; else a template file
  std::size_t concurrency = 1;
  double max_requests_per_second = 0;
  int max_attempts = 3;
  std::string split;  // default: trial file stem
  std::uint64_t seed = 0;
  bool fresh = false;  // discard an existing score file instead of resuming
  std::filesystem::path out = "out";
};

struct MetricsArgs {
  std::vector<std::filesystem::path> scores;
  std::optional<std::filesystem::path> metadata;
  FailureMode failure_mode = FailureMode::exclude;
  AttributeUnit attribute_unit = AttributeUnit::per_audio;
  std::string model = "model";
  std::filesystem::path out = "out";
};

struct TrainArgs {
  std::string preset = "full";
  std::optional<std::size_t> epochs, batch_size, n_speakers, utts_per_speaker, n_val_speakers;
  std::optional<double> learning_rate, noise_sigma;
  std::uint64_t seed = 17;
  bool serial = false;
  std::filesystem::path out = "out";
};

struct GradCheckArgs {
  std::size_t n_configs = 20;
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
};

struct ParseAuditArgs {
  std::filesystem::path responses;
  Protocol protocol = Protocol::confidence;
  std::optional<std::filesystem::path> out;
};

int run_synth(const SynthArgs& args, std::ostream& log);
int run_eval(const EvalArgs& args, std::ostream& log);
int run_metrics(const MetricsArgs& args, std::ostream& log);
int run_train(const TrainArgs& args, std::ostream& log);
int run_grad_check(const GradCheckArgs& args, std::ostream& log);
int run_parse_audit(const ParseAuditArgs& args, std::ostream& log);

}  // namespace verilm::cli
