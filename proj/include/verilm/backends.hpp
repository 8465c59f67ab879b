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

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "verilm/embeddings.hpp"
#include "verilm/scoring.hpp"

namespace verilm {

struct SyntheticOracleConfig {
  std::size_t dim = 32;
  double noise_sigma = 0.1;
  double temperature = 0.1;
  double bias = 0.5;
  std::uint64_t seed = 0;
};

/// Deterministic stand-in model: p(Yes) = sigmoid((cos(e1, e2) - bias) / T).
/// Logits mode returns (log p, log(1 - p)); text mode answers in the
/// confidence-prompt format with round(100 p).
BackendResponse oracle_respond(const RenderedPrompt& prompt, const SyntheticOracleConfig& cfg,
                               const EmbeddingTable& embeddings,
                               ResponseMode mode = ResponseMode::logits);

class OracleBackend final : public Backend {
 public:
  OracleBackend(std::shared_ptr<const EmbeddingTable> embeddings, SyntheticOracleConfig cfg);
  std::string id() const override { return "oracle"; }
  BackendResponse respond(const RenderedPrompt& prompt, ResponseMode mode) const override;

 private:
  std::shared_ptr<const EmbeddingTable> embeddings_;
  SyntheticOracleConfig cfg_;
};

/// Serves recorded responses from JSON lines:
/// `{"template_id":..,"enroll":..,"test":.., "text":..}` or with
/// `"logit_yes"`/`"logit_no"`. A missing entry fails that trial.
class ReplayBackend final : public Backend {
 public:
  static ReplayBackend from_jsonl(std::string_view text);
  std::string id() const override { return "replay"; }
  BackendResponse respond(const RenderedPrompt& prompt, ResponseMode mode) const override;
  std::size_t size() const { return responses_.size(); }

 private:
  std::map<std::string, BackendResponse, std::less<>> responses_;
};

/// Client for the `/v1/verify` + `/v1/health` wire protocol.
class HttpBackend final : public Backend {
 public:
  /// `url` like "http://127.0.0.1:8080". `token` is sent as a bearer token
  /// when non-empty.
  HttpBackend(std::string url, std::string token = {},
              std::chrono::seconds timeout = std::chrono::seconds(120));
  std::string id() const override { return "http:" + url_; }
  void check_health() const override;
  BackendResponse respond(const RenderedPrompt& prompt, ResponseMode mode) const override;

 private:
  std::string url_;
  std::string host_;  // scheme://host:port
  std::string prefix_;
  std::string token_;
  std::chrono::seconds timeout_;
};

}  // namespace verilm
