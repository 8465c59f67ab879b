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
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "verilm/prompting.hpp"
#include "verilm/response_parser.hpp"
#include "verilm/trial_store.hpp"

namespace verilm {

/// log(p(Yes) / p(No)) from two logits of the same pre-softmax distribution,
/// i.e. logit_yes - logit_no. Throws Error on non-finite input.
double llr(double logit_yes, double logit_no);

/// log(p_yes / p_no) from probabilities. Both must be in (0, 1].
double llr_from_probabilities(double p_yes, double p_no);

/// Confidence-protocol score: the parsed confidence itself, or nullopt when
/// the response failed to parse.
std::optional<double> confidence_score(const ParsedResponse& parsed);

enum class ResponseMode { text, logits };
std::string_view to_string(ResponseMode m);
constexpr ResponseMode mode_for(Protocol p) {
  return p == Protocol::confidence ? ResponseMode::text : ResponseMode::logits;
}

struct BackendResponse {
  ResponseMode kind = ResponseMode::text;
  std::string text;
  double logit_yes = 0;
  double logit_no = 0;
  // Generation position the logits were read at, when the backend reports it.
  std::string answer_position;
  double latency_s = 0;
  int attempt_count = 1;
};

/// A model that answers rendered prompts. Implementations must be safe to
/// call from several threads at once.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  /// Throws BackendUnavailable when the backend cannot serve requests.
  virtual void check_health() const {}
  /// Throws BackendError for a failed request.
  virtual BackendResponse respond(const RenderedPrompt& prompt, ResponseMode mode) const = 0;
};

struct ScoredTrial {
  std::size_t index = 0;  // position in the trial list
  Trial trial;
  std::optional<double> score;  // present iff !failed
  bool failed = true;
  std::optional<ParsedResponse> parsed;
  std::optional<std::pair<double, double>> logits;  // (yes, no)
  std::string answer_position;
  std::string backend_id;
  std::string template_id;
  int attempts = 0;
  std::string error;
};

/// Builds the ScoredTrial for one backend response.
ScoredTrial make_scored_trial(std::size_t index, const Trial& trial, Protocol protocol,
                              const BackendResponse& response, const std::string& backend_id,
                              const ParserOptions& parser = {});

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{5000};

  std::chrono::milliseconds backoff_before(int attempt) const;  // attempt >= 2
};

struct ScoreOptions {
  Protocol protocol = Protocol::llr;
  const PromptTemplate* prompt_template = nullptr;  // null = builtin for protocol
  RetryPolicy retry;
  std::size_t concurrency = 1;
  // Upper bound on issued requests per second; 0 disables throttling.
  double max_requests_per_second = 0;
  ParserOptions parser;
};

/// Receives finished trials in list order.
using ScoredTrialSink = std::function<void(const ScoredTrial&)>;

ScoredTrial score_trial(std::size_t index, const Trial& trial, const Backend& backend,
                        const ScoreOptions& options);

/// Scores `indices` (all trials when empty) with up to `options.concurrency`
/// requests in flight. Output and sink order follow `indices` regardless of
/// completion order. Backend failures mark a trial failed; they never abort
/// the run.
std::vector<ScoredTrial> score_trials(const TrialSet& trials, const Backend& backend,
                                      const ScoreOptions& options,
                                      std::span<const std::size_t> indices = {},
                                      const ScoredTrialSink& sink = {});

}  // namespace verilm
