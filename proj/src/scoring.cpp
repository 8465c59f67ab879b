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

#include "verilm/scoring.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <numeric>
#include <thread>

#include "verilm/error.hpp"

namespace verilm {

double llr(double logit_yes, double logit_no) {
  if (!std::isfinite(logit_yes) || !std::isfinite(logit_no))
    throw Error("llr: non-finite logit");
  return logit_yes - logit_no;
}

double llr_from_probabilities(double p_yes, double p_no) {
  if (!(p_yes > 0 && p_yes <= 1 && p_no > 0 && p_no <= 1))
    throw Error("llr: probabilities must be in (0, 1]");
  return std::log(p_yes) - std::log(p_no);
}

std::optional<double> confidence_score(const ParsedResponse& parsed) {
  if (parsed.failed || !parsed.confidence) return std::nullopt;
  return static_cast<double>(*parsed.confidence);
}

std::string_view to_string(ResponseMode m) { return m == ResponseMode::text ? "text" : "logits"; }

ScoredTrial make_scored_trial(std::size_t index, const Trial& trial, Protocol protocol,
                              const BackendResponse& response, const std::string& backend_id,
                              const ParserOptions& parser) {
  ScoredTrial out;
  out.index = index;
  out.trial = trial;
  out.backend_id = backend_id;
  out.template_id = std::string(to_string(template_for(protocol)));
  out.attempts = response.attempt_count;
  out.answer_position = response.answer_position;
  if (protocol == Protocol::confidence) {
    if (response.kind != ResponseMode::text) {
      out.error = "backend returned logits for the confidence protocol";
      return out;
    }
    out.parsed = parse_response(response.text, protocol, parser);
    out.score = confidence_score(*out.parsed);
    out.failed = !out.score.has_value();
    if (out.failed) out.error = "unparseable response";
  } else {
    if (response.kind != ResponseMode::logits) {
      out.error = "backend returned text for the llr protocol";
      return out;
    }
    try {
      out.score = llr(response.logit_yes, response.logit_no);
      out.logits = {response.logit_yes, response.logit_no};
      out.failed = false;
    } catch (const Error& e) {
      out.error = e.what();
    }
  }
  return out;
}

std::chrono::milliseconds RetryPolicy::backoff_before(int attempt) const {
  double ms = static_cast<double>(initial_backoff.count()) * std::pow(multiplier, attempt - 2);
  ms = std::min(ms, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

ScoredTrial score_trial(std::size_t index, const Trial& trial, const Backend& backend,
                        const ScoreOptions& options) {
  const auto& tmpl = options.prompt_template
                         ? *options.prompt_template
                         : PromptTemplate::builtin(template_for(options.protocol));
  if (tmpl.id() != template_for(options.protocol))
    throw ConfigError("template '" + std::string(to_string(tmpl.id())) +
                      "' does not match protocol '" + std::string(to_string(options.protocol)) +
                      "'");
  const auto prompt = render(tmpl, trial.enroll, trial.test);
  const auto mode = mode_for(options.protocol);
  const int max_attempts = std::max(1, options.retry.max_attempts);
  std::string last_error;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempt > 1) std::this_thread::sleep_for(options.retry.backoff_before(attempt));
    try {
      auto t0 = std::chrono::steady_clock::now();
      auto response = backend.respond(prompt, mode);
      response.latency_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      response.attempt_count = attempt;
      return make_scored_trial(index, trial, options.protocol, response, backend.id(),
                               options.parser);
    } catch (const BackendError& e) {
      last_error = e.what();
      if (!e.retryable()) {
        ScoredTrial failed;
        failed.index = index;
        failed.trial = trial;
        failed.backend_id = backend.id();
        failed.template_id = std::string(to_string(tmpl.id()));
        failed.attempts = attempt;
        failed.error = last_error;
        return failed;
      }
    }
  }
  ScoredTrial failed;
  failed.index = index;
  failed.trial = trial;
  failed.backend_id = backend.id();
  failed.template_id = std::string(to_string(tmpl.id()));
  failed.attempts = max_attempts;
  failed.error = last_error;
  return failed;
}

namespace {

// Spaces request starts at least `interval` apart across all workers.
class Throttle {
 public:
  explicit Throttle(double per_second)
      : interval_(per_second > 0 ? std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                       std::chrono::duration<double>(1.0 / per_second))
                                 : std::chrono::steady_clock::duration::zero()) {}

  void wait() {
    if (interval_ == std::chrono::steady_clock::duration::zero()) return;
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lock(mu_);
      auto now = std::chrono::steady_clock::now();
      next_ = std::max(next_, now);
      slot = next_;
      next_ += interval_;
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  std::chrono::steady_clock::duration interval_;
  std::mutex mu_;
  std::chrono::steady_clock::time_point next_{};
};

}  // namespace

std::vector<ScoredTrial> score_trials(const TrialSet& trials, const Backend& backend,
                                      const ScoreOptions& options,
                                      std::span<const std::size_t> indices,
                                      const ScoredTrialSink& sink) {
  std::vector<std::size_t> all;
  if (indices.empty()) {
    all.resize(trials.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    indices = all;
  }
  for (auto i : indices)
    if (i >= trials.size()) throw ConfigError("trial index out of range");
  // Template/protocol mismatch is a config error; surface it before any work.
  if (options.prompt_template && options.prompt_template->id() != template_for(options.protocol))
    throw ConfigError("template does not match protocol");

  const std::size_t n = indices.size();
  std::vector<std::optional<ScoredTrial>> results(n);
  std::mutex mu;
  std::size_t next_to_emit = 0;
  std::atomic<std::size_t> next_job{0};
  Throttle throttle(options.max_requests_per_second);
  std::exception_ptr fatal;

  auto worker = [&] {
    while (true) {
      std::size_t k = next_job.fetch_add(1);
      if (k >= n) return;
      ScoredTrial st;
      try {
        throttle.wait();
        st = score_trial(indices[k], trials[indices[k]], backend, options);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!fatal) fatal = std::current_exception();
        next_job = n;
        return;
      }
      std::lock_guard lock(mu);
      results[k] = std::move(st);
      // Emit the contiguous finished prefix in list order.
      try {
        while (next_to_emit < n && results[next_to_emit]) {
          if (sink) sink(*results[next_to_emit]);
          ++next_to_emit;
        }
      } catch (...) {
        if (!fatal) fatal = std::current_exception();
        next_job = n;
        return;
      }
    }
  };

  const std::size_t n_workers = std::clamp<std::size_t>(options.concurrency, 1, std::max<std::size_t>(n, 1));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);

  std::vector<ScoredTrial> out;
  out.reserve(n);
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

}  // namespace verilm
