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

#include "verilm/backends.hpp"

#include <cmath>
#include <cstdio>

#include <httplib.h>
#include <json.hpp>

#include "verilm/error.hpp"
#include "verilm/kernels.hpp"

namespace verilm {
namespace {

using nlohmann::json;

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

std::string replay_key(std::string_view template_id, std::string_view enroll,
                       std::string_view test) {
  std::string key(template_id);
  key += '\t';
  key += enroll;
  key += '\t';
  key += test;
  return key;
}

}  // namespace

BackendResponse oracle_respond(const RenderedPrompt& prompt, const SyntheticOracleConfig& cfg,
                               const EmbeddingTable& embeddings, ResponseMode mode) {
  if (cfg.dim < 2) throw ConfigError("oracle: dim must be >= 2");
  if (!(cfg.temperature > 0)) throw ConfigError("oracle: temperature must be positive");
  auto e1 = embeddings.index_of(prompt.enroll.str());
  auto e2 = embeddings.index_of(prompt.test.str());
  if (!e1 || !e2)
    throw BackendError("oracle: no embedding for '" + (e1 ? prompt.test : prompt.enroll).str() + "'",
                       false);
  const double cos = kernels::cosine(embeddings.row(*e1), embeddings.row(*e2));
  const double z = (cos - cfg.bias) / cfg.temperature;
  BackendResponse r;
  r.kind = mode;
  if (mode == ResponseMode::logits) {
    r.logit_yes = -softplus(-z);  // log sigmoid(z)
    r.logit_no = -softplus(z);    // log (1 - sigmoid(z))
    r.answer_position = "first_generated";
  } else {
    const double p = 1.0 / (1.0 + std::exp(-z));
    const int confidence = static_cast<int>(std::lround(100.0 * p));
    char buf[96];
    std::snprintf(buf, sizeof buf, "Answer: %s. Confidence score: %d.",
                  p >= 0.5 ? "Yes" : "No", confidence);
    r.text = buf;
  }
  return r;
}

OracleBackend::OracleBackend(std::shared_ptr<const EmbeddingTable> embeddings,
                             SyntheticOracleConfig cfg)
    : embeddings_(std::move(embeddings)), cfg_(cfg) {
  if (!embeddings_) throw ConfigError("oracle backend needs embeddings");
  if (cfg_.dim != embeddings_->dim()) cfg_.dim = embeddings_->dim();
}

BackendResponse OracleBackend::respond(const RenderedPrompt& prompt, ResponseMode mode) const {
  return oracle_respond(prompt, cfg_, *embeddings_, mode);
}

ReplayBackend ReplayBackend::from_jsonl(std::string_view text) {
  ReplayBackend b;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(line_no, std::string("replay: ") + e.what());
    }
    BackendResponse r;
    if (j.contains("text")) {
      r.kind = ResponseMode::text;
      r.text = j.at("text").get<std::string>();
    } else if (j.contains("logit_yes") && j.contains("logit_no")) {
      r.kind = ResponseMode::logits;
      r.logit_yes = j.at("logit_yes").get<double>();
      r.logit_no = j.at("logit_no").get<double>();
      r.answer_position = j.value("position", "");
    } else {
      throw ParseError(line_no, "replay: row needs 'text' or 'logit_yes'/'logit_no'");
    }
    auto key = replay_key(j.value("template_id", ""), j.at("enroll").get<std::string>(),
                          j.at("test").get<std::string>());
    b.responses_[key] = std::move(r);
  }
  return b;
}

BackendResponse ReplayBackend::respond(const RenderedPrompt& prompt, ResponseMode mode) const {
  auto it = responses_.find(replay_key(to_string(prompt.template_id), prompt.enroll.str(),
                                       prompt.test.str()));
  if (it == responses_.end())
    it = responses_.find(replay_key("", prompt.enroll.str(), prompt.test.str()));
  if (it == responses_.end())
    throw BackendError("replay: no recorded response for " + prompt.enroll.str() + " / " +
                           prompt.test.str(),
                       false);
  if (it->second.kind != mode) throw BackendError("replay: recorded response has wrong kind", false);
  return it->second;
}

HttpBackend::HttpBackend(std::string url, std::string token, std::chrono::seconds timeout)
    : url_(std::move(url)), token_(std::move(token)), timeout_(timeout) {
  if (!url_.starts_with("http://"))
    throw ConfigError("remote backend url must start with http:// (got '" + url_ + "')");
  auto path_start = url_.find('/', 7);
  host_ = url_.substr(0, path_start);
  if (path_start != std::string::npos) {
    prefix_ = url_.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }
  if (host_.size() <= 7) throw ConfigError("remote backend url has no host");
}

void HttpBackend::check_health() const {
  httplib::Client cli(host_);
  cli.set_connection_timeout(std::chrono::seconds(5));
  cli.set_read_timeout(std::chrono::seconds(10));
  auto res = cli.Get(prefix_ + "/v1/health");
  if (!res)
    throw BackendUnavailable("health check failed: cannot reach " + url_ + " (" +
                             httplib::to_string(res.error()) + ")");
  if (res->status != 200)
    throw BackendUnavailable("health check failed: HTTP " + std::to_string(res->status));
  try {
    auto j = json::parse(res->body);
    if (!j.value("ok", false)) throw BackendUnavailable("health check failed: backend not ok");
  } catch (const json::exception&) {
    throw BackendUnavailable("health check failed: malformed response");
  }
}

BackendResponse HttpBackend::respond(const RenderedPrompt& prompt, ResponseMode mode) const {
  httplib::Client cli(host_);
  cli.set_connection_timeout(std::chrono::seconds(10));
  cli.set_read_timeout(timeout_);
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
  json body = {{"template_id", to_string(prompt.template_id)},
               {"enroll_audio", prompt.enroll.str()},
               {"test_audio", prompt.test.str()},
               {"mode", to_string(mode)}};
  auto res = cli.Post(prefix_ + "/v1/verify", headers, body.dump(), "application/json");
  if (!res) throw BackendError("request failed: " + httplib::to_string(res.error()), true);

  json j;
  try {
    j = json::parse(res->body);
  } catch (const json::exception&) {
    throw BackendError("HTTP " + std::to_string(res->status) + ": malformed JSON body",
                       res->status >= 500);
  }
  if (res->status < 200 || res->status >= 300) {
    std::string msg = j.is_object() ? j.value("error", std::string("unknown error")) : "unknown error";
    bool retryable = res->status >= 500 || res->status == 429;
    throw BackendError("HTTP " + std::to_string(res->status) + ": " + msg, retryable);
  }
  if (j.contains("error")) throw BackendError(j.at("error").dump(), false);

  BackendResponse r;
  r.kind = mode;
  try {
    if (mode == ResponseMode::text) {
      r.text = j.at("text").get<std::string>();
    } else {
      r.logit_yes = j.at("logit_yes").get<double>();
      r.logit_no = j.at("logit_no").get<double>();
      r.answer_position = j.value("position", "");
      if (!std::isfinite(r.logit_yes) || !std::isfinite(r.logit_no))
        throw BackendError("non-finite logits", false);
    }
  } catch (const json::exception& e) {
    throw BackendError(std::string("response missing fields: ") + e.what(), false);
  }
  return r;
}

}  // namespace verilm
