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

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <thread>

#include <httplib.h>
#include <gtest/gtest.h>
#include <json.hpp>

#include "verilm/backends.hpp"
#include "verilm/error.hpp"
#include "verilm/kernels.hpp"
#include "verilm/scoring.hpp"

namespace verilm {
namespace {

// A local port with nothing listening on it.
int closed_port() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

using nlohmann::json;

EmbeddingTable table_of(std::vector<std::pair<std::string, std::vector<float>>> rows) {
  EmbeddingTable t(rows.front().second.size());
  for (auto& [id, v] : rows) t.add(UtteranceId(id), v);
  return t;
}

RenderedPrompt prompt_for(const std::string& a, const std::string& b,
                          TemplateId id = TemplateId::binary) {
  return render(id, UtteranceId(a), UtteranceId(b));
}

TEST(Oracle, IdenticalEmbeddingsGiveUnitLlr) {
  auto t = table_of({{"a/1", {1, 0, 0}}, {"a/2", {1, 0, 0}}, {"b/1", {0, 1, 0}}});
  SyntheticOracleConfig cfg;
  cfg.dim = 3;
  cfg.bias = 0;
  cfg.temperature = 1;
  auto r = oracle_respond(prompt_for("a/1", "a/2"), cfg, t);
  EXPECT_NEAR(llr(r.logit_yes, r.logit_no), 1.0, 1e-12);
  auto o = oracle_respond(prompt_for("a/1", "b/1"), cfg, t);
  EXPECT_NEAR(llr(o.logit_yes, o.logit_no), 0.0, 1e-12);
}

TEST(Oracle, LogitsAreNormalizedLogProbabilities) {
  auto t = table_of({{"a/1", {1, 2}}, {"b/1", {2, -1}}});
  SyntheticOracleConfig cfg;
  cfg.dim = 2;
  auto r = oracle_respond(prompt_for("a/1", "b/1"), cfg, t);
  EXPECT_NEAR(std::exp(r.logit_yes) + std::exp(r.logit_no), 1.0, 1e-12);
}

TEST(Oracle, LlrIsMonotoneInCosine) {
  std::mt19937_64 rng(3);
  std::normal_distribution<float> g;
  EmbeddingTable t(8);
  for (int i = 0; i < 60; ++i) {
    std::vector<float> v(8);
    for (auto& x : v) x = g(rng);
    t.add(UtteranceId("s" + std::to_string(i) + "/u"), v);
  }
  SyntheticOracleConfig cfg;
  cfg.dim = 8;
  std::vector<std::pair<double, double>> cos_llr;
  for (int i = 1; i < 60; ++i) {
    auto p = prompt_for(t.id(0).str(), t.id(i).str());
    auto r = oracle_respond(p, cfg, t);
    cos_llr.push_back({kernels::cosine(t.row(0), t.row(i)), llr(r.logit_yes, r.logit_no)});
  }
  std::sort(cos_llr.begin(), cos_llr.end());
  for (std::size_t i = 1; i < cos_llr.size(); ++i)
    EXPECT_LE(cos_llr[i - 1].second, cos_llr[i].second);
}

TEST(Oracle, TextModeMatchesConfidenceProtocol) {
  auto t = table_of({{"a/1", {1, 0}}, {"a/2", {1, 0.1f}}});
  SyntheticOracleConfig cfg;
  cfg.dim = 2;
  auto r = oracle_respond(prompt_for("a/1", "a/2", TemplateId::confidence), cfg, t,
                          ResponseMode::text);
  auto p = parse_response(r.text, Protocol::confidence);
  EXPECT_FALSE(p.failed);
  EXPECT_EQ(p.decision, Decision::yes);
  ASSERT_TRUE(p.confidence);
  EXPECT_GT(*p.confidence, 90);
}

TEST(Oracle, ErrorsOnMissingEmbeddingAndBadConfig) {
  auto t = table_of({{"a/1", {1, 0}}});
  SyntheticOracleConfig cfg;
  cfg.dim = 2;
  EXPECT_THROW(oracle_respond(prompt_for("a/1", "z/9"), cfg, t), BackendError);
  cfg.dim = 1;
  EXPECT_THROW(oracle_respond(prompt_for("a/1", "a/1"), cfg, t), ConfigError);
  cfg.dim = 2;
  cfg.temperature = 0;
  EXPECT_THROW(oracle_respond(prompt_for("a/1", "a/1"), cfg, t), ConfigError);
}

TEST(Replay, LooksUpRecordedResponses) {
  auto b = ReplayBackend::from_jsonl(
      R"({"enroll":"a/1","test":"a/2","logit_yes":3,"logit_no":1,"position":"first_generated"})"
      "\n\n"
      R"({"template_id":"confidence","enroll":"a/1","test":"b/1","text":"No. Confidence: 10"})"
      "\n");
  EXPECT_EQ(b.size(), 2u);
  auto r = b.respond(prompt_for("a/1", "a/2"), ResponseMode::logits);
  EXPECT_EQ(llr(r.logit_yes, r.logit_no), 2.0);
  EXPECT_EQ(r.answer_position, "first_generated");
  auto t = b.respond(prompt_for("a/1", "b/1", TemplateId::confidence), ResponseMode::text);
  EXPECT_EQ(t.text, "No. Confidence: 10");
  EXPECT_THROW(b.respond(prompt_for("b/1", "a/1"), ResponseMode::logits), BackendError);
  EXPECT_THROW(b.respond(prompt_for("a/1", "a/2"), ResponseMode::text), BackendError);
}

TEST(Replay, MissingResponseMarksOnlyThatTrialFailed) {
  auto b = ReplayBackend::from_jsonl(R"({"enroll":"a/1","test":"a/2","logit_yes":1,"logit_no":0})"
                                     "\n"
                                     R"({"enroll":"a/1","test":"b/1","logit_yes":0,"logit_no":1})");
  TrialSet trials("t", {{true, UtteranceId("a/1"), UtteranceId("a/2")},
                        {false, UtteranceId("a/3"), UtteranceId("b/1")},
                        {false, UtteranceId("a/1"), UtteranceId("b/1")}});
  ScoreOptions opts;
  opts.retry.initial_backoff = std::chrono::milliseconds(1);
  auto got = score_trials(trials, b, opts);
  ASSERT_EQ(got.size(), 3u);
  EXPECT_FALSE(got[0].failed);
  EXPECT_TRUE(got[1].failed);
  EXPECT_EQ(got[1].attempts, 1);
  EXPECT_FALSE(got[2].failed);
  EXPECT_EQ(got[2].score, -1.0);
}

TEST(Replay, MalformedInputReportsLine) {
  try {
    ReplayBackend::from_jsonl("{\"enroll\":\"a/1\",\"test\":\"a/2\",\"text\":\"Yes\"}\n{oops\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(ReplayBackend::from_jsonl(R"({"enroll":"a/1","test":"a/2"})"), ParseError);
}

// In-process stub speaking the verify/health wire protocol.
class StubServer {
 public:
  StubServer() {
    srv_.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
      if (healthy_)
        res.set_content(R"({"ok":true,"model":"stub"})", "application/json");
      else
        res.status = 503;
    });
    srv_.Post("/v1/verify", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      last_auth_ = req.get_header_value("Authorization");
      auto j = json::parse(req.body);
      last_request_ = j;
      if (status_ != 200) {
        res.status = status_;
        res.set_content(R"({"error":"scripted"})", "application/json");
        return;
      }
      if (j.at("mode") == "text")
        res.set_content(json{{"text", "Yes, same speaker. Confidence: 77"},
                             {"latency_s", 0.01}}.dump(),
                        "application/json");
      else
        res.set_content(json{{"logit_yes", 2.0}, {"logit_no", 1.0},
                             {"position", "first_generated"}, {"latency_s", 0.01}}.dump(),
                        "application/json");
    });
    port_ = srv_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { srv_.listen_after_bind(); });
    srv_.wait_until_ready();
  }
  ~StubServer() {
    srv_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::atomic<bool> healthy_{true};
  std::atomic<int> status_{200};
  std::atomic<int> requests_{0};
  std::string last_auth_;
  json last_request_;

 private:
  httplib::Server srv_;
  int port_ = 0;
  std::thread thread_;
};

TEST(Http, HealthCheck) {
  StubServer s;
  HttpBackend b(s.url());
  EXPECT_NO_THROW(b.check_health());
  s.healthy_ = false;
  EXPECT_THROW(b.check_health(), BackendUnavailable);
}

TEST(Http, UnreachableIsUnavailable) {
  const int port = closed_port();
  HttpBackend b("http://127.0.0.1:" + std::to_string(port));
  EXPECT_THROW(b.check_health(), BackendUnavailable);
}

TEST(Http, LogitsRequestAndScore) {
  StubServer s;
  HttpBackend b(s.url(), "secret");
  auto r = b.respond(prompt_for("spk1/a.wav", "spk2/b.wav"), ResponseMode::logits);
  EXPECT_EQ(llr(r.logit_yes, r.logit_no), 1.0);
  EXPECT_EQ(r.answer_position, "first_generated");
  EXPECT_EQ(s.last_auth_, "Bearer secret");
  EXPECT_EQ(s.last_request_.at("template_id"), "binary");
  EXPECT_EQ(s.last_request_.at("enroll_audio"), "spk1/a.wav");
  EXPECT_EQ(s.last_request_.at("test_audio"), "spk2/b.wav");
  EXPECT_EQ(s.last_request_.at("mode"), "logits");
}

TEST(Http, TextRequest) {
  StubServer s;
  HttpBackend b(s.url());
  auto r = b.respond(prompt_for("a/1", "a/2", TemplateId::confidence), ResponseMode::text);
  EXPECT_EQ(s.last_request_.at("mode"), "text");
  EXPECT_EQ(s.last_request_.at("template_id"), "confidence");
  EXPECT_TRUE(s.last_auth_.empty());
  EXPECT_EQ(confidence_score(parse_response(r.text, Protocol::confidence)), 77.0);
}

TEST(Http, ClientErrorsAreNotRetried) {
  StubServer s;
  HttpBackend b(s.url());
  s.status_ = 400;
  try {
    b.respond(prompt_for("a/1", "a/2"), ResponseMode::logits);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_FALSE(e.retryable());
  }
  TrialSet trials("t", {{true, UtteranceId("a/1"), UtteranceId("a/2")}});
  ScoreOptions opts;
  s.requests_ = 0;
  auto got = score_trials(trials, b, opts);
  EXPECT_TRUE(got[0].failed);
  EXPECT_EQ(s.requests_.load(), 1);
}

TEST(Http, ServerErrorsAreRetried) {
  StubServer s;
  HttpBackend b(s.url());
  s.status_ = 500;
  TrialSet trials("t", {{true, UtteranceId("a/1"), UtteranceId("a/2")}});
  ScoreOptions opts;
  opts.retry.initial_backoff = std::chrono::milliseconds(1);
  auto got = score_trials(trials, b, opts);
  EXPECT_TRUE(got[0].failed);
  EXPECT_EQ(got[0].attempts, 3);
  EXPECT_EQ(s.requests_.load(), 3);
}

TEST(Http, UrlPrefixAndValidation) {
  EXPECT_THROW(HttpBackend("https://example.org"), ConfigError);
  EXPECT_THROW(HttpBackend("http://"), ConfigError);
  HttpBackend b("http://host:9/api/");
  EXPECT_EQ(b.id(), "http:http://host:9/api/");
}

}  // namespace
}  // namespace verilm
