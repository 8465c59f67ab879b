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

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "eer_oracle.hpp"
#include "verilm/error.hpp"
#include "verilm/metrics.hpp"

namespace verilm {
namespace {

using verilm::testing::brute_force_eer;

TEST(Eer, SpecExamples) {
  std::vector<double> t{0.9, 0.8}, n{0.1, 0.2};
  EXPECT_EQ(compute_eer(t, n).eer, 0.0);
  EXPECT_EQ(compute_eer(n, t).eer, 1.0);
  std::vector<double> t3{0.9, 0.6, 0.3}, n3{0.7, 0.4, 0.1};
  auto r = compute_eer(t3, n3);
  EXPECT_NEAR(r.eer, 1.0 / 3.0, 1e-12);
  EXPECT_EQ(r.threshold, 0.6);
  std::vector<double> same{5, 5, 5};
  EXPECT_EQ(compute_eer(same, same).eer, 0.5);
}

TEST(Eer, Errors) {
  std::vector<double> one{1.0}, empty;
  EXPECT_THROW(compute_eer(empty, one), Error);
  EXPECT_THROW(compute_eer(one, empty), Error);
  std::vector<double> bad{NAN};
  EXPECT_THROW(compute_eer(bad, one), Error);
}

TEST(Eer, MatchesBruteForce) {
  std::mt19937_64 rng(11);
  for (int set = 0; set < 200; ++set) {
    std::size_t nt = 1 + rng() % 200, nn = 1 + rng() % 200;
    bool coarse = set % 3 == 0;
    std::normal_distribution<double> gt(1.0, 1.0), gn(0.0, 1.0);
    std::vector<double> t(nt), n(nn);
    for (auto& x : t) x = coarse ? std::round(gt(rng) * 2) : gt(rng);
    for (auto& x : n) x = coarse ? std::round(gn(rng) * 2) : gn(rng);
    EXPECT_NEAR(compute_eer(t, n).eer, brute_force_eer(t, n), 1e-9) << "set " << set;
  }
}

TEST(Eer, InvariantUnderMonotoneTransformAndShuffle) {
  std::mt19937_64 rng(12);
  for (int set = 0; set < 50; ++set) {
    std::normal_distribution<double> gt(0.8, 1.0), gn(0.0, 1.0);
    std::vector<double> t(50 + rng() % 50), n(50 + rng() % 50);
    for (auto& x : t) x = gt(rng);
    for (auto& x : n) x = gn(rng);
    double base = compute_eer(t, n).eer;
    auto f = [](double x) { return std::exp(x) * 3.0 - 1.0; };
    std::vector<double> ft(t), fn(n);
    std::transform(ft.begin(), ft.end(), ft.begin(), f);
    std::transform(fn.begin(), fn.end(), fn.begin(), f);
    EXPECT_EQ(compute_eer(ft, fn).eer, base);
    std::shuffle(t.begin(), t.end(), rng);
    std::shuffle(n.begin(), n.end(), rng);
    EXPECT_EQ(compute_eer(t, n).eer, base);
  }
}

TEST(Roc, EndpointsAndMonotone) {
  std::vector<double> t{0.9, 0.6, 0.3}, n{0.7, 0.4, 0.1};
  auto roc = roc_curve(t, n);
  EXPECT_EQ(roc.front().far, 1.0);
  EXPECT_EQ(roc.front().frr, 0.0);
  EXPECT_EQ(roc.back().far, 0.0);
  EXPECT_EQ(roc.back().frr, 1.0);
  EXPECT_TRUE(std::isinf(roc.back().threshold));
  for (std::size_t i = 1; i < roc.size(); ++i) {
    EXPECT_LE(roc[i].far, roc[i - 1].far);
    EXPECT_GE(roc[i].frr, roc[i - 1].frr);
  }
}

ScoredTrial scored(std::size_t i, bool target, std::optional<double> score) {
  ScoredTrial st;
  st.index = i;
  st.trial = {target, UtteranceId("s" + std::to_string(i) + "/a"), UtteranceId("t/b")};
  st.score = score;
  st.failed = !score;
  return st;
}

TEST(Audit, DistinctScores) {
  std::vector<ScoredTrial> v{scored(0, true, 10), scored(1, false, 10), scored(2, true, 20),
                             scored(3, false, std::nullopt)};
  auto a = distinct_score_audit(v);
  EXPECT_EQ(a.distinct, 2u);
  ASSERT_EQ(a.histogram.size(), 2u);
  EXPECT_EQ(a.histogram[0], (std::pair<double, std::size_t>{10.0, 2}));
  EXPECT_EQ(distinct_score_audit({}).distinct, 0u);
  std::vector<ScoredTrial> all;
  for (int c = 0; c <= 100; ++c) all.push_back(scored(c, c % 2, double(c)));
  EXPECT_EQ(distinct_score_audit(all).distinct, 101u);
}

TEST(Report, FailureRateAndModes) {
  std::vector<ScoredTrial> v;
  for (std::size_t i = 0; i < 100; ++i) {
    bool target = i % 2 == 0;
    if (i < 16)
      v.push_back(scored(i, target, std::nullopt));
    else
      v.push_back(scored(i, target, target ? 90.0 : 10.0));
  }
  ReportOptions opts;
  opts.protocol = Protocol::confidence;
  auto r = compute_report(v, {}, opts);
  EXPECT_EQ(r.n_failed, 16u);
  EXPECT_EQ(r.n_scored, 84u);
  EXPECT_DOUBLE_EQ(r.failure_rate, 0.16);
  EXPECT_EQ(r.n_target + r.n_nontarget, 84u);
  EXPECT_EQ(r.eer, 0.0);

  opts.failure_mode = FailureMode::strict;
  auto s = compute_report(v, {}, opts);
  EXPECT_EQ(s.n_target + s.n_nontarget, 100u);
  // 8 targets and 8 non-targets at the neutral 50: FAR 8/50 at theta 50 and
  // FRR 8/50 at theta 90, so the interpolated crossing sits at 4/50.
  EXPECT_NEAR(*s.eer, 4.0 / 50.0, 1e-12);
  EXPECT_DOUBLE_EQ(s.failure_rate, 0.16);
}

TEST(Report, AllFailedLeavesEerUndefined) {
  std::vector<ScoredTrial> v{scored(0, true, std::nullopt), scored(1, false, std::nullopt)};
  auto r = compute_report(v, {});
  EXPECT_FALSE(r.eer);
  EXPECT_EQ(r.failure_rate, 1.0);
  EXPECT_THROW(compute_report({}, {}), Error);
}

TEST(Report, AccentAndGender) {
  MetadataMap meta;
  meta["id1"] = {"id1", Gender::male, "GB"};
  meta["id2"] = {"id2", Gender::female, "US"};
  ScoredTrial st;
  st.index = 0;
  st.trial = {false, UtteranceId("id1/a.wav"), UtteranceId("id2/b.wav")};
  st.score = 10;
  st.failed = false;
  ParsedResponse p;
  p.decision = Decision::no;
  p.confidence = 10;
  p.failed = false;
  p.accents[0] = {"scottish"};
  p.accents[1] = {"hispanic"};
  p.gender = {Gender::male, Gender::male};
  st.parsed = p;
  std::vector<ScoredTrial> v{st};
  auto r = compute_report(v, meta);
  EXPECT_EQ(r.accent.total, 2u);
  EXPECT_EQ(r.accent.coverage(), 1.0);
  EXPECT_EQ(r.accent.accuracy(), 0.5);
  EXPECT_EQ(r.gender.accuracy(), 0.5);

  ReportOptions per_trial;
  per_trial.attribute_unit = AttributeUnit::per_trial;
  auto t = compute_report(v, meta, per_trial);
  EXPECT_EQ(t.accent.total, 1u);
  EXPECT_EQ(t.accent.accuracy(), 0.0);
}

TEST(Report, NonGeographicMentionIsNoPrediction) {
  MetadataMap meta;
  meta["id1"] = {"id1", Gender::unknown, "GB"};
  ScoredTrial st = scored(0, true, 1.0);
  st.trial = {true, UtteranceId("id1/a"), UtteranceId("id1/b")};
  ParsedResponse p;
  p.decision = Decision::yes;
  p.failed = false;
  p.accents[0] = {"neutral"};
  st.parsed = p;
  std::vector<ScoredTrial> v{st, scored(1, false, 0.0)};
  auto r = compute_report(v, meta);
  EXPECT_EQ(r.accent.predicted, 0u);
  EXPECT_EQ(r.accent.coverage(), 0.0);
  EXPECT_FALSE(r.accent.accuracy());
}

TEST(Report, DocumentAndTable) {
  std::vector<ScoredTrial> v{scored(0, true, 2.0), scored(1, false, -1.0)};
  auto r = compute_report(v, {});
  std::vector<SplitReport> splits{{"o", "h", r}};
  auto doc = report_document("m", splits, r);
  EXPECT_EQ(doc["schema"], "verilm.report/1");
  EXPECT_EQ(doc["splits"][0]["split"], "o");
  EXPECT_EQ(doc["splits"][0]["eer"], 0.0);
  auto table = render_table("m", splits, r);
  EXPECT_NE(table.find("0.00%"), std::string::npos);
  EXPECT_EQ(failure_mode_from_string("strict"), FailureMode::strict);
  EXPECT_THROW(failure_mode_from_string("lenient"), ConfigError);
}

}  // namespace
}  // namespace verilm
