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

#include <random>

#include <gtest/gtest.h>

#include "parser_fixtures.hpp"
#include "verilm/error.hpp"
#include "verilm/response_parser.hpp"

namespace verilm {
namespace {

TEST(Decision, Examples) {
  EXPECT_EQ(parse_decision("Answer: Yes."), Decision::yes);
  EXPECT_EQ(parse_decision("They differ. No."), Decision::no);
  EXPECT_EQ(parse_decision("The speakers sound alike."), Decision::none);
  EXPECT_EQ(parse_decision("yes YES Yes"), Decision::yes);
  EXPECT_EQ(parse_decision("Nope. Yesterday. Noise. Eyes."), Decision::none);
}

TEST(Decision, LastWinsFirstOptional) {
  EXPECT_EQ(parse_decision("Yes at first, but no.", MatchPolicy::last), Decision::no);
  EXPECT_EQ(parse_decision("Yes at first, but no.", MatchPolicy::first), Decision::yes);
}

TEST(Confidence, Examples) {
  EXPECT_EQ(parse_confidence("Yes, confidence: 85"), 85);
  EXPECT_EQ(parse_confidence("score of 150"), std::nullopt);
  EXPECT_EQ(parse_confidence("No. 20."), 20);
  EXPECT_EQ(parse_confidence("confidence 10/100"), 10);
  EXPECT_EQ(parse_confidence("7 out of 100"), 7);
  EXPECT_EQ(parse_confidence("Audio 2 is louder; confidence 64"), 64);
  EXPECT_EQ(parse_confidence("62.5"), std::nullopt);
  EXPECT_EQ(parse_confidence("-3"), std::nullopt);
  EXPECT_EQ(parse_confidence("30-40"), std::nullopt);
  EXPECT_EQ(parse_confidence("1000"), std::nullopt);
}

TEST(Confidence, ContextBeatsBareNumbers) {
  EXPECT_EQ(parse_confidence("Confidence: 70. The clip is 3 seconds."), 70);
  EXPECT_EQ(parse_confidence("I heard 4 words and 9 words."), 9);
  EXPECT_EQ(parse_confidence("I heard 4 words and 9 words.", MatchPolicy::first), 4);
}

TEST(Confidence, NeverOutOfRange) {
  std::mt19937_64 rng(11);
  const char* pieces[] = {"confidence", "score", ":", " ", "%", "/", "-", ".", "out of", "100",
                          "0",          "50",    "101", "999", "12", "7", "yes", "no", "audio"};
  for (int i = 0; i < 5000; ++i) {
    std::string text;
    int n = 1 + int(rng() % 12);
    for (int k = 0; k < n; ++k) {
      text += pieces[rng() % std::size(pieces)];
      if (rng() % 2) text += ' ';
    }
    auto c = parse_confidence(text);
    if (c) {
      EXPECT_GE(*c, 0) << text;
      EXPECT_LE(*c, 100) << text;
    }
  }
}

TEST(Gender, Examples) {
  EXPECT_EQ(parse_gender("First audio: a female speaker", 1), Gender::female);
  EXPECT_EQ(parse_gender("a man is speaking", 1), Gender::unknown);
  EXPECT_EQ(parse_gender("a man is speaking", 2), Gender::unknown);
  EXPECT_EQ(parse_gender("male voice ... female voice", 1), Gender::male);
  EXPECT_EQ(parse_gender("male voice ... female voice", 2), Gender::female);
  EXPECT_THROW(parse_gender("male", 3), ConfigError);
}

TEST(Gender, SubstringSafety) {
  const char* only_male[] = {"male", "a male speaker", "MALE.", "Both are male", "male, male"};
  const char* only_female[] = {"female", "a female speaker", "FEMALE!", "Both are female"};
  for (const char* t : only_male)
    for (int k : {1, 2}) EXPECT_NE(parse_gender(t, k), Gender::female) << t;
  for (const char* t : only_female)
    for (int k : {1, 2}) EXPECT_NE(parse_gender(t, k), Gender::male) << t;
  EXPECT_EQ(parse_gender("The tamale vendor; females; maleness", 1), Gender::unknown);
}

TEST(Accent, ScottishAndHispanicExamples) {
  const auto& g = AccentGazetteer::builtin();
  EXPECT_EQ(score_accent("Scottish accent", "GB", g), AccentOutcome::correct);
  EXPECT_EQ(score_accent("London accent", "GB", g), AccentOutcome::correct);
  EXPECT_EQ(score_accent("Hispanic accent", "MX", g), AccentOutcome::wrong);
  EXPECT_EQ(score_accent("warm tone", "US", g), AccentOutcome::no_prediction);
  EXPECT_EQ(score_accent("American", "US", g), AccentOutcome::correct);
  EXPECT_EQ(score_accent("American accent", "GB", g), AccentOutcome::wrong);
}

TEST(Accent, GazetteerEntriesAreTotal) {
  const auto& g = AccentGazetteer::builtin();
  EXPECT_GE(g.size(), 60u);
  for (const char* t : {"scottish", "hispanic", "english accent", "north american"})
    EXPECT_FALSE(g.lookup(t).empty()) << t;
}

TEST(Accent, CsvErrors) {
  EXPECT_THROW(AccentGazetteer::from_csv("term,country\nx,US\n"), ParseError);
  EXPECT_THROW(AccentGazetteer::from_csv("term,country,specificity\nx,USA,exact\n"), ParseError);
  EXPECT_THROW(AccentGazetteer::from_csv("term,country,specificity\nx,US,wide\n"), ParseError);
  auto g = AccentGazetteer::from_csv("term,country,specificity\nMartian,MA,exact\n");
  EXPECT_EQ(score_accent("martian accent", "MA", g), AccentOutcome::correct);
}

TEST(ParseResponse, FailedIsPureFunctionOfFields) {
  std::mt19937_64 rng(3);
  const char* words[] = {"Yes", "No", "confidence", "85", "150", "maybe", "score:", "40%", "."};
  for (int i = 0; i < 3000; ++i) {
    std::string text;
    for (int k = 0, n = 1 + int(rng() % 8); k < n; ++k) text += std::string(words[rng() % 9]) + " ";
    for (auto protocol : {Protocol::confidence, Protocol::llr}) {
      auto p = parse_response(text, protocol);
      EXPECT_EQ(p.failed, is_failure(protocol, p.decision, p.confidence)) << text;
      const bool expect = p.decision == Decision::none ||
                          (protocol == Protocol::confidence && !p.confidence.has_value());
      EXPECT_EQ(p.failed, expect) << text;
    }
  }
}

TEST(ParseResponse, DisagreementIsNotFailure) {
  auto p = parse_response("No. Confidence: 90", Protocol::confidence);
  EXPECT_TRUE(p.disagreement);
  EXPECT_FALSE(p.failed);
}

TEST(Fixtures, CorpusAgreesWithHandLabels) {
  auto corpus = testing::load_parser_corpus(VERILM_FIXTURES "/parser_fixtures.jsonl");
  ASSERT_GE(corpus.cases.size(), 60u);
  std::size_t failures = 0;
  for (const auto& f : corpus.cases) {
    auto got = parse_response(f.text, f.protocol);
    EXPECT_EQ(got, f.expected) << f.id << ": " << f.text;
    if (!f.accent_truth.empty())
      EXPECT_EQ(testing::accent_outcomes(got, f.accent_truth), f.accent_outcomes) << f.id;
    failures += got.failed ? 1 : 0;
  }
  EXPECT_EQ(failures, corpus.hand_counted_failures);
}

}  // namespace
}  // namespace verilm
