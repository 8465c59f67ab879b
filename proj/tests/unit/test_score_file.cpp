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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "verilm/error.hpp"
#include "verilm/score_file.hpp"

namespace verilm {
namespace {

namespace fs = std::filesystem;

ScoreFileHeader sample_header() {
  ScoreFileHeader h;
  h.config_hash = "abc123";
  h.config = {{"seed", 1}};
  h.split = "o";
  h.protocol = Protocol::confidence;
  h.template_id = "confidence";
  h.template_hash = "ffff";
  h.backend_id = "oracle";
  h.n_trials = 3;
  return h;
}

ScoredTrial sample_row(std::size_t i, bool failed) {
  ScoredTrial st;
  st.index = i;
  st.trial = {i % 2 == 0, UtteranceId("id1/a" + std::to_string(i)), UtteranceId("id2/b")};
  st.failed = failed;
  if (!failed) st.score = 12.5 + double(i);
  ParsedResponse p;
  p.decision = failed ? Decision::none : Decision::yes;
  if (!failed) p.confidence = 12 + int(i);
  p.failed = failed;
  p.gender = {Gender::male, Gender::unknown};
  p.accents[1] = {"scottish"};
  p.disagreement = i == 1;
  st.parsed = p;
  st.backend_id = "oracle";
  st.template_id = "confidence";
  st.attempts = failed ? 3 : 1;
  if (failed) st.error = "HTTP 500";
  return st;
}

void expect_same(const ScoredTrial& a, const ScoredTrial& b) {
  EXPECT_EQ(a.index, b.index);
  EXPECT_EQ(a.trial, b.trial);
  EXPECT_EQ(a.score, b.score);
  EXPECT_EQ(a.failed, b.failed);
  EXPECT_EQ(a.parsed, b.parsed);
  EXPECT_EQ(a.logits, b.logits);
  EXPECT_EQ(a.backend_id, b.backend_id);
  EXPECT_EQ(a.template_id, b.template_id);
  EXPECT_EQ(a.attempts, b.attempts);
  EXPECT_EQ(a.error, b.error);
}

class ScoreFileTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("verilm_sf_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(ScoreFileTest, RoundTrip) {
  auto path = dir_ / "s.jsonl";
  {
    auto w = ScoreFileWriter::create(path, sample_header());
    for (std::size_t i = 0; i < 3; ++i) w.write(sample_row(i, i == 2));
  }
  auto f = read_score_file(path);
  EXPECT_FALSE(f.torn_tail);
  EXPECT_EQ(f.valid_bytes, fs::file_size(path));
  EXPECT_EQ(f.header.config_hash, "abc123");
  EXPECT_EQ(f.header.protocol, Protocol::confidence);
  EXPECT_EQ(f.header.n_trials, 3u);
  EXPECT_EQ(f.header.config, sample_header().config);
  ASSERT_EQ(f.rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) expect_same(f.rows[i], sample_row(i, i == 2));
}

TEST_F(ScoreFileTest, LogitsRoundTripExactly) {
  ScoredTrial st = sample_row(0, false);
  st.parsed.reset();
  st.logits = {0.1 + 0.2, -1.0 / 3.0};
  st.score = st.logits->first - st.logits->second;
  st.answer_position = "first_generated";
  auto back = scored_trial_from_json(to_json(st));
  expect_same(back, st);
  EXPECT_EQ(back.answer_position, "first_generated");
}

TEST_F(ScoreFileTest, TornTailIsDroppedAndAppendResumes) {
  auto path = dir_ / "s.jsonl";
  {
    auto w = ScoreFileWriter::create(path, sample_header());
    w.write(sample_row(0, false));
    w.write(sample_row(1, false));
  }
  auto good = fs::file_size(path);
  {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    out << R"({"type":"trial","index":2,"lab)";
  }
  auto f = read_score_file(path);
  EXPECT_TRUE(f.torn_tail);
  EXPECT_EQ(f.rows.size(), 2u);
  EXPECT_EQ(f.valid_bytes, good);
  {
    auto w = ScoreFileWriter::append_to(path, f.valid_bytes);
    w.write(sample_row(2, true));
  }
  auto g = read_score_file(path);
  EXPECT_FALSE(g.torn_tail);
  ASSERT_EQ(g.rows.size(), 3u);
  expect_same(g.rows[2], sample_row(2, true));
}

TEST(ScoreFileParse, Errors) {
  EXPECT_THROW(parse_score_file(""), ParseError);
  auto header = to_json(sample_header()).dump();
  try {
    parse_score_file(header + "\n{not json}\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_score_file(header + "\n" + header + "\n"), ParseError);
}

}  // namespace
}  // namespace verilm
