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

#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "verilm/scoring.hpp"

namespace verilm {

inline constexpr std::string_view kScoreSchema = "verilm.scores/1";

/// First line of a score file. `config_hash` identifies the scoring
/// configuration; rows from a different hash are never mixed in.
struct ScoreFileHeader {
  std::string config_hash;
  nlohmann::json config = nlohmann::json::object();
  std::string split;
  Protocol protocol = Protocol::llr;
  std::string template_id;
  std::string template_hash;
  std::string backend_id;
  std::size_t n_trials = 0;
};

nlohmann::json to_json(const ParsedResponse& p);
ParsedResponse parsed_response_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScoredTrial& st);
ScoredTrial scored_trial_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScoreFileHeader& h);
ScoreFileHeader score_header_from_json(const nlohmann::json& j);

struct ScoreFile {
  ScoreFileHeader header;
  std::vector<ScoredTrial> rows;
  // Length of the well-formed prefix; a torn final line (from a killed run)
  // is excluded.
  std::size_t valid_bytes = 0;
  bool torn_tail = false;
};

/// Throws ParseError on schema mismatch or a corrupt line before the tail.
ScoreFile parse_score_file(std::string_view text);
ScoreFile read_score_file(const std::filesystem::path& path);

/// Append-only JSON-lines writer. Each row is flushed as it is written.
class ScoreFileWriter {
 public:
  ScoreFileWriter() = default;
  ScoreFileWriter(const ScoreFileWriter&) = delete;
  ScoreFileWriter& operator=(const ScoreFileWriter&) = delete;
  ScoreFileWriter(ScoreFileWriter&& o) noexcept : f_(std::exchange(o.f_, nullptr)) {}
  ScoreFileWriter& operator=(ScoreFileWriter&& o) noexcept;
  ~ScoreFileWriter();

  /// New file: writes the header.
  static ScoreFileWriter create(const std::filesystem::path& path, const ScoreFileHeader& header);
  /// Existing file: truncates to `valid_bytes` and appends.
  static ScoreFileWriter append_to(const std::filesystem::path& path, std::size_t valid_bytes);

  void write(const ScoredTrial& st);

 private:
  explicit ScoreFileWriter(std::FILE* f) : f_(f) {}
  void write_line(const std::string& line);
  std::FILE* f_ = nullptr;
};

}  // namespace verilm
