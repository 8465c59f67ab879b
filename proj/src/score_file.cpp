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

#include "verilm/score_file.hpp"

#include <fstream>
#include <sstream>

#include "verilm/error.hpp"

namespace verilm {

using nlohmann::json;

namespace {

Gender gender_from_string(std::string_view s) {
  if (s == "male") return Gender::male;
  if (s == "female") return Gender::female;
  return Gender::unknown;
}

Decision decision_from_string(std::string_view s) {
  if (s == "yes") return Decision::yes;
  if (s == "no") return Decision::no;
  return Decision::none;
}

std::string_view gender_field(Gender g) { return g == Gender::unknown ? "none" : to_string(g); }

}  // namespace

json to_json(const ParsedResponse& p) {
  json j;
  j["decision"] = to_string(p.decision);
  j["confidence"] = p.confidence ? json(*p.confidence) : json(nullptr);
  j["gender"] = {gender_field(p.gender[0]), gender_field(p.gender[1])};
  j["accents"] = {p.accents[0], p.accents[1]};
  j["failed"] = p.failed;
  j["disagreement"] = p.disagreement;
  j["attribution_ambiguous"] = p.attribution_ambiguous;
  return j;
}

ParsedResponse parsed_response_from_json(const json& j) {
  ParsedResponse p;
  p.decision = decision_from_string(j.at("decision").get<std::string>());
  if (!j.at("confidence").is_null()) p.confidence = j.at("confidence").get<int>();
  for (int a = 0; a < 2; ++a) {
    p.gender[a] = gender_from_string(j.at("gender").at(a).get<std::string>());
    p.accents[a] = j.at("accents").at(a).get<std::vector<std::string>>();
  }
  p.failed = j.at("failed").get<bool>();
  p.disagreement = j.value("disagreement", false);
  p.attribution_ambiguous = j.value("attribution_ambiguous", false);
  return p;
}

json to_json(const ScoredTrial& st) {
  json j;
  j["type"] = "trial";
  j["index"] = st.index;
  j["label"] = st.trial.target ? 1 : 0;
  j["enroll"] = st.trial.enroll.str();
  j["test"] = st.trial.test.str();
  j["score"] = st.score ? json(*st.score) : json(nullptr);
  j["failed"] = st.failed;
  j["attempts"] = st.attempts;
  j["backend_id"] = st.backend_id;
  j["template_id"] = st.template_id;
  if (st.parsed) j["parsed"] = to_json(*st.parsed);
  if (st.logits) j["logits"] = {st.logits->first, st.logits->second};
  if (!st.answer_position.empty()) j["answer_position"] = st.answer_position;
  if (!st.error.empty()) j["error"] = st.error;
  return j;
}

ScoredTrial scored_trial_from_json(const json& j) {
  ScoredTrial st;
  st.index = j.at("index").get<std::size_t>();
  st.trial.target = j.at("label").get<int>() == 1;
  st.trial.enroll = UtteranceId(j.at("enroll").get<std::string>());
  st.trial.test = UtteranceId(j.at("test").get<std::string>());
  if (!j.at("score").is_null()) st.score = j.at("score").get<double>();
  st.failed = j.at("failed").get<bool>();
  if (st.failed == st.score.has_value())
    throw ParseError(0, "score must be present exactly when the trial did not fail");
  st.attempts = j.value("attempts", 0);
  st.backend_id = j.value("backend_id", "");
  st.template_id = j.value("template_id", "");
  if (j.contains("parsed")) st.parsed = parsed_response_from_json(j.at("parsed"));
  if (j.contains("logits"))
    st.logits = {j.at("logits").at(0).get<double>(), j.at("logits").at(1).get<double>()};
  st.answer_position = j.value("answer_position", "");
  st.error = j.value("error", "");
  return st;
}

json to_json(const ScoreFileHeader& h) {
  json j;
  j["type"] = "header";
  j["schema"] = kScoreSchema;
  j["config_hash"] = h.config_hash;
  j["config"] = h.config;
  j["split"] = h.split;
  j["protocol"] = to_string(h.protocol);
  j["template_id"] = h.template_id;
  j["template_hash"] = h.template_hash;
  j["backend_id"] = h.backend_id;
  j["n_trials"] = h.n_trials;
  return j;
}

ScoreFileHeader score_header_from_json(const json& j) {
  if (j.value("type", "") != "header" || j.value("schema", "") != kScoreSchema)
    throw ParseError(1, "not a score file (expected schema " + std::string(kScoreSchema) + ")");
  ScoreFileHeader h;
  h.config_hash = j.at("config_hash").get<std::string>();
  h.config = j.value("config", json::object());
  h.split = j.value("split", "");
  h.protocol = protocol_from_string(j.at("protocol").get<std::string>());
  h.template_id = j.value("template_id", "");
  h.template_hash = j.value("template_hash", "");
  h.backend_id = j.value("backend_id", "");
  h.n_trials = j.value("n_trials", std::size_t{0});
  return h;
}

ScoreFile parse_score_file(std::string_view text) {
  ScoreFile out;
  std::size_t pos = 0, line_no = 0;
  bool have_header = false;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    ++line_no;
    if (nl == std::string_view::npos) {
      // No newline: the writer was interrupted mid-line.
      out.torn_tail = true;
      break;
    }
    auto line = text.substr(pos, nl - pos);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(line_no, std::string("score file: ") + e.what());
    }
    try {
      if (!have_header) {
        out.header = score_header_from_json(j);
        have_header = true;
      } else {
        if (j.value("type", "") != "trial") throw ParseError(line_no, "expected a trial row");
        out.rows.push_back(scored_trial_from_json(j));
      }
    } catch (const json::exception& e) {
      throw ParseError(line_no, std::string("score file: ") + e.what());
    } catch (const ParseError& e) {
      throw ParseError(line_no, e.what());
    }
    pos = nl + 1;
    out.valid_bytes = pos;
  }
  if (!have_header) throw ParseError(0, "score file has no header");
  return out;
}

ScoreFile read_score_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open score file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_score_file(ss.str());
}

ScoreFileWriter::~ScoreFileWriter() {
  if (f_) std::fclose(f_);
}

ScoreFileWriter& ScoreFileWriter::operator=(ScoreFileWriter&& o) noexcept {
  if (this != &o) {
    if (f_) std::fclose(f_);
    f_ = std::exchange(o.f_, nullptr);
  }
  return *this;
}

ScoreFileWriter ScoreFileWriter::create(const std::filesystem::path& path,
                                        const ScoreFileHeader& header) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw Error("cannot create score file " + path.string());
  ScoreFileWriter w(f);
  w.write_line(to_json(header).dump());
  return w;
}

ScoreFileWriter ScoreFileWriter::append_to(const std::filesystem::path& path,
                                           std::size_t valid_bytes) {
  std::error_code ec;
  std::filesystem::resize_file(path, valid_bytes, ec);
  if (ec) throw Error("cannot truncate score file " + path.string() + ": " + ec.message());
  std::FILE* f = std::fopen(path.c_str(), "ab");
  if (!f) throw Error("cannot append to score file " + path.string());
  return ScoreFileWriter(f);
}

void ScoreFileWriter::write(const ScoredTrial& st) { write_line(to_json(st).dump()); }

void ScoreFileWriter::write_line(const std::string& line) {
  if (std::fwrite(line.data(), 1, line.size(), f_) != line.size() || std::fputc('\n', f_) == EOF ||
      std::fflush(f_) != 0)
    throw Error("write to score file failed");
}

}  // namespace verilm
