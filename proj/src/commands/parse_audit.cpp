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

#include <ostream>

#include <fmt/format.h>

#include "verilm/commands.hpp"
#include "verilm/error.hpp"
#include "verilm/response_parser.hpp"
#include "verilm/score_file.hpp"

namespace verilm::cli {

// Input: JSON lines with a "text" field (other fields are carried through as
// the row id when "id" is present).
int run_parse_audit(const ParseAuditArgs& args, std::ostream& log) {
  const std::string text = read_text(args.responses);
  std::size_t n = 0, failed = 0, no_decision = 0, no_confidence = 0, no_both = 0;
  std::size_t disagreement = 0, ambiguous = 0, with_gender = 0, with_accent = 0;
  nlohmann::json rows = nlohmann::json::array();
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string_view line(text.data() + pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, std::string("parse-audit: ") + e.what());
    }
    if (!j.contains("text") || !j["text"].is_string())
      throw ParseError(line_no, "parse-audit: row without a \"text\" string");
    const auto parsed = parse_response(j["text"].get<std::string>(), args.protocol);
    ++n;
    const bool missing_decision = parsed.decision == Decision::none;
    const bool missing_conf = args.protocol == Protocol::confidence && !parsed.confidence;
    if (parsed.failed) ++failed;
    if (missing_decision && missing_conf) ++no_both;
    else if (missing_decision) ++no_decision;
    else if (missing_conf) ++no_confidence;
    if (parsed.disagreement) ++disagreement;
    if (parsed.attribution_ambiguous) ++ambiguous;
    if (parsed.gender[0] != Gender::unknown || parsed.gender[1] != Gender::unknown) ++with_gender;
    if (!parsed.accents[0].empty() || !parsed.accents[1].empty()) ++with_accent;
    nlohmann::json row = {{"line", line_no}, {"parsed", to_json(parsed)}};
    if (j.contains("id")) row["id"] = j["id"];
    rows.push_back(std::move(row));
  }
  if (n == 0) throw ConfigError("parse-audit: no responses in " + args.responses.string());
  const double rate = double(failed) / double(n);
  nlohmann::json report = {{"protocol", to_string(args.protocol)},
                           {"n_responses", n},
                           {"n_failed", failed},
                           {"failure_rate", rate},
                           {"taxonomy",
                            {{"missing_decision", no_decision},
                             {"missing_confidence", no_confidence},
                             {"missing_both", no_both}}},
                           {"n_disagreement", disagreement},
                           {"n_attribution_ambiguous", ambiguous},
                           {"n_with_gender", with_gender},
                           {"n_with_accent", with_accent},
                           {"rows", rows}};
  if (args.out) write_text(*args.out, report.dump(2) + "\n");
  log << fmt::format(
      "parse-audit: {} responses, {} failed ({:.2f}%): missing decision {}, missing confidence {}, "
      "missing both {} | disagreement {}, ambiguous attribution {}, gender mentions {}, accent "
      "mentions {}\n",
      n, failed, 100 * rate, no_decision, no_confidence, no_both, disagreement, ambiguous, with_gender,
      with_accent);
  return kOk;
}

}  // namespace verilm::cli
