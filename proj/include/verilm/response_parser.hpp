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

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "verilm/prompting.hpp"
#include "verilm/trial_store.hpp"

namespace verilm {

enum class Decision : std::uint8_t { none, yes, no };
std::string_view to_string(Decision d);

/// Which occurrence wins when a response contains several candidates.
enum class MatchPolicy { last, first };

struct ParsedResponse {
  Decision decision = Decision::none;
  std::optional<int> confidence;
  // Index 0 = first audio (enroll), 1 = second audio (test). Gender::unknown
  // means no prediction.
  std::array<Gender, 2> gender{Gender::unknown, Gender::unknown};
  std::array<std::vector<std::string>, 2> accents;
  bool failed = true;
  // Decision and confidence point different ways (no with > 50, yes with < 50).
  bool disagreement = false;
  // Conflicting attribute mentions for one audio; the first one is kept.
  bool attribution_ambiguous = false;

  friend bool operator==(const ParsedResponse&, const ParsedResponse&) = default;
};

/// Failure rule: no decision, or no confidence under the confidence protocol.
constexpr bool is_failure(Protocol protocol, Decision decision, std::optional<int> confidence) {
  return decision == Decision::none || (protocol == Protocol::confidence && !confidence);
}

Decision parse_decision(std::string_view text, MatchPolicy policy = MatchPolicy::last);

/// Standalone integer in [0, 100]. Numbers near score vocabulary
/// ("confidence", "score", "%", "/100", ...) win over bare numbers; numbers
/// naming an audio ("audio 2") are never taken.
std::optional<int> parse_confidence(std::string_view text,
                                    MatchPolicy policy = MatchPolicy::last);

/// Literal whole-word "male"/"female" attributed to audio 1 or 2
/// (`audio_index` is 1-based).
Gender parse_gender(std::string_view text, int audio_index);

enum class Specificity : std::uint8_t { narrower, exact, broader };
std::string_view to_string(Specificity s);

struct GazetteerEntry {
  std::string country;  // ISO-3166 alpha-2
  Specificity specificity = Specificity::exact;
};

/// Accent / region vocabulary. Terms are case-folded; one term may map to
/// several countries ("hispanic" is broader than MX, ES, ...).
class AccentGazetteer {
 public:
  AccentGazetteer() = default;
  /// CSV with header `term,country,specificity`.
  static AccentGazetteer from_csv(std::string_view csv);
  static const AccentGazetteer& builtin();

  void add(std::string term, GazetteerEntry entry);
  /// Entries for a normalized term, empty when unknown.
  std::span<const GazetteerEntry> lookup(std::string_view term) const;
  std::size_t max_term_words() const { return max_words_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::vector<GazetteerEntry>, std::less<>> entries_;
  std::size_t max_words_ = 1;
};

enum class AccentOutcome : std::uint8_t { no_prediction, correct, wrong };
std::string_view to_string(AccentOutcome o);

/// A mention naming the true country, or a region inside it, is correct; a
/// different country or a broader region is wrong; a non-geographic mention
/// is no prediction.
AccentOutcome score_accent(std::string_view mention, std::string_view truth_country,
                           const AccentGazetteer& gazetteer);

struct ParserOptions {
  MatchPolicy policy = MatchPolicy::last;
  const AccentGazetteer* gazetteer = nullptr;  // null = builtin
};

ParsedResponse parse_response(std::string_view text, Protocol protocol,
                              const ParserOptions& options = {});

}  // namespace verilm
