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

#include "verilm/response_parser.hpp"

#include <algorithm>
#include <cctype>

#include "verilm/embedded_assets.hpp"
#include "verilm/error.hpp"

namespace verilm {
namespace {

struct Token {
  std::string text;  // lower-cased
  std::size_t begin;
  std::size_t end;
};

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_alnum(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    std::string word;
    while (j < text.size() && is_alnum(text[j])) {
      word += static_cast<char>(std::tolower(static_cast<unsigned char>(text[j])));
      ++j;
    }
    out.push_back({std::move(word), i, j});
    i = j;
  }
  return out;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), is_digit);
}

bool is_audio_noun(std::string_view w) {
  static constexpr std::string_view kNouns[] = {
      "audio", "audios", "speaker", "speakers", "recording", "recordings", "clip",
      "clips", "voice",  "voices", "sample",  "samples",  "utterance", "utterances"};
  return std::find(std::begin(kNouns), std::end(kNouns), w) != std::end(kNouns);
}

// Slot markers: 1 = first audio, 2 = second audio, 3 = both.
struct Marker {
  std::size_t token;
  int slot;
};

std::vector<Marker> find_markers(const std::vector<Token>& tokens) {
  std::vector<Marker> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& w = tokens[i].text;
    if (w == "first" || w == "1st") {
      out.push_back({i, 1});
    } else if (w == "second" || w == "2nd") {
      out.push_back({i, 2});
    } else if (w == "both") {
      out.push_back({i, 3});
    } else if (is_audio_noun(w) && i + 1 < tokens.size()) {
      const auto& n = tokens[i + 1].text;
      if (n == "1" || n == "one") out.push_back({i, 1});
      if (n == "2" || n == "two") out.push_back({i, 2});
    }
  }
  return out;
}

// Resolves the audio slot for a mention at token index `at`: nearest preceding
// marker, else positional order among unattributed mentions. Returns 0 when
// the mention cannot be placed.
class SlotAttributor {
 public:
  explicit SlotAttributor(std::vector<Marker> markers) : markers_(std::move(markers)) {}

  int slot_for(std::size_t at) {
    int slot = 0;
    for (const auto& m : markers_) {
      if (m.token >= at) break;
      slot = m.slot;
    }
    if (slot != 0) return slot;
    ++unattributed_;
    return unattributed_ <= 2 ? unattributed_ : 0;
  }

 private:
  std::vector<Marker> markers_;
  int unattributed_ = 0;
};

struct GenderScan {
  std::array<Gender, 2> gender{Gender::unknown, Gender::unknown};
  bool ambiguous = false;
};

GenderScan scan_gender(const std::vector<Token>& tokens, const std::vector<Marker>& markers) {
  GenderScan out;
  SlotAttributor attributor(markers);
  auto assign = [&](int idx, Gender g) {
    if (out.gender[idx] == Gender::unknown) {
      out.gender[idx] = g;
    } else if (out.gender[idx] != g) {
      out.ambiguous = true;
    }
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    // "female" is checked first; tokens are whole words so "male" never
    // matches inside "female".
    Gender g = Gender::unknown;
    if (tokens[i].text == "female") {
      g = Gender::female;
    } else if (tokens[i].text == "male") {
      g = Gender::male;
    }
    if (g == Gender::unknown) continue;
    int slot = attributor.slot_for(i);
    if (slot == 0) {
      out.ambiguous = true;
      continue;
    }
    if (slot & 1) assign(0, g);
    if (slot & 2) assign(1, g);
  }
  return out;
}

bool is_score_word(std::string_view w) {
  static constexpr std::string_view kStems[] = {"confiden", "score",   "likelihood", "certain",
                                                "probab",   "rating",  "percent"};
  return std::any_of(std::begin(kStems), std::end(kStems),
                     [&](std::string_view s) { return w.starts_with(s); });
}

std::string normalize_term(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (is_alnum(c)) {
      if (pending_space && !out.empty()) out += ' ';
      pending_space = false;
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      pending_space = true;
    }
  }
  return out;
}

std::string_view strip_accent_suffix(std::string_view s) {
  for (std::string_view suffix : {" accents", " accent"})
    if (s.size() > suffix.size() && s.ends_with(suffix)) return s.substr(0, s.size() - suffix.size());
  return s;
}

}  // namespace

std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::yes: return "yes";
    case Decision::no: return "no";
    default: return "none";
  }
}

std::string_view to_string(Specificity s) {
  switch (s) {
    case Specificity::narrower: return "narrower";
    case Specificity::broader: return "broader";
    default: return "exact";
  }
}

std::string_view to_string(AccentOutcome o) {
  switch (o) {
    case AccentOutcome::correct: return "correct";
    case AccentOutcome::wrong: return "wrong";
    default: return "no_prediction";
  }
}

Decision parse_decision(std::string_view text, MatchPolicy policy) {
  Decision found = Decision::none;
  for (const auto& t : tokenize(text)) {
    Decision d = t.text == "yes" ? Decision::yes : t.text == "no" ? Decision::no : Decision::none;
    if (d == Decision::none) continue;
    found = d;
    if (policy == MatchPolicy::first) break;
  }
  return found;
}

namespace {

// Sentence-ending punctuation between two tokens.
bool sentence_break(std::string_view text, std::size_t from, std::size_t to) {
  for (std::size_t k = from; k < to; ++k)
    if (text[k] == '\n' || text[k] == '!' || text[k] == '?' ||
        (text[k] == '.' && (k + 1 == text.size() || text[k + 1] == ' ')))
      return true;
  return false;
}

}  // namespace

std::optional<int> parse_confidence(std::string_view text, MatchPolicy policy) {
  auto tokens = tokenize(text);
  auto at = [&](std::size_t pos) { return pos < text.size() ? text[pos] : '\0'; };
  std::optional<int> with_context;
  std::optional<int> bare;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (!all_digits(t.text)) continue;
    // Part of a decimal, signed number, range, or fraction denominator.
    if (t.begin > 0) {
      char before = text[t.begin - 1];
      if (before == '-' || before == '+' || before == '/') continue;
      if ((before == '.' || before == ',') && t.begin > 1 && is_digit(text[t.begin - 2])) continue;
    }
    char after = at(t.end);
    if ((after == '.' || after == ',' || after == '-') && is_digit(at(t.end + 1))) continue;
    if (i > 0 && is_audio_noun(tokens[i - 1].text)) continue;
    if (i > 1 && tokens[i - 2].text == "out" && tokens[i - 1].text == "of") continue;
    if (t.text.size() > 3) continue;
    int value = std::stoi(t.text);
    if (value < 0 || value > 100) continue;

    bool context = after == '%';
    if (!context && i + 1 < tokens.size()) {
      const auto& next = tokens[i + 1].text;
      context = next == "percent" || (after == '/' && next == "100") ||
                (next == "out" && i + 3 < tokens.size() && tokens[i + 2].text == "of" &&
                 tokens[i + 3].text == "100");
    }
    for (std::size_t back = 1; !context && back <= 6 && back <= i; ++back) {
      if (sentence_break(text, tokens[i - back].end, tokens[i - back + 1].begin)) break;
      context = is_score_word(tokens[i - back].text);
    }

    auto& slot = context ? with_context : bare;
    if (policy == MatchPolicy::last || !slot) slot = value;
  }
  return with_context ? with_context : bare;
}

Gender parse_gender(std::string_view text, int audio_index) {
  if (audio_index != 1 && audio_index != 2) throw ConfigError("audio index must be 1 or 2");
  auto tokens = tokenize(text);
  return scan_gender(tokens, find_markers(tokens)).gender[audio_index - 1];
}

AccentGazetteer AccentGazetteer::from_csv(std::string_view csv) {
  AccentGazetteer g;
  std::size_t line_no = 0;
  bool header = true;
  while (!csv.empty()) {
    ++line_no;
    auto nl = csv.find('\n');
    std::string_view line = csv.substr(0, nl);
    csv.remove_prefix(nl == std::string_view::npos ? csv.size() : nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (normalize_term(line).empty()) continue;
    if (header) {
      header = false;
      if (normalize_term(line) != "term country specificity")
        throw ParseError(line_no, "gazetteer header must be 'term,country,specificity'");
      continue;
    }
    std::vector<std::string_view> cols;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      cols.push_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cols.size() != 3) throw ParseError(line_no, "expected 3 columns");
    auto term = normalize_term(cols[0]);
    auto country = normalize_term(cols[1]);
    auto spec = normalize_term(cols[2]);
    if (term.empty() || country.size() != 2) throw ParseError(line_no, "bad term or country code");
    for (auto& c : country) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    GazetteerEntry e{country, Specificity::exact};
    if (spec == "narrower") {
      e.specificity = Specificity::narrower;
    } else if (spec == "broader") {
      e.specificity = Specificity::broader;
    } else if (spec != "exact") {
      throw ParseError(line_no, "specificity must be narrower|exact|broader");
    }
    g.add(term, e);
  }
  return g;
}

const AccentGazetteer& AccentGazetteer::builtin() {
  static const AccentGazetteer g = from_csv(assets::gazetteer);
  return g;
}

void AccentGazetteer::add(std::string term, GazetteerEntry entry) {
  term = normalize_term(term);
  max_words_ = std::max<std::size_t>(max_words_, std::count(term.begin(), term.end(), ' ') + 1);
  entries_[std::move(term)].push_back(std::move(entry));
}

std::span<const GazetteerEntry> AccentGazetteer::lookup(std::string_view term) const {
  auto it = entries_.find(term);
  if (it == entries_.end()) return {};
  return it->second;
}

AccentOutcome score_accent(std::string_view mention, std::string_view truth_country,
                           const AccentGazetteer& gazetteer) {
  auto norm = normalize_term(mention);
  auto entries = gazetteer.lookup(norm);
  if (entries.empty()) entries = gazetteer.lookup(strip_accent_suffix(norm));
  if (entries.empty()) return AccentOutcome::no_prediction;
  for (const auto& e : entries)
    if (e.country == truth_country && e.specificity != Specificity::broader)
      return AccentOutcome::correct;
  return AccentOutcome::wrong;
}

ParsedResponse parse_response(std::string_view text, Protocol protocol,
                              const ParserOptions& options) {
  const auto& gaz = options.gazetteer ? *options.gazetteer : AccentGazetteer::builtin();
  ParsedResponse out;
  out.decision = parse_decision(text, options.policy);
  out.confidence = parse_confidence(text, options.policy);
  out.failed = is_failure(protocol, out.decision, out.confidence);
  if (out.confidence && out.decision != Decision::none)
    out.disagreement = (out.decision == Decision::no && *out.confidence > 50) ||
                       (out.decision == Decision::yes && *out.confidence < 50);

  auto tokens = tokenize(text);
  auto markers = find_markers(tokens);
  auto g = scan_gender(tokens, markers);
  out.gender = g.gender;
  out.attribution_ambiguous = g.ambiguous;

  SlotAttributor attributor(markers);
  for (std::size_t i = 0; i < tokens.size();) {
    std::size_t matched = 0;
    std::string term;
    for (std::size_t len = std::min(gaz.max_term_words(), tokens.size() - i); len >= 1; --len) {
      std::string cand = tokens[i].text;
      for (std::size_t k = 1; k < len; ++k) cand += ' ' + tokens[i + k].text;
      if (!gaz.lookup(cand).empty()) {
        matched = len;
        term = std::move(cand);
        break;
      }
    }
    if (matched == 0) {
      ++i;
      continue;
    }
    std::size_t last = i + matched - 1;
    if (!term.ends_with("accent") && last + 1 < tokens.size() &&
        (tokens[last + 1].text == "accent" || tokens[last + 1].text == "accents"))
      ++last;
    std::string raw(text.substr(tokens[i].begin, tokens[last].end - tokens[i].begin));
    int slot = attributor.slot_for(i);
    if (slot == 0) out.attribution_ambiguous = true;
    if (slot & 1) out.accents[0].push_back(raw);
    if (slot & 2) out.accents[1].push_back(raw);
    i = last + 1;
  }
  return out;
}

}  // namespace verilm
