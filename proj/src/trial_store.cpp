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

#include "verilm/trial_store.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "verilm/error.hpp"

namespace verilm {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(line_no, line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

UtteranceId::UtteranceId(std::string value) : value_(std::move(value)) {
  if (value_.empty()) throw ParseError(0, "empty utterance id");
  if (value_.find('/') == std::string::npos)
    throw ParseError(0, "utterance id has no speaker prefix: '" + value_ + "'");
}

std::string speaker_of(std::string_view utt) {
  auto slash = utt.find('/');
  if (slash == std::string_view::npos || slash == 0)
    throw ParseError(0, "utterance id has no speaker prefix: '" + std::string(utt) + "'");
  return std::string(utt.substr(0, slash));
}

std::string speaker_of(const UtteranceId& utt) { return speaker_of(std::string_view(utt.str())); }

TrialSet::TrialSet(std::string name, std::vector<Trial> trials)
    : name_(std::move(name)), trials_(std::move(trials)) {
  for (const auto& t : trials_) {
    n_target_ += t.target ? 1 : 0;
    n_self_ += t.is_self_trial() ? 1 : 0;
  }
}

TrialSet parse_trial_list(std::string_view text, std::string name) {
  std::vector<Trial> trials;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    auto fields = split_ws(line);
    if (fields.empty()) return;
    if (fields.size() != 3)
      throw ParseError(line_no, "expected 3 fields (label enroll test), got " +
                                    std::to_string(fields.size()));
    Trial t;
    if (fields[0] == "1") {
      t.target = true;
    } else if (fields[0] == "0") {
      t.target = false;
    } else {
      throw ParseError(line_no, "bad label '" + std::string(fields[0]) + "', expected 0 or 1");
    }
    try {
      t.enroll = UtteranceId(std::string(fields[1]));
      t.test = UtteranceId(std::string(fields[2]));
    } catch (const ParseError& e) {
      throw ParseError(line_no, e.what());
    }
    trials.push_back(std::move(t));
  });
  return TrialSet(std::move(name), std::move(trials));
}

std::string serialize_trial_list(const TrialSet& set) {
  std::string out;
  for (const auto& t : set.trials()) {
    out += t.target ? '1' : '0';
    out += ' ';
    out += t.enroll.str();
    out += ' ';
    out += t.test.str();
    out += '\n';
  }
  return out;
}

std::vector<LabelViolation> verify_labels(const TrialSet& set) {
  std::vector<LabelViolation> out;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& t = set[i];
    bool same = speaker_of(t.enroll) == speaker_of(t.test);
    if (same != t.target) out.push_back({i, t.target, same});
  }
  return out;
}

std::string_view to_string(Gender g) {
  switch (g) {
    case Gender::male: return "male";
    case Gender::female: return "female";
    default: return "unknown";
  }
}

MetadataMap load_metadata(std::string_view csv) {
  MetadataMap out;
  bool header_seen = false;
  for_each_line(csv, [&](std::size_t line_no, std::string_view line) {
    if (trim(line).empty()) return;
    std::vector<std::string_view> cols;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      cols.push_back(trim(line.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!header_seen) {
      header_seen = true;
      if (cols.size() < 3 || lower(cols[0]) != "id" || lower(cols[1]) != "gender" ||
          lower(cols[2]) != "nationality")
        throw ParseError(line_no, "metadata header must be 'id,gender,nationality'");
      return;
    }
    if (cols.size() != 3) throw ParseError(line_no, "expected 3 columns");
    if (cols[0].empty()) throw ParseError(line_no, "empty speaker id");
    SpeakerMetadata m;
    m.speaker_id = std::string(cols[0]);
    auto g = lower(cols[1]);
    if (g == "m" || g == "male") {
      m.gender = Gender::male;
    } else if (g == "f" || g == "female") {
      m.gender = Gender::female;
    }
    auto nat = std::string(cols[2]);
    for (auto& c : nat) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (nat == "UK") nat = "GB";
    if (nat == "USA") nat = "US";
    if (nat != "UNKNOWN" && nat != "?") m.nationality = nat;
    if (!out.emplace(m.speaker_id, m).second)
      throw ParseError(line_no, "duplicate speaker id '" + m.speaker_id + "'");
  });
  if (!header_seen) throw ParseError(0, "metadata file is empty");
  return out;
}

std::string serialize_metadata(const MetadataMap& metadata) {
  std::string out = "id,gender,nationality\n";
  for (const auto& [id, m] : metadata) {
    out += id;
    out += ',';
    out += m.gender == Gender::male ? "m" : m.gender == Gender::female ? "f" : "unknown";
    out += ',';
    out += m.nationality.empty() ? "unknown" : m.nationality;
    out += '\n';
  }
  return out;
}

Manifest parse_manifest(std::string_view text) {
  Manifest out;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    auto t = trim(line);
    if (t.empty()) return;
    try {
      out.emplace_back(std::string(t));
    } catch (const ParseError& e) {
      throw ParseError(line_no, e.what());
    }
  });
  return out;
}

std::string serialize_manifest(const Manifest& manifest) {
  std::string out;
  for (const auto& u : manifest) {
    out += u.str();
    out += '\n';
  }
  return out;
}

Manifest subset_xs(const Manifest& manifest, double speaker_fraction,
                   std::size_t utts_per_speaker, std::uint64_t seed) {
  if (manifest.empty()) throw ConfigError("subset_xs: empty manifest");
  if (!(speaker_fraction > 0.0 && speaker_fraction <= 1.0))
    throw ConfigError("subset_xs: speaker fraction must be in (0, 1]");
  if (utts_per_speaker < 1) throw ConfigError("subset_xs: utterances per speaker must be >= 1");

  // Speakers in first-appearance order, with the manifest positions of their utterances.
  std::vector<std::string> speakers;
  std::unordered_map<std::string, std::vector<std::size_t>> positions;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    auto spk = speaker_of(manifest[i]);
    auto [it, fresh] = positions.try_emplace(spk);
    if (fresh) speakers.push_back(spk);
    it->second.push_back(i);
  }

  auto n_keep = static_cast<std::size_t>(
      std::llround(speaker_fraction * static_cast<double>(speakers.size())));
  if (n_keep == 0) throw ConfigError("subset_xs: fraction selects zero speakers");

  std::mt19937_64 rng(seed);
  std::shuffle(speakers.begin(), speakers.end(), rng);
  speakers.resize(n_keep);

  std::vector<char> keep(manifest.size(), 0);
  for (const auto& spk : speakers) {
    auto pos = positions[spk];
    if (pos.size() > utts_per_speaker) {
      std::shuffle(pos.begin(), pos.end(), rng);
      pos.resize(utts_per_speaker);
    }
    for (auto p : pos) keep[p] = 1;
  }

  Manifest out;
  for (std::size_t i = 0; i < manifest.size(); ++i)
    if (keep[i]) out.push_back(manifest[i]);
  return out;
}

}  // namespace verilm
