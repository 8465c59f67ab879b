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

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace verilm {

/// Path-like utterance key, e.g. "id10270/x9PnL/00001.wav". The first path
/// component names the speaker.
class UtteranceId {
 public:
  UtteranceId() = default;
  /// Throws ParseError when `value` is empty or has no '/'.
  explicit UtteranceId(std::string value);

  const std::string& str() const { return value_; }
  bool empty() const { return value_.empty(); }

  friend bool operator==(const UtteranceId&, const UtteranceId&) = default;
  friend auto operator<=>(const UtteranceId&, const UtteranceId&) = default;

 private:
  std::string value_;
};

/// Speaker id of an utterance: its first path component.
std::string speaker_of(const UtteranceId& utt);
/// Same as above for a raw string; throws ParseError without a separator.
std::string speaker_of(std::string_view utt);

struct Trial {
  bool target = false;  // label 1 = same speaker
  UtteranceId enroll;
  UtteranceId test;

  bool is_self_trial() const { return enroll == test; }
  friend bool operator==(const Trial&, const Trial&) = default;
};

class TrialSet {
 public:
  TrialSet() = default;
  TrialSet(std::string name, std::vector<Trial> trials);

  const std::string& name() const { return name_; }
  const std::vector<Trial>& trials() const { return trials_; }
  std::size_t size() const { return trials_.size(); }
  std::size_t n_target() const { return n_target_; }
  std::size_t n_nontarget() const { return trials_.size() - n_target_; }
  std::size_t n_self_trials() const { return n_self_; }

  const Trial& operator[](std::size_t i) const { return trials_[i]; }

 private:
  std::string name_;
  std::vector<Trial> trials_;
  std::size_t n_target_ = 0;
  std::size_t n_self_ = 0;
};

/// Parses `<label> <enroll> <test>` lines. Blank lines are skipped.
TrialSet parse_trial_list(std::string_view text, std::string name = {});
std::string serialize_trial_list(const TrialSet& set);

/// A trial whose label disagrees with the speaker ids of its utterances.
struct LabelViolation {
  std::size_t index;
  bool label;
  bool same_speaker;
};
std::vector<LabelViolation> verify_labels(const TrialSet& set);

enum class Gender : std::uint8_t { unknown, male, female };
std::string_view to_string(Gender g);

struct SpeakerMetadata {
  std::string speaker_id;
  Gender gender = Gender::unknown;
  std::string nationality;  // ISO-3166 alpha-2; empty when unknown
};

using MetadataMap = std::map<std::string, SpeakerMetadata, std::less<>>;

/// CSV with header `id,gender,nationality`. Gender codes m/f/male/female;
/// anything else is stored as unknown. Duplicate ids are rejected.
MetadataMap load_metadata(std::string_view csv);
std::string serialize_metadata(const MetadataMap& metadata);

/// One utterance path per line.
using Manifest = std::vector<UtteranceId>;
Manifest parse_manifest(std::string_view text);
std::string serialize_manifest(const Manifest& manifest);

/// Random speaker subset: round(fraction * n_speakers) speakers drawn without
/// replacement, each keeping at most `utts_per_speaker` utterances. Output
/// keeps manifest order.
Manifest subset_xs(const Manifest& manifest, double speaker_fraction,
                   std::size_t utts_per_speaker, std::uint64_t seed);

}  // namespace verilm
