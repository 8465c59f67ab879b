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

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "verilm/trial_store.hpp"

namespace verilm {

/// Row-major table of fixed-width speaker embeddings keyed by utterance.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  /// Throws ConfigError on a duplicate id, a width mismatch or a non-finite value.
  void add(const UtteranceId& id, std::span<const float> vec);
  std::optional<std::size_t> index_of(std::string_view id) const;
  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  /// Throws ConfigError when `id` is missing.
  std::span<const float> at(std::string_view id) const;
  const UtteranceId& id(std::size_t i) const { return ids_[i]; }
  std::span<const float> data() const { return data_; }

  /// Text format: one `<utt> <v1> ... <vd>` line per embedding.
  static EmbeddingTable parse(std::string_view text);
  std::string serialize() const;

 private:
  std::size_t dim_ = 0;
  std::vector<UtteranceId> ids_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct SynthConfig {
  std::size_t n_speakers = 200;
  std::size_t utts_per_speaker = 10;
  std::size_t dim = 32;
  double noise_sigma = 0.1;
  // Speaker ids are numbered from here, so pools built with different
  // offsets are disjoint.
  std::size_t first_speaker = 0;
};

struct SyntheticSpeakers {
  EmbeddingTable embeddings;
  std::vector<std::string> speaker_ids;
  Manifest manifest;
};

/// Frozen-encoder stand-in. Each speaker gets a unit identity vector; each
/// utterance is normalize(identity + noise) with isotropic gaussian noise of
/// expected norm `noise_sigma`.
SyntheticSpeakers synth_speakers(const SynthConfig& cfg, std::mt19937_64& rng);

/// "id00017/syn/00003.wav" style naming.
std::string synth_speaker_id(std::size_t speaker);
UtteranceId synth_utterance_id(std::size_t speaker, std::size_t utt);

/// `n_trials` trials over a synthetic pool, first half target then
/// non-target, shuffled. Target pairs use two distinct utterances when the
/// speaker has more than one.
TrialSet synth_trials(const SyntheticSpeakers& pool, std::size_t n_trials, std::mt19937_64& rng,
                      std::string name = "synthetic");

}  // namespace verilm
