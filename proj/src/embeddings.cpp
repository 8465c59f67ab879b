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

#include "verilm/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "verilm/error.hpp"

namespace verilm {

void EmbeddingTable::add(const UtteranceId& id, std::span<const float> vec) {
  if (dim_ == 0) dim_ = vec.size();
  if (vec.size() != dim_)
    throw ConfigError("embedding for '" + id.str() + "' has dim " + std::to_string(vec.size()) +
                      ", expected " + std::to_string(dim_));
  for (float v : vec)
    if (!std::isfinite(v)) throw ConfigError("non-finite embedding value for '" + id.str() + "'");
  if (!index_.emplace(id.str(), ids_.size()).second)
    throw ConfigError("duplicate embedding for '" + id.str() + "'");
  ids_.push_back(id);
  data_.insert(data_.end(), vec.begin(), vec.end());
}

std::optional<std::size_t> EmbeddingTable::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const float> EmbeddingTable::at(std::string_view id) const {
  auto i = index_of(id);
  if (!i) throw ConfigError("no embedding for utterance '" + std::string(id) + "'");
  return row(*i);
}

EmbeddingTable EmbeddingTable::parse(std::string_view text) {
  EmbeddingTable table;
  std::size_t line_no = 0;
  std::vector<float> vec;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    vec.clear();
    std::size_t i = 0;
    auto skip_ws = [&] {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    };
    skip_ws();
    if (i == line.size()) continue;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    std::string id(line.substr(i, j - i));
    i = j;
    while (true) {
      skip_ws();
      if (i >= line.size()) break;
      float v = 0;
      auto [ptr, ec] = std::from_chars(line.data() + i, line.data() + line.size(), v);
      if (ec != std::errc()) throw ParseError(line_no, "bad embedding value");
      vec.push_back(v);
      i = static_cast<std::size_t>(ptr - line.data());
    }
    if (vec.empty()) throw ParseError(line_no, "embedding line has no values");
    try {
      table.add(UtteranceId(id), vec);
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return table;
}

std::string EmbeddingTable::serialize() const {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    out += ids_[i].str();
    for (float v : row(i)) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
      out += ' ';
      out.append(buf, ptr);
    }
    out += '\n';
  }
  return out;
}

std::string synth_speaker_id(std::size_t speaker) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "id%05zu", speaker);
  return buf;
}

UtteranceId synth_utterance_id(std::size_t speaker, std::size_t utt) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "id%05zu/syn/%05zu.wav", speaker, utt);
  return UtteranceId(buf);
}

SyntheticSpeakers synth_speakers(const SynthConfig& cfg, std::mt19937_64& rng) {
  if (cfg.dim < 2) throw ConfigError("synth_speakers: embedding dim must be >= 2");
  if (cfg.n_speakers == 0 || cfg.utts_per_speaker == 0)
    throw ConfigError("synth_speakers: speaker and utterance counts must be positive");
  if (!(cfg.noise_sigma >= 0)) throw ConfigError("synth_speakers: noise sigma must be >= 0");

  std::normal_distribution<double> gauss(0.0, 1.0);
  const double noise_scale = cfg.noise_sigma / std::sqrt(static_cast<double>(cfg.dim));
  SyntheticSpeakers out;
  out.embeddings = EmbeddingTable(cfg.dim);
  std::vector<double> identity(cfg.dim), utt(cfg.dim);
  std::vector<float> row(cfg.dim);
  auto normalize = [](std::vector<double>& v) {
    double n = 0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    for (double& x : v) x /= n;
  };
  for (std::size_t s = 0; s < cfg.n_speakers; ++s) {
    const std::size_t spk = cfg.first_speaker + s;
    for (auto& x : identity) x = gauss(rng);
    normalize(identity);
    out.speaker_ids.push_back(synth_speaker_id(spk));
    for (std::size_t u = 0; u < cfg.utts_per_speaker; ++u) {
      for (std::size_t k = 0; k < cfg.dim; ++k) utt[k] = identity[k] + noise_scale * gauss(rng);
      normalize(utt);
      std::copy(utt.begin(), utt.end(), row.begin());
      auto id = synth_utterance_id(spk, u);
      out.embeddings.add(id, row);
      out.manifest.push_back(id);
    }
  }
  return out;
}

TrialSet synth_trials(const SyntheticSpeakers& pool, std::size_t n_trials, std::mt19937_64& rng,
                      std::string name) {
  const std::size_t n_spk = pool.speaker_ids.size();
  if (n_spk < 2) throw ConfigError("synth_trials: need at least two speakers");
  const std::size_t per = pool.manifest.size() / n_spk;
  auto utt = [&](std::size_t s, std::size_t u) { return pool.manifest[s * per + u]; };
  std::uniform_int_distribution<std::size_t> pick_spk(0, n_spk - 1);
  std::uniform_int_distribution<std::size_t> pick_utt(0, per - 1);

  std::vector<Trial> trials;
  trials.reserve(n_trials);
  const std::size_t n_target = n_trials / 2;
  for (std::size_t k = 0; k < n_trials; ++k) {
    Trial t;
    std::size_t s1 = pick_spk(rng);
    std::size_t u1 = pick_utt(rng);
    if (k < n_target) {
      std::size_t u2 = u1;
      if (per > 1) {
        u2 = std::uniform_int_distribution<std::size_t>(0, per - 2)(rng);
        if (u2 >= u1) ++u2;
      }
      t = Trial{true, utt(s1, u1), utt(s1, u2)};
    } else {
      std::size_t s2 = std::uniform_int_distribution<std::size_t>(0, n_spk - 2)(rng);
      if (s2 >= s1) ++s2;
      t = Trial{false, utt(s1, u1), utt(s2, pick_utt(rng))};
    }
    trials.push_back(std::move(t));
  }
  std::shuffle(trials.begin(), trials.end(), rng);
  return TrialSet(std::move(name), std::move(trials));
}

}  // namespace verilm
