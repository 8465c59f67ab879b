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
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "verilm/adapter/model.hpp"
#include "verilm/embeddings.hpp"
#include "verilm/kernels.hpp"
#include "verilm/scoring.hpp"
#include "verilm/trial_store.hpp"

namespace verilm::adapter {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  double learning_rate = 1e-4;
  double target_fraction = 0.5;
  std::uint64_t seed = 17;
  double noise_sigma = 0.6;
  std::size_t n_speakers = 600;
  std::size_t utts_per_speaker = 10;
  /// Fraction of the generated speaker pool kept for training (XS subsets).
  double speaker_fraction = 1.0;
  std::size_t n_val_speakers = 100;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  kernels::Exec exec = kernels::Exec::parallel;

  /// Throws ConfigError.
  void validate() const;
};

struct Preset {
  std::string name;
  ModelConfig model;
  TrainConfig train;
};

/// `full`, `frozen`, `xs`, `xs-frozen`. Throws ConfigError for anything else.
Preset preset(std::string_view name);
std::vector<std::string> preset_names();

/// Freshly initialized model drawn from the run seed.
AdapterModel<float> initial_model(const ModelConfig& model, std::uint64_t seed);

struct TrainingData {
  SyntheticSpeakers train;
  std::vector<std::vector<std::size_t>> train_groups;  // embedding rows per speaker
  SyntheticSpeakers val;
  TrialSet val_trials;
};

/// Train and validation speakers are generated from disjoint id ranges.
TrainingData make_training_data(const TrainConfig& cfg, std::size_t d_spk);

struct HeldOutData {
  SyntheticSpeakers pool;
  TrialSet trials;
};

/// Test speakers disjoint from both training and validation speakers.
HeldOutData make_test_data(const TrainConfig& cfg, std::size_t d_spk);

/// Each validation utterance is paired once with another utterance of the same
/// speaker and once with an utterance of a different speaker.
TrialSet make_validation_trials(const SyntheticSpeakers& pool, std::mt19937_64& rng);

struct EpochRecord {
  std::size_t epoch = 0;  // 0 is the untrained model
  double loss = 0.0;      // mean training loss; NaN for epoch 0
  double val_eer = 0.0;
  bool kept = false;      // became the best checkpoint
};

struct TrainResult {
  AdapterModel<float> best;
  std::size_t best_epoch = 0;
  double best_val_eer = 1.0;
  double initial_val_eer = 1.0;
  double cosine_val_eer = 1.0;
  std::size_t steps = 0;
  std::vector<EpochRecord> history;
  std::string frozen_hash_before;
  std::string frozen_hash_after;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Throws Error when the loss becomes non-finite or the validation list is empty.
TrainResult train(AdapterModel<float> model, const TrainingData& data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Per-trial llr(forward(enroll, test)). Throws ConfigError on a missing embedding.
std::vector<double> llr_scores(const AdapterModel<float>& model, const TrialSet& trials,
                               const EmbeddingTable& embeddings,
                               kernels::Exec exec = kernels::Exec::parallel);

std::vector<ScoredTrial> evaluate(const AdapterModel<float>& model, const TrialSet& trials,
                                  const EmbeddingTable& embeddings,
                                  kernels::Exec exec = kernels::Exec::parallel);

/// EER of scores aligned with `trials`.
double trial_eer(const TrialSet& trials, std::span<const double> scores);

std::vector<double> cosine_scores(const TrialSet& trials, const EmbeddingTable& embeddings,
                                  kernels::Exec exec = kernels::Exec::parallel);

std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace verilm::adapter
