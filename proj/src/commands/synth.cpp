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
#include <random>

#include "verilm/commands.hpp"
#include "verilm/hash.hpp"
#include "verilm/trial_store.hpp"

namespace verilm::cli {

int run_synth(const SynthArgs& args, std::ostream& log) {
  SynthConfig cfg;
  cfg.n_speakers = args.n_speakers;
  cfg.utts_per_speaker = args.utts_per_speaker;
  cfg.dim = args.dim;
  cfg.noise_sigma = args.noise_sigma;
  nlohmann::json config = {{"command", "synth"},
                           {"n_speakers", args.n_speakers},
                           {"utts_per_speaker", args.utts_per_speaker},
                           {"dim", args.dim},
                           {"noise_sigma", args.noise_sigma},
                           {"n_trials", args.n_trials},
                           {"seed", args.seed},
                           {"out", args.out.string()}};
  const std::string hash = config_hash(config);

  std::mt19937_64 rng(args.seed);
  auto pool = synth_speakers(cfg, rng);
  auto trials = synth_trials(pool, args.n_trials, rng, "synthetic");

  static constexpr const char* kCountries[] = {"US", "GB", "IN", "CA", "AU", "DE", "FR", "IE"};
  MetadataMap metadata;
  std::uniform_int_distribution<std::size_t> country(0, std::size(kCountries) - 1);
  for (const auto& spk : pool.speaker_ids) {
    SpeakerMetadata m;
    m.speaker_id = spk;
    m.gender = std::bernoulli_distribution(0.5)(rng) ? Gender::male : Gender::female;
    m.nationality = kCountries[country(rng)];
    metadata.emplace(spk, m);
  }

  std::filesystem::create_directories(args.out);
  const std::string emb_text = pool.embeddings.serialize();
  const std::string trial_text = serialize_trial_list(trials);
  write_text(args.out / "embeddings.txt", emb_text);
  write_text(args.out / "utterances.txt", serialize_manifest(pool.manifest));
  write_text(args.out / "trials.txt", trial_text);
  write_text(args.out / "metadata.csv", serialize_metadata(metadata));
  update_run_manifest(args.out, "synth",
                      {{"config", config},
                       {"config_hash", hash},
                       {"outputs",
                        {{"embeddings.txt", fnv1a64_hex(emb_text)},
                         {"trials.txt", fnv1a64_hex(trial_text)}}},
                       {"n_utterances", pool.embeddings.size()},
                       {"n_trials", trials.size()},
                       {"n_target", trials.n_target()}});
  log << "synth: " << pool.speaker_ids.size() << " speakers, " << pool.embeddings.size()
      << " utterances, " << trials.size() << " trials -> " << args.out.string() << "\n";
  return kOk;
}

}  // namespace verilm::cli
