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

#include "verilm/adapter/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "verilm/error.hpp"
#include "verilm/metrics.hpp"

namespace verilm::adapter {
namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

enum Stream : std::uint64_t {
  kTrainPool = 1,
  kValPool,
  kValTrials,
  kModelInit,
  kBatches,
  kTestPool,
  kTestTrials
};

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

struct PairRef {
  std::size_t a, b;
  bool target;
};

std::vector<PairRef> resolve(const TrialSet& trials, const EmbeddingTable& emb) {
  std::vector<PairRef> out;
  out.reserve(trials.size());
  for (const auto& t : trials.trials()) {
    auto a = emb.index_of(t.enroll.str());
    auto b = emb.index_of(t.test.str());
    if (!a || !b)
      throw ConfigError("missing embedding for trial " + t.enroll.str() + " " + t.test.str());
    out.push_back({*a, *b, t.target});
  }
  return out;
}

Workspace<float>& thread_workspace(const ModelConfig& cfg) {
  thread_local std::optional<std::pair<ModelConfig, Workspace<float>>> ws;
  if (!ws || !(ws->first == cfg)) ws.emplace(cfg, Workspace<float>(cfg));
  return ws->second;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs == 0 || batch_size == 0) throw ConfigError("train: epochs and batch_size must be positive");
  if (!(learning_rate > 0)) throw ConfigError("train: learning_rate must be positive");
  if (!(target_fraction > 0 && target_fraction < 1))
    throw ConfigError("train: target_fraction must lie in (0, 1)");
  if (!(noise_sigma >= 0)) throw ConfigError("train: noise_sigma must be non-negative");
  if (n_speakers < 2 || utts_per_speaker < 2 || n_val_speakers < 2)
    throw ConfigError("train: need at least 2 speakers and 2 utterances per speaker");
  if (!(speaker_fraction > 0 && speaker_fraction <= 1))
    throw ConfigError("train: speaker_fraction must lie in (0, 1]");
}

Preset preset(std::string_view name) {
  Preset p;
  p.name = std::string(name);
  p.train.n_speakers = 6000;
  if (name == "full" || name == "frozen") {
  } else if (name == "xs" || name == "xs-frozen") {
    p.train.speaker_fraction = 0.1;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  if (name.ends_with("frozen")) {
    p.model.lora = false;
    p.model.train_head = false;
  }
  return p;
}

std::vector<std::string> preset_names() { return {"full", "frozen", "xs", "xs-frozen"}; }

AdapterModel<float> initial_model(const ModelConfig& model, std::uint64_t seed) {
  auto rng = stream(seed, kModelInit);
  return AdapterModel<float>(model, rng);
}

TrialSet make_validation_trials(const SyntheticSpeakers& pool, std::mt19937_64& rng) {
  std::map<std::string, std::vector<std::size_t>, std::less<>> by_speaker;
  for (std::size_t i = 0; i < pool.manifest.size(); ++i)
    by_speaker[std::string(speaker_of(pool.manifest[i]))].push_back(i);
  if (by_speaker.size() < 2) throw ConfigError("validation needs at least two speakers");
  std::vector<const std::vector<std::size_t>*> groups;
  for (const auto& [_, g] : by_speaker) groups.push_back(&g);

  std::vector<Trial> trials;
  for (std::size_t s = 0; s < groups.size(); ++s) {
    const auto& g = *groups[s];
    if (g.size() < 2) throw ConfigError("validation speaker with a single utterance");
    for (std::size_t k = 0; k < g.size(); ++k) {
      std::size_t other = uniform_index(rng, g.size() - 1);
      if (other >= k) ++other;
      trials.push_back({true, pool.manifest[g[k]], pool.manifest[g[other]]});
      std::size_t s2 = uniform_index(rng, groups.size() - 1);
      if (s2 >= s) ++s2;
      const auto& g2 = *groups[s2];
      trials.push_back({false, pool.manifest[g[k]], pool.manifest[g2[uniform_index(rng, g2.size())]]});
    }
  }
  return TrialSet("validation", std::move(trials));
}

TrainingData make_training_data(const TrainConfig& cfg, std::size_t d_spk) {
  cfg.validate();
  TrainingData data;
  SynthConfig sc;
  sc.n_speakers = cfg.n_speakers;
  sc.utts_per_speaker = cfg.utts_per_speaker;
  sc.dim = d_spk;
  sc.noise_sigma = cfg.noise_sigma;
  auto rng = stream(cfg.seed, kTrainPool);
  auto full = synth_speakers(sc, rng);
  if (cfg.speaker_fraction < 1.0) {
    Manifest kept = subset_xs(full.manifest, cfg.speaker_fraction, cfg.utts_per_speaker, cfg.seed);
    SyntheticSpeakers sub{EmbeddingTable(d_spk), {}, kept};
    for (const auto& u : kept) {
      sub.embeddings.add(u, full.embeddings.at(u.str()));
      auto spk = std::string(speaker_of(u));
      if (sub.speaker_ids.empty() || sub.speaker_ids.back() != spk) sub.speaker_ids.push_back(spk);
    }
    data.train = std::move(sub);
  } else {
    data.train = std::move(full);
  }
  std::map<std::string, std::vector<std::size_t>, std::less<>> by_speaker;
  for (std::size_t i = 0; i < data.train.embeddings.size(); ++i)
    by_speaker[std::string(speaker_of(data.train.embeddings.id(i)))].push_back(i);
  for (auto& [_, g] : by_speaker) {
    if (g.size() < 2) throw ConfigError("training speaker with a single utterance");
    data.train_groups.push_back(std::move(g));
  }

  SynthConfig vc = sc;
  vc.n_speakers = cfg.n_val_speakers;
  vc.first_speaker = cfg.n_speakers;
  auto vrng = stream(cfg.seed, kValPool);
  data.val = synth_speakers(vc, vrng);
  auto trng = stream(cfg.seed, kValTrials);
  data.val_trials = make_validation_trials(data.val, trng);
  return data;
}

HeldOutData make_test_data(const TrainConfig& cfg, std::size_t d_spk) {
  cfg.validate();
  SynthConfig sc;
  sc.n_speakers = cfg.n_val_speakers;
  sc.utts_per_speaker = cfg.utts_per_speaker;
  sc.dim = d_spk;
  sc.noise_sigma = cfg.noise_sigma;
  sc.first_speaker = cfg.n_speakers + cfg.n_val_speakers;
  auto prng = stream(cfg.seed, kTestPool);
  HeldOutData out{synth_speakers(sc, prng), {}};
  auto trng = stream(cfg.seed, kTestTrials);
  out.trials = make_validation_trials(out.pool, trng);
  out.trials = TrialSet("test", out.trials.trials());
  return out;
}

std::vector<double> llr_scores(const AdapterModel<float>& model, const TrialSet& trials,
                               const EmbeddingTable& embeddings, kernels::Exec exec) {
  const auto pairs = resolve(trials, embeddings);
  std::vector<double> out(pairs.size());
  kernels::for_each_index(pairs.size(), exec, [&](std::size_t i) {
    auto lg = model.forward(embeddings.row(pairs[i].a), embeddings.row(pairs[i].b),
                            thread_workspace(model.config()));
    out[i] = double(lg.yes) - double(lg.no);
  });
  return out;
}

std::vector<ScoredTrial> evaluate(const AdapterModel<float>& model, const TrialSet& trials,
                                  const EmbeddingTable& embeddings, kernels::Exec exec) {
  const auto pairs = resolve(trials, embeddings);
  std::vector<ScoredTrial> out(pairs.size());
  kernels::for_each_index(pairs.size(), exec, [&](std::size_t i) {
    auto lg = model.forward(embeddings.row(pairs[i].a), embeddings.row(pairs[i].b),
                            thread_workspace(model.config()));
    BackendResponse r;
    r.kind = ResponseMode::logits;
    r.logit_yes = lg.yes;
    r.logit_no = lg.no;
    r.answer_position = "first_generated";
    r.attempt_count = 1;
    out[i] = make_scored_trial(i, trials[i], Protocol::llr, r, "adapter");
  });
  return out;
}

double trial_eer(const TrialSet& trials, std::span<const double> scores) {
  std::vector<double> tar, non;
  for (std::size_t i = 0; i < trials.size(); ++i) (trials[i].target ? tar : non).push_back(scores[i]);
  if (tar.empty() || non.empty()) throw Error("EER needs target and non-target trials");
  return compute_eer(tar, non).eer;
}

std::vector<double> cosine_scores(const TrialSet& trials, const EmbeddingTable& embeddings,
                                  kernels::Exec exec) {
  const auto refs = resolve(trials, embeddings);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& p : refs) pairs.emplace_back(p.a, p.b);
  std::vector<double> out(pairs.size());
  kernels::batch_cosine(embeddings.data(), embeddings.dim(), pairs, out, exec);
  return out;
}

TrainResult train(AdapterModel<float> model, const TrainingData& data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (data.val_trials.size() == 0) throw Error("train: validation trial list is empty");
  if (data.train_groups.size() < 2) throw Error("train: need at least two training speakers");
  const auto& emb = data.train.embeddings;
  if (emb.dim() != model.config().d_spk)
    throw ConfigError("train: embedding dim does not match the connector");

  auto& params = model.params();
  const std::size_t n = params.n_trainable();
  const std::size_t B = cfg.batch_size;
  const std::size_t n_target = std::clamp<std::size_t>(
      std::size_t(std::llround(cfg.target_fraction * double(B))), 1, B > 1 ? B - 1 : 1);
  const std::size_t steps_per_epoch = std::max<std::size_t>(1, emb.size() / B);

  TrainResult res{model, 0, 1.0, 1.0, 1.0, 0, {}, {}, {}};
  res.frozen_hash_before = params.frozen_hash();
  res.cosine_val_eer =
      trial_eer(data.val_trials, cosine_scores(data.val_trials, data.val.embeddings, cfg.exec));
  res.initial_val_eer =
      trial_eer(data.val_trials, llr_scores(model, data.val_trials, data.val.embeddings, cfg.exec));
  res.best_val_eer = res.initial_val_eer;
  res.history.push_back({0, std::numeric_limits<double>::quiet_NaN(), res.initial_val_eer, true});
  if (on_epoch) on_epoch(res.history.back());

  std::vector<float> m(n, 0.f), v(n, 0.f), grads(n), per_sample(B * n);
  std::vector<double> losses(B);
  std::vector<Workspace<float>> workspaces(B, Workspace<float>(model.config()));
  std::vector<PairRef> batch(B);
  auto rng = stream(cfg.seed, kBatches);
  const auto& groups = data.train_groups;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double epoch_loss = 0;
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      for (std::size_t k = 0; k < B; ++k) {
        const bool target = k < n_target;
        const std::size_t g = uniform_index(rng, groups.size());
        const auto& ga = groups[g];
        const std::size_t ia = uniform_index(rng, ga.size());
        std::size_t b;
        if (target) {
          std::size_t ib = uniform_index(rng, ga.size() - 1);
          if (ib >= ia) ++ib;
          b = ga[ib];
        } else {
          std::size_t g2 = uniform_index(rng, groups.size() - 1);
          if (g2 >= g) ++g2;
          b = groups[g2][uniform_index(rng, groups[g2].size())];
        }
        batch[k] = {ga[ia], b, target};
      }
      std::fill(per_sample.begin(), per_sample.end(), 0.f);
      kernels::for_each_index(B, cfg.exec, [&](std::size_t k) {
        std::span<float> g(per_sample.data() + k * n, n);
        losses[k] = model.loss_and_grad(emb.row(batch[k].a), emb.row(batch[k].b), batch[k].target,
                                        workspaces[k], g);
      });
      double loss = 0;
      for (double l : losses) loss += l;
      loss /= double(B);
      if (!std::isfinite(loss))
        throw Error(fmt::format("train: non-finite loss {} at epoch {} step {}", loss, epoch, s));
      kernels::sum_rows_ordered<float>(per_sample, B, grads, cfg.exec);

      ++step;
      const double c1 = 1.0 - std::pow(b1, double(step));
      const double c2 = 1.0 - std::pow(b2, double(step));
      const float lr = float(cfg.learning_rate * std::sqrt(c2) / c1);
      const float eps = float(cfg.adam_eps * std::sqrt(c2));
      const float inv_b = 1.f / float(B);
      for (std::size_t id = 0; id < params.tensors().size(); ++id) {
        const auto& t = params.info(id);
        if (!t.trainable) continue;
        auto w = params.values(id);
        for (std::size_t i = 0; i < t.size(); ++i) {
          const std::size_t j = t.grad_offset + i;
          const float g = grads[j] * inv_b;
          m[j] = float(b1) * m[j] + float(1 - b1) * g;
          v[j] = float(b2) * v[j] + float(1 - b2) * g * g;
          w[i] -= lr * m[j] / (std::sqrt(v[j]) + eps);
        }
      }
      epoch_loss += loss;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = epoch_loss / double(steps_per_epoch);
    rec.val_eer =
        trial_eer(data.val_trials, llr_scores(model, data.val_trials, data.val.embeddings, cfg.exec));
    if (rec.val_eer < res.best_val_eer) {
      rec.kept = true;
      res.best_val_eer = rec.val_eer;
      res.best_epoch = epoch;
      res.best = model;
    }
    res.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  res.steps = step;
  res.frozen_hash_after = params.frozen_hash();
  return res;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,loss,val_eer,kept\n";
  for (const auto& r : history) {
    out += fmt::format("{},{},{:.6f},{}\n", r.epoch,
                       std::isnan(r.loss) ? std::string() : fmt::format("{:.6f}", r.loss), r.val_eer,
                       r.kept ? 1 : 0);
  }
  return out;
}

}  // namespace verilm::adapter
