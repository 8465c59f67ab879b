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

#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "verilm/adapter/checkpoint.hpp"
#include "verilm/adapter/grad_check.hpp"
#include "verilm/adapter/trainer.hpp"
#include "verilm/commands.hpp"
#include "verilm/error.hpp"

namespace verilm::cli {

using adapter::EpochRecord;

int run_train(const TrainArgs& args, std::ostream& log) {
  adapter::Preset p = adapter::preset(args.preset);
  auto& t = p.train;
  if (args.epochs) t.epochs = *args.epochs;
  if (args.batch_size) t.batch_size = *args.batch_size;
  if (args.n_speakers) t.n_speakers = *args.n_speakers;
  if (args.utts_per_speaker) t.utts_per_speaker = *args.utts_per_speaker;
  if (args.n_val_speakers) t.n_val_speakers = *args.n_val_speakers;
  if (args.learning_rate) t.learning_rate = *args.learning_rate;
  if (args.noise_sigma) t.noise_sigma = *args.noise_sigma;
  t.seed = args.seed;
  t.exec = args.serial ? kernels::Exec::serial : kernels::Exec::parallel;
  t.validate();

  nlohmann::json config = {{"command", "train-adapter"},
                           {"preset", p.name},
                           {"model", adapter::to_json(p.model)},
                           {"epochs", t.epochs},
                           {"batch_size", t.batch_size},
                           {"learning_rate", t.learning_rate},
                           {"target_fraction", t.target_fraction},
                           {"optimizer",
                            {{"name", "adam"},
                             {"beta1", t.adam_beta1},
                             {"beta2", t.adam_beta2},
                             {"eps", t.adam_eps}}},
                           {"seed", t.seed},
                           {"noise_sigma", t.noise_sigma},
                           {"n_speakers", t.n_speakers},
                           {"speaker_fraction", t.speaker_fraction},
                           {"utts_per_speaker", t.utts_per_speaker},
                           {"n_val_speakers", t.n_val_speakers},
                           {"out", args.out.string()}};
  const std::string hash = config_hash(config);

  const auto data = adapter::make_training_data(t, p.model.d_spk);
  auto model = adapter::initial_model(p.model, t.seed);
  const std::size_t n_lora = [&] {
    std::size_t n = 0;
    for (const auto& ti : model.params().tensors())
      if (ti.trainable && ti.name.find(".lora_") != std::string::npos) n += ti.size();
    return n;
  }();
  log << fmt::format("train-adapter: preset {} | {} train speakers, {} utterances | {} trainable "
                     "({} LoRA), {} frozen | {} validation trials\n",
                     p.name, data.train_groups.size(), data.train.embeddings.size(),
                     model.params().n_trainable(), n_lora, model.params().n_frozen(),
                     data.val_trials.size());

  auto result = adapter::train(model, data, t, [&](const EpochRecord& r) {
    log << fmt::format("epoch {:3d}  loss {}  val EER {:6.2f}%{}\n", r.epoch,
                       std::isnan(r.loss) ? std::string("     -") : fmt::format("{:.4f}", r.loss),
                       100.0 * r.val_eer, r.kept ? "  *" : "");
    log.flush();
  });
  if (result.frozen_hash_before != result.frozen_hash_after)
    throw Error("train-adapter: frozen parameters changed during training");

  const auto test = adapter::make_test_data(t, p.model.d_spk);
  const double test_eer = adapter::trial_eer(
      test.trials, adapter::llr_scores(result.best, test.trials, test.pool.embeddings, t.exec));

  std::filesystem::create_directories(args.out);
  nlohmann::json summary = {{"best_epoch", result.best_epoch},
                            {"best_val_eer", result.best_val_eer},
                            {"initial_val_eer", result.initial_val_eer},
                            {"cosine_val_eer", result.cosine_val_eer},
                            {"test_eer", test_eer},
                            {"steps", result.steps},
                            {"n_trainable", model.params().n_trainable()},
                            {"n_lora_trainable", n_lora},
                            {"frozen_hash", result.frozen_hash_after}};
  adapter::save_checkpoint(args.out / "adapter.ckpt", result.best,
                           {{"config", config}, {"config_hash", hash}, {"summary", summary}});
  write_text(args.out / "history.csv", adapter::history_csv(result.history));
  write_text(args.out / "test_embeddings.txt", test.pool.embeddings.serialize());
  write_text(args.out / "test_trials.txt", serialize_trial_list(test.trials));
  update_run_manifest(args.out, "train-adapter",
                      {{"config", config},
                       {"config_hash", hash},
                       {"summary", summary},
                       {"outputs",
                        {"adapter.ckpt", "history.csv", "test_embeddings.txt", "test_trials.txt"}}});
  log << fmt::format(
      "best val EER {:.2f}% at epoch {} (initial {:.2f}%, cosine {:.2f}%), held-out EER {:.2f}%\n",
      100 * result.best_val_eer, result.best_epoch, 100 * result.initial_val_eer,
      100 * result.cosine_val_eer, 100 * test_eer);
  return kOk;
}

int run_grad_check(const GradCheckArgs& args, std::ostream& log) {
  std::mt19937_64 rng(args.seed);
  double worst = 0;
  bool frozen_zero = true;
  for (std::size_t i = 0; i < args.n_configs; ++i) {
    const auto cfg = adapter::random_small_config(rng);
    const auto model = adapter::random_check_model(cfg, rng);
    const auto sample = adapter::random_sample(cfg, rng);
    const auto r = adapter::grad_check(model, sample, args.epsilon);
    worst = std::max(worst, r.max_rel_error);
    frozen_zero = frozen_zero && r.frozen_grads_zero;
    log << fmt::format("config {:2d}: d_spk {} d_model {} heads {} blocks {} rank {} lora {} head {} | "
                       "{} params, max rel err {:.3e} ({})\n",
                       i, cfg.d_spk, cfg.d_model, cfg.n_heads, cfg.n_blocks, cfg.lora_rank,
                       cfg.lora ? "on" : "off", cfg.train_head ? "trained" : "frozen", r.n_checked,
                       r.max_rel_error, r.worst_tensor);
  }
  const bool ok = worst < args.tolerance && frozen_zero;
  log << fmt::format("grad-check: max rel err {:.3e} (tolerance {:.1e}), frozen grads zero: {} -> {}\n",
                     worst, args.tolerance, frozen_zero ? "yes" : "no", ok ? "PASS" : "FAIL");
  return ok ? kOk : kConfigError;
}

}  // namespace verilm::cli
