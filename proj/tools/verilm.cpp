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

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "verilm/adapter/trainer.hpp"
#include "verilm/commands.hpp"
#include "verilm/error.hpp"
#include "verilm/prompting.hpp"

using namespace verilm;

int main(int argc, char** argv) {
  CLI::App app{"verilm: speaker verification benchmark for speech-aware language models"};
  app.set_config("--config", "", "Key-value config file ([subcommand] sections); flags win");
  app.require_subcommand(1);

  cli::SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate synthetic embeddings, trials and metadata");
  s->add_option("--n-speakers", synth.n_speakers)->capture_default_str();
  s->add_option("--utts", synth.utts_per_speaker, "Utterances per speaker")->capture_default_str();
  s->add_option("--dim", synth.dim)->capture_default_str();
  s->add_option("--sigma", synth.noise_sigma, "Within-speaker noise")->capture_default_str();
  s->add_option("--n-trials", synth.n_trials)->capture_default_str();
  s->add_option("--seed", synth.seed)->capture_default_str();
  s->add_option("--out", synth.out)->capture_default_str();

  cli::EvalArgs eval;
  std::string embeddings;
  auto* e = app.add_subcommand("eval", "Score a trial list against a backend");
  e->add_option("--trials", eval.trials)->required()->check(CLI::ExistingFile);
  e->add_option("--backend", eval.backend.spec,
                "oracle | http:<url> | replay:<file> | adapter:<checkpoint>")
      ->required();
  e->add_option("--embeddings", embeddings, "Embedding table (oracle and adapter backends)");
  std::string eval_protocol = "llr";
  e->add_option("--protocol", eval_protocol)->check(CLI::IsMember({"confidence", "llr"}))
      ->capture_default_str();
  e->add_option("--template", eval.template_spec, "Prompt template file (default: builtin)");
  e->add_option("--concurrency", eval.concurrency)->capture_default_str();
  e->add_option("--rate-limit", eval.max_requests_per_second, "Max requests per second (0 = off)")
      ->capture_default_str();
  e->add_option("--max-attempts", eval.max_attempts)->capture_default_str();
  e->add_option("--split", eval.split, "Split name (default: trial file stem)");
  e->add_option("--seed", eval.seed)->capture_default_str();
  e->add_option("--oracle-temperature", eval.backend.oracle.temperature)->capture_default_str();
  e->add_option("--oracle-bias", eval.backend.oracle.bias)->capture_default_str();
  e->add_flag("--fresh", eval.fresh, "Overwrite an existing score file instead of resuming");
  e->add_option("--out", eval.out)->capture_default_str();

  cli::MetricsArgs metrics;
  std::string failure_mode = "exclude";
  bool per_trial = false;
  auto* m = app.add_subcommand("metrics", "EER, failure rate and attribute accuracy reports");
  m->add_option("--scores", metrics.scores, "Score files, one per split")->required();
  m->add_option("--metadata", metrics.metadata, "Speaker metadata CSV");
  m->add_option("--failure-mode", failure_mode)->check(CLI::IsMember({"exclude", "strict"}))
      ->capture_default_str();
  m->add_flag("--per-trial", per_trial, "Count gender/accent per trial instead of per audio");
  m->add_option("--model", metrics.model, "Model name shown in the report")->capture_default_str();
  m->add_option("--out", metrics.out)->capture_default_str();

  cli::TrainArgs train;
  auto* t = app.add_subcommand("train-adapter", "Train the speaker-aware adapter on synthetic data");
  t->add_option("--preset", train.preset)->check(CLI::IsMember(adapter::preset_names()))
      ->capture_default_str();
  t->add_option("--epochs", train.epochs);
  t->add_option("--batch-size", train.batch_size);
  t->add_option("--lr", train.learning_rate);
  t->add_option("--n-speakers", train.n_speakers, "Speaker pool size before any subset");
  t->add_option("--utts", train.utts_per_speaker);
  t->add_option("--val-speakers", train.n_val_speakers);
  t->add_option("--sigma", train.noise_sigma);
  t->add_option("--seed", train.seed)->capture_default_str();
  t->add_flag("--serial", train.serial, "Use the serial reference kernels");
  t->add_option("--out", train.out)->capture_default_str();

  cli::GradCheckArgs grad;
  auto* g = app.add_subcommand("grad-check", "Finite-difference check of adapter gradients");
  g->add_option("--configs", grad.n_configs)->capture_default_str();
  g->add_option("--epsilon", grad.epsilon)->capture_default_str();
  g->add_option("--tolerance", grad.tolerance)->capture_default_str();
  g->add_option("--seed", grad.seed)->capture_default_str();

  cli::ParseAuditArgs audit;
  auto* a = app.add_subcommand("parse-audit", "Failure taxonomy of raw model responses");
  a->add_option("--responses", audit.responses, "JSON lines with a \"text\" field")
      ->required()
      ->check(CLI::ExistingFile);
  std::string audit_protocol = "confidence";
  a->add_option("--protocol", audit_protocol)->check(CLI::IsMember({"confidence", "llr"}))
      ->capture_default_str();
  a->add_option("--out", audit.out, "Write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? cli::kOk : cli::kConfigError;
  }

  try {
    if (*s) return cli::run_synth(synth, std::cerr);
    if (*e) {
      eval.protocol = protocol_from_string(eval_protocol);
      if (!embeddings.empty()) eval.backend.embeddings = embeddings;
      if (const char* token = std::getenv("VERILM_BACKEND_TOKEN")) eval.backend.token = token;
      return cli::run_eval(eval, std::cerr);
    }
    if (*m) {
      metrics.failure_mode = failure_mode_from_string(failure_mode);
      metrics.attribute_unit = per_trial ? AttributeUnit::per_trial : AttributeUnit::per_audio;
      return cli::run_metrics(metrics, std::cerr);
    }
    if (*t) return cli::run_train(train, std::cerr);
    if (*g) return cli::run_grad_check(grad, std::cerr);
    if (*a) {
      audit.protocol = protocol_from_string(audit_protocol);
      return cli::run_parse_audit(audit, std::cerr);
    }
  } catch (const BackendUnavailable& err) {
    std::cerr << "verilm: backend unreachable: " << err.what() << "\n";
    return cli::kBackendUnreachable;
  } catch (const std::exception& err) {
    std::cerr << "verilm: " << err.what() << "\n";
    return cli::kConfigError;
  }
  return cli::kConfigError;
}
