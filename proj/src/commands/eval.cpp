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

#include "verilm/commands.hpp"
#include "verilm/error.hpp"
#include "verilm/hash.hpp"
#include "verilm/prompting.hpp"
#include "verilm/score_file.hpp"
#include "verilm/trial_store.hpp"

namespace verilm::cli {

int run_eval(const EvalArgs& args, std::ostream& log) {
  const std::string trial_text = read_text(args.trials);
  const std::string split = args.split.empty() ? args.trials.stem().string() : args.split;
  const TrialSet trials = parse_trial_list(trial_text, split);
  if (trials.size() == 0) throw ConfigError("trial list " + args.trials.string() + " is empty");
  if (args.backend.spec.starts_with("adapter:") && args.protocol != Protocol::llr)
    throw ConfigError("the adapter backend only supports --protocol llr");

  const TemplateId tid = template_for(args.protocol);
  std::optional<PromptTemplate> custom;
  if (!args.template_spec.empty()) custom.emplace(tid, read_text(args.template_spec));
  const PromptTemplate& tmpl = custom ? *custom : PromptTemplate::builtin(tid);

  auto backend = make_backend(args.backend);
  backend->check_health();

  nlohmann::json config = {{"command", "eval"},
                           {"trials", args.trials.string()},
                           {"trials_hash", fnv1a64_hex(trial_text)},
                           {"split", split},
                           {"backend", args.backend.spec},
                           {"protocol", to_string(args.protocol)},
                           {"template_id", to_string(tid)},
                           {"template_hash", tmpl.content_hash()},
                           {"max_attempts", args.max_attempts},
                           {"seed", args.seed},
                           {"concurrency", args.concurrency},
                           {"max_requests_per_second", args.max_requests_per_second},
                           {"out", args.out.string()}};
  if (args.backend.embeddings) {
    config["embeddings"] = args.backend.embeddings->string();
    config["embeddings_hash"] = fnv1a64_hex(read_text(*args.backend.embeddings));
  }
  if (args.backend.spec == "oracle")
    config["oracle"] = {{"temperature", args.backend.oracle.temperature},
                        {"bias", args.backend.oracle.bias}};
  const std::string hash = config_hash(config);

  ScoreFileHeader header;
  header.config_hash = hash;
  header.config = result_config(config);
  header.split = split;
  header.protocol = args.protocol;
  header.template_id = std::string(to_string(tid));
  header.template_hash = tmpl.content_hash();
  header.backend_id = backend->id();
  header.n_trials = trials.size();

  std::filesystem::create_directories(args.out);
  const auto path = args.out / "scores.jsonl";
  std::size_t done = 0;
  ScoreFileWriter writer;
  if (std::filesystem::exists(path) && !args.fresh) {
    ScoreFile existing = read_score_file(path);
    if (existing.header.config_hash != hash)
      throw ConfigError(path.string() + " was written by a different config (hash " +
                        existing.header.config_hash + ", now " + hash +
                        "); pass --fresh to overwrite");
    for (const auto& row : existing.rows) {
      if (row.index != done)
        throw ConfigError(path.string() + ": rows are not a prefix of the trial list");
      ++done;
    }
    if (done > trials.size()) throw ConfigError(path.string() + " has more rows than trials");
    writer = ScoreFileWriter::append_to(path, existing.valid_bytes);
    log << "eval: resuming " << path.string() << " at trial " << done << "/" << trials.size()
        << (existing.torn_tail ? " (dropped a torn final line)" : "") << "\n";
  } else {
    writer = ScoreFileWriter::create(path, header);
  }

  std::vector<std::size_t> missing;
  for (std::size_t i = done; i < trials.size(); ++i) missing.push_back(i);

  ScoreOptions opts;
  opts.protocol = args.protocol;
  opts.prompt_template = &tmpl;
  opts.concurrency = std::max<std::size_t>(1, args.concurrency);
  opts.max_requests_per_second = args.max_requests_per_second;
  opts.retry.max_attempts = std::max(1, args.max_attempts);
  std::size_t n_failed = 0;
  if (!missing.empty())
    score_trials(trials, *backend, opts, missing, [&](const ScoredTrial& st) {
      writer.write(st);
      if (st.failed) ++n_failed;
    });

  update_run_manifest(args.out, "eval",
                      {{"config", config},
                       {"config_hash", hash},
                       {"backend_id", backend->id()},
                       {"outputs", {"scores.jsonl"}},
                       {"n_trials", trials.size()},
                       {"resumed_from", done}});
  log << "eval: scored " << missing.size() << " trials (" << n_failed << " failed) -> "
      << path.string() << "\n";
  return kOk;
}

}  // namespace verilm::cli
