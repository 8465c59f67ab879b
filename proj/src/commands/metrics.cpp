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
#include "verilm/score_file.hpp"
#include "verilm/trial_store.hpp"

namespace verilm::cli {

int run_metrics(const MetricsArgs& args, std::ostream& log) {
  if (args.scores.empty()) throw ConfigError("metrics: no score files given");
  MetadataMap metadata;
  if (args.metadata) metadata = load_metadata(read_text(*args.metadata));

  std::vector<SplitReport> splits;
  std::vector<ScoredTrial> pooled_rows;
  std::optional<Protocol> protocol;
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& path : args.scores) {
    ScoreFile file = read_score_file(path);
    if (file.rows.size() != file.header.n_trials)
      throw ConfigError(path.string() + " is incomplete (" + std::to_string(file.rows.size()) + "/" +
                        std::to_string(file.header.n_trials) + " trials); rerun eval to resume");
    if (protocol && *protocol != file.header.protocol)
      throw ConfigError("metrics: score files mix protocols");
    protocol = file.header.protocol;
    ReportOptions opts;
    opts.failure_mode = args.failure_mode;
    opts.protocol = file.header.protocol;
    opts.attribute_unit = args.attribute_unit;
    splits.push_back({file.header.split, file.header.config_hash,
                      compute_report(file.rows, metadata, opts)});
    inputs.push_back({{"path", path.string()},
                      {"split", file.header.split},
                      {"config_hash", file.header.config_hash}});
    pooled_rows.insert(pooled_rows.end(), file.rows.begin(), file.rows.end());
  }
  ReportOptions opts;
  opts.failure_mode = args.failure_mode;
  opts.protocol = *protocol;
  opts.attribute_unit = args.attribute_unit;
  const MetricsReport pooled = compute_report(pooled_rows, metadata, opts);

  nlohmann::json config = {{"command", "metrics"},
                           {"inputs", inputs},
                           {"failure_mode", to_string(args.failure_mode)},
                           {"attribute_unit",
                            args.attribute_unit == AttributeUnit::per_audio ? "per_audio" : "per_trial"},
                           {"metadata", args.metadata ? args.metadata->string() : ""},
                           {"model", args.model},
                           {"out", args.out.string()}};
  const std::string hash = config_hash(config);
  nlohmann::json doc = report_document(args.model, splits, pooled);
  doc["config"] = config;
  doc["config_hash"] = hash;
  std::filesystem::create_directories(args.out);
  write_text(args.out / "report.json", doc.dump(2) + "\n");
  const std::string table = render_table(args.model, splits, pooled);
  write_text(args.out / "report.txt", table);
  update_run_manifest(args.out, "metrics",
                      {{"config", config},
                       {"config_hash", hash},
                       {"outputs", {"report.json", "report.txt"}}});
  log << table;
  return kOk;
}

}  // namespace verilm::cli
