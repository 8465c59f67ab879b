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
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "verilm/prompting.hpp"
#include "verilm/response_parser.hpp"
#include "verilm/scoring.hpp"
#include "verilm/trial_store.hpp"

namespace verilm {

/// Operating point for "accept iff score >= threshold".
struct RocPoint {
  double threshold;  // +inf for the reject-everything point
  double far;        // fraction of non-targets accepted
  double frr;        // fraction of targets rejected
};

/// One point per distinct score plus the +inf point, thresholds ascending.
std::vector<RocPoint> roc_curve(std::span<const double> targets, std::span<const double> nontargets);

struct EerResult {
  double eer = 0;
  double threshold = 0;
};

/// Equal error rate over a threshold sweep at every distinct score. When no
/// operating point has FAR == FRR exactly, the rate is linearly interpolated
/// between the two points around the crossing and the lower of their
/// thresholds is reported. Throws Error on empty lists or non-finite scores.
EerResult compute_eer(std::span<const double> targets, std::span<const double> nontargets);

struct ScoreAudit {
  std::size_t distinct = 0;
  std::vector<std::pair<double, std::size_t>> histogram;  // ascending by score
};

/// Distinct non-failed scores and their counts.
ScoreAudit distinct_score_audit(std::span<const ScoredTrial> scored);

enum class FailureMode { exclude, strict };
FailureMode failure_mode_from_string(std::string_view s);
std::string_view to_string(FailureMode m);

/// Unit for gender/accent counting: each audio, or each trial.
enum class AttributeUnit { per_audio, per_trial };

struct ReportOptions {
  FailureMode failure_mode = FailureMode::exclude;
  // In strict mode failed trials get this score: 50 for confidence, 0 for llr.
  Protocol protocol = Protocol::llr;
  AttributeUnit attribute_unit = AttributeUnit::per_audio;
  const AccentGazetteer* gazetteer = nullptr;  // null = builtin
};

struct AttributeStats {
  std::size_t total = 0;      // units with a model output
  std::size_t predicted = 0;  // units with a prediction
  std::size_t judged = 0;     // predicted units whose truth is known
  std::size_t correct = 0;

  std::optional<double> coverage() const;
  std::optional<double> accuracy() const;
};

struct MetricsReport {
  std::optional<double> eer;  // undefined without scores for both classes
  std::optional<double> threshold_at_eer;
  std::size_t n_scored = 0;
  std::size_t n_failed = 0;
  std::size_t n_target = 0;     // among EER inputs
  std::size_t n_nontarget = 0;  // among EER inputs
  double failure_rate = 0;
  AttributeStats gender;
  AttributeStats accent;
  std::size_t n_disagreement = 0;
  std::size_t n_attribution_ambiguous = 0;
  ScoreAudit audit;
};

/// Throws Error when `scored` is empty.
MetricsReport compute_report(std::span<const ScoredTrial> scored, const MetadataMap& metadata,
                             const ReportOptions& options = {});

nlohmann::json to_json(const MetricsReport& r);

struct SplitReport {
  std::string split;
  std::string config_hash;
  MetricsReport report;
};

/// Report document: per-split reports plus a pooled row.
nlohmann::json report_document(std::string_view model, std::span<const SplitReport> splits,
                               const MetricsReport& pooled);

/// Aligned text table: model, EER per split, failure rate, gender and accent
/// accuracy/coverage, distinct scores.
std::string render_table(std::string_view model, std::span<const SplitReport> splits,
                         const MetricsReport& pooled);

}  // namespace verilm
