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

#include "verilm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "verilm/error.hpp"

namespace verilm {

using nlohmann::json;

namespace {

std::vector<double> sorted_copy(std::span<const double> v, const char* what) {
  std::vector<double> out(v.begin(), v.end());
  for (double x : out)
    if (!std::isfinite(x)) throw Error(std::string("compute_eer: non-finite ") + what + " score");
  std::sort(out.begin(), out.end());
  return out;
}

// Counts at each candidate threshold, ascending; the last entry is +inf.
struct SweepPoint {
  double threshold;
  std::size_t nontarget_accepted;
  std::size_t target_rejected;
};

std::vector<SweepPoint> sweep(const std::vector<double>& tgt, const std::vector<double>& non) {
  std::vector<SweepPoint> pts;
  std::size_t it = 0, in = 0;  // scores below the current threshold
  while (it < tgt.size() || in < non.size()) {
    double theta = std::numeric_limits<double>::infinity();
    if (it < tgt.size()) theta = tgt[it];
    if (in < non.size()) theta = std::min(theta, non[in]);
    pts.push_back({theta, non.size() - in, it});
    while (it < tgt.size() && tgt[it] == theta) ++it;
    while (in < non.size() && non[in] == theta) ++in;
  }
  pts.push_back({std::numeric_limits<double>::infinity(), 0, tgt.size()});
  return pts;
}

}  // namespace

std::vector<RocPoint> roc_curve(std::span<const double> targets,
                                std::span<const double> nontargets) {
  if (targets.empty() || nontargets.empty()) throw Error("roc_curve: empty score list");
  auto tgt = sorted_copy(targets, "target");
  auto non = sorted_copy(nontargets, "non-target");
  std::vector<RocPoint> out;
  for (const auto& p : sweep(tgt, non))
    out.push_back({p.threshold, double(p.nontarget_accepted) / double(non.size()),
                   double(p.target_rejected) / double(tgt.size())});
  return out;
}

EerResult compute_eer(std::span<const double> targets, std::span<const double> nontargets) {
  if (targets.empty() || nontargets.empty()) throw Error("compute_eer: empty score list");
  auto tgt = sorted_copy(targets, "target");
  auto non = sorted_copy(nontargets, "non-target");
  const auto pts = sweep(tgt, non);
  const double nt = double(tgt.size()), nn = double(non.size());
  // FAR - FRR goes from 1 at the lowest threshold to -1 at +inf and never
  // increases. Compare in integer counts so exact crossings are found exactly.
  auto sign = [&](const SweepPoint& p) {
    auto lhs = static_cast<long double>(p.nontarget_accepted) * tgt.size();
    auto rhs = static_cast<long double>(p.target_rejected) * non.size();
    return lhs > rhs ? 1 : lhs < rhs ? -1 : 0;
  };
  for (std::size_t j = 0; j < pts.size(); ++j) {
    int s = sign(pts[j]);
    if (s > 0) continue;
    const double far_j = double(pts[j].nontarget_accepted) / nn;
    const double frr_j = double(pts[j].target_rejected) / nt;
    if (s == 0) return {far_j, pts[j].threshold};
    // j >= 1 here because the first point always has FAR = 1 > FRR = 0.
    const double far_p = double(pts[j - 1].nontarget_accepted) / nn;
    const double frr_p = double(pts[j - 1].target_rejected) / nt;
    const double d_p = far_p - frr_p, d_j = far_j - frr_j;
    const double t = d_p / (d_p - d_j);
    return {far_p + t * (far_j - far_p), pts[j - 1].threshold};
  }
  throw Error("compute_eer: no crossing found");  // unreachable
}

ScoreAudit distinct_score_audit(std::span<const ScoredTrial> scored) {
  std::map<double, std::size_t> counts;
  for (const auto& st : scored)
    if (!st.failed && st.score) ++counts[*st.score];
  ScoreAudit out;
  out.distinct = counts.size();
  out.histogram.assign(counts.begin(), counts.end());
  return out;
}

FailureMode failure_mode_from_string(std::string_view s) {
  if (s == "exclude") return FailureMode::exclude;
  if (s == "strict") return FailureMode::strict;
  throw ConfigError("unknown failure mode '" + std::string(s) + "' (expected exclude|strict)");
}

std::string_view to_string(FailureMode m) { return m == FailureMode::strict ? "strict" : "exclude"; }

std::optional<double> AttributeStats::coverage() const {
  if (total == 0) return std::nullopt;
  return double(predicted) / double(total);
}

std::optional<double> AttributeStats::accuracy() const {
  if (judged == 0) return std::nullopt;
  return double(correct) / double(judged);
}

MetricsReport compute_report(std::span<const ScoredTrial> scored, const MetadataMap& metadata,
                             const ReportOptions& options) {
  if (scored.empty()) throw Error("compute_report: no scored trials");
  const auto& gaz = options.gazetteer ? *options.gazetteer : AccentGazetteer::builtin();
  MetricsReport r;
  std::vector<double> tgt, non;
  const double strict_score = options.protocol == Protocol::confidence ? 50.0 : 0.0;

  auto truth_of = [&](const UtteranceId& utt) -> const SpeakerMetadata* {
    auto it = metadata.find(speaker_of(utt));
    return it == metadata.end() ? nullptr : &it->second;
  };

  for (const auto& st : scored) {
    if (st.failed) {
      ++r.n_failed;
      if (options.failure_mode == FailureMode::strict)
        (st.trial.target ? tgt : non).push_back(strict_score);
    } else {
      ++r.n_scored;
      (st.trial.target ? tgt : non).push_back(*st.score);
    }
    if (!st.parsed) continue;
    const auto& p = *st.parsed;
    r.n_disagreement += p.disagreement ? 1 : 0;
    r.n_attribution_ambiguous += p.attribution_ambiguous ? 1 : 0;

    // Per-audio outcomes: predicted?, judged?, correct?
    struct Outcome {
      bool predicted = false, judged = false, correct = false;
    };
    Outcome g[2], a[2];
    for (int k = 0; k < 2; ++k) {
      const auto* truth = truth_of(k == 0 ? st.trial.enroll : st.trial.test);
      if (p.gender[k] != Gender::unknown) {
        g[k].predicted = true;
        if (truth && truth->gender != Gender::unknown) {
          g[k].judged = true;
          g[k].correct = truth->gender == p.gender[k];
        }
      }
      for (const auto& mention : p.accents[k]) {
        // An empty truth only tells whether the mention is geographic.
        if (score_accent(mention, "", gaz) == AccentOutcome::no_prediction) continue;
        a[k].predicted = true;
        if (truth && !truth->nationality.empty()) {
          a[k].judged = true;
          a[k].correct = score_accent(mention, truth->nationality, gaz) == AccentOutcome::correct;
        }
        break;
      }
    }
    auto accumulate = [&](AttributeStats& stats, const Outcome (&o)[2]) {
      if (options.attribute_unit == AttributeUnit::per_audio) {
        for (const auto& x : o) {
          ++stats.total;
          stats.predicted += x.predicted;
          stats.judged += x.judged;
          stats.correct += x.correct;
        }
      } else {
        ++stats.total;
        stats.predicted += (o[0].predicted || o[1].predicted);
        bool judged = o[0].judged || o[1].judged;
        stats.judged += judged;
        stats.correct +=
            judged && (!o[0].judged || o[0].correct) && (!o[1].judged || o[1].correct);
      }
    };
    accumulate(r.gender, g);
    accumulate(r.accent, a);
  }

  r.failure_rate = double(r.n_failed) / double(r.n_scored + r.n_failed);
  r.n_target = tgt.size();
  r.n_nontarget = non.size();
  if (!tgt.empty() && !non.empty()) {
    auto e = compute_eer(tgt, non);
    r.eer = e.eer;
    r.threshold_at_eer = e.threshold;
  }
  r.audit = distinct_score_audit(scored);
  return r;
}

namespace {

json opt(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

json to_json(const AttributeStats& s) {
  return {{"total", s.total},       {"predicted", s.predicted},   {"judged", s.judged},
          {"correct", s.correct},   {"coverage", opt(s.coverage())}, {"accuracy", opt(s.accuracy())}};
}

std::string pct(std::optional<double> v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * *v);
  return buf;
}

}  // namespace

json to_json(const MetricsReport& r) {
  json hist = json::array();
  for (const auto& [score, count] : r.audit.histogram) hist.push_back({score, count});
  return {{"eer", opt(r.eer)},
          {"threshold_at_eer", opt(r.threshold_at_eer)},
          {"n_scored", r.n_scored},
          {"n_failed", r.n_failed},
          {"n_target", r.n_target},
          {"n_nontarget", r.n_nontarget},
          {"failure_rate", r.failure_rate},
          {"gender", to_json(r.gender)},
          {"accent", to_json(r.accent)},
          {"n_disagreement", r.n_disagreement},
          {"n_attribution_ambiguous", r.n_attribution_ambiguous},
          {"distinct_scores", r.audit.distinct},
          {"score_histogram", hist}};
}

json report_document(std::string_view model, std::span<const SplitReport> splits,
                     const MetricsReport& pooled) {
  json doc;
  doc["schema"] = "verilm.report/1";
  doc["model"] = model;
  doc["splits"] = json::array();
  for (const auto& s : splits) {
    auto j = to_json(s.report);
    j["split"] = s.split;
    j["config_hash"] = s.config_hash;
    doc["splits"].push_back(std::move(j));
  }
  doc["pooled"] = to_json(pooled);
  return doc;
}

std::string render_table(std::string_view model, std::span<const SplitReport> splits,
                         const MetricsReport& pooled) {
  std::vector<std::string> head{"Model"}, row{std::string(model)};
  for (const auto& s : splits) {
    head.push_back("EER " + (s.split.empty() ? std::string("split") : s.split));
    row.push_back(pct(s.report.eer));
  }
  head.insert(head.end(), {"Failure Rate", "Gender Accuracy", "Gender Predicted",
                           "Accent Accuracy", "Accent Predicted", "Distinct Scores"});
  row.insert(row.end(), {pct(pooled.failure_rate), pct(pooled.gender.accuracy()),
                         pct(pooled.gender.coverage()), pct(pooled.accent.accuracy()),
                         pct(pooled.accent.coverage()), std::to_string(pooled.audit.distinct)});
  std::string out;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      std::size_t w = std::max(head[i].size(), row[i].size());
      std::string cell = cells[i];
      if (i == 0) {
        cell.resize(w, ' ');
      } else {
        cell.insert(0, w - cell.size(), ' ');
      }
      out += cell;
      out += i + 1 < cells.size() ? "  " : "\n";
    }
  };
  emit(head);
  emit(row);
  return out;
}

}  // namespace verilm
