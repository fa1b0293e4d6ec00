// Copyright 2026 The Anticipate Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "anticipate/eval.h"

#include <algorithm>
#include <functional>
#include <ostream>

#include "anticipate/errors.h"
#include "anticipate/format.h"
#include "json.hpp"

namespace anticipate::eval {
namespace {

using Json = nlohmann::ordered_json;

// Distinct non-zero recall levels, each paired with the index of the highest
// threshold reaching it. Relies on `curve` being sorted by decreasing q.
std::vector<std::pair<double, std::size_t>> RecallLevels(
    std::span<const CurvePoint> curve) {
  std::vector<std::pair<double, std::size_t>> levels;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double r = curve[i].recall;
    if (r <= 0.0) continue;
    const bool seen = std::any_of(levels.begin(), levels.end(),
                                  [&](const auto& l) { return l.first == r; });
    if (!seen) levels.emplace_back(r, i);
  }
  return levels;
}

std::string ClassName(int channel, int channels) {
  if (channels == 1) return "risk";
  if (channel < kNumRiskClasses) {
    return std::string(RiskClassName(static_cast<RiskClass>(channel)));
  }
  return "class_" + std::to_string(channel);
}

}  // namespace

void ValidateEvalConfig(const EvalConfig& config) {
  if (config.policy == ThresholdPolicy::kFixedGrid && config.grid_size < 2) {
    throw ConfigError("grid_size", "fixed threshold grid needs n >= 2");
  }
}

int ScoredClip::horizon() const {
  const int n = static_cast<int>(scores.size());
  return last_frame > 0 ? std::min(last_frame, n) : n;
}

double ScoredClip::Peak() const {
  const int h = horizon();
  if (h == 0) return 0.0;
  return *std::max_element(scores.begin(), scores.begin() + h);
}

std::optional<int> CrossingTime(std::span<const double> r, double q,
                                int horizon) {
  const std::size_t n =
      horizon < 0 ? r.size() : std::min<std::size_t>(r.size(), horizon);
  for (std::size_t t = 0; t < n; ++t) {
    if (r[t] >= q) return static_cast<int>(t + 1);
  }
  return std::nullopt;
}

ClipOutcome ClassifyClip(const ScoredClip& clip, double q) {
  const std::optional<int> cross = CrossingTime(clip.scores, q, clip.horizon());
  if (clip.positive) {
    if (!cross) return {OutcomeKind::kFalseNegative, 0.0};
    return {OutcomeKind::kTruePositive,
            (clip.horizon() - *cross) / clip.frame_rate};
  }
  return {cross ? OutcomeKind::kFalsePositive : OutcomeKind::kTrueNegative,
          0.0};
}

std::vector<CurvePoint> PrTtcCurve(std::span<const ScoredClip> clips,
                                   const EvalConfig& config) {
  ValidateEvalConfig(config);
  const auto positives = std::count_if(
      clips.begin(), clips.end(), [](const ScoredClip& c) { return c.positive; });
  if (positives == 0) {
    throw UndefinedMetricError("no positive clips: AP is undefined");
  }

  std::vector<double> thresholds;
  if (config.policy == ThresholdPolicy::kAllObserved) {
    for (const ScoredClip& c : clips) thresholds.push_back(c.Peak());
  } else {
    for (int i = 0; i < config.grid_size; ++i) {
      thresholds.push_back(static_cast<double>(i) / (config.grid_size - 1));
    }
  }
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  std::vector<CurvePoint> curve;
  curve.reserve(thresholds.size());
  for (double q : thresholds) {
    CurvePoint p;
    p.q = q;
    double ttc_sum = 0.0;
    for (const ScoredClip& c : clips) {
      const ClipOutcome o = ClassifyClip(c, q);
      switch (o.kind) {
        case OutcomeKind::kTruePositive:
          ++p.tp;
          ttc_sum += o.ttc;
          break;
        case OutcomeKind::kFalsePositive:
          ++p.fp;
          break;
        case OutcomeKind::kFalseNegative:
          ++p.fn;
          break;
        case OutcomeKind::kTrueNegative:
          ++p.tn;
          break;
      }
    }
    const int predicted = p.tp + p.fp;
    p.precision = predicted == 0 ? 1.0 : static_cast<double>(p.tp) / predicted;
    p.recall = static_cast<double>(p.tp) / (p.tp + p.fn);
    if (p.tp > 0) p.mean_ttc = ttc_sum / p.tp;
    curve.push_back(p);
  }
  return curve;
}

double AveragePrecision(std::span<const CurvePoint> curve) {
  const auto levels = RecallLevels(curve);
  if (levels.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [recall, index] : levels) {
    double best = 0.0;
    for (const CurvePoint& p : curve) {
      if (p.recall >= recall) best = std::max(best, p.precision);
    }
    sum += best;
  }
  return sum / static_cast<double>(levels.size());
}

double Attc(std::span<const CurvePoint> curve) {
  double sum = 0.0;
  int count = 0;
  for (const auto& [recall, index] : RecallLevels(curve)) {
    if (!curve[index].mean_ttc) continue;
    sum += *curve[index].mean_ttc;
    ++count;
  }
  if (count == 0) throw UndefinedMetricError("ATTC undefined: no true positive");
  return sum / count;
}

std::vector<ScoredClip> ChannelClips(
    std::span<const model::RiskTrajectory> trajectories,
    std::span<const ClipAnnotation> annotations, int channel) {
  if (trajectories.size() != annotations.size()) {
    throw Error("evaluation: " + std::to_string(trajectories.size()) +
                " trajectories for " + std::to_string(annotations.size()) +
                " annotations");
  }
  std::vector<ScoredClip> clips;
  clips.reserve(trajectories.size());
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const model::RiskTrajectory& tr = trajectories[i];
    const ClipAnnotation& a = annotations[i];
    if (tr.clip_id != a.clip_id ||
        tr.num_frames() != static_cast<std::size_t>(a.num_frames)) {
      throw Error("evaluation: trajectory " + tr.clip_id +
                  " is not aligned with annotation " + a.clip_id);
    }
    if (channel < 0 || static_cast<std::size_t>(channel) >= tr.num_classes()) {
      throw Error("evaluation: channel " + std::to_string(channel) +
                  " out of range");
    }
    ScoredClip c;
    c.scores = tr.Channel(channel);
    c.frame_rate = a.frame_rate_F;
    if (a.positive()) {
      // Frames after the accident are never used, whatever the class.
      c.last_frame = *a.accident_start_T;
      c.positive = tr.num_classes() == 1 ||
                   (a.risk_class && static_cast<int>(*a.risk_class) == channel);
    }
    clips.push_back(std::move(c));
  }
  return clips;
}

EvalReport PerClassReport(std::span<const model::RiskTrajectory> trajectories,
                          std::span<const ClipAnnotation> annotations,
                          const EvalConfig& config) {
  ValidateEvalConfig(config);
  if (trajectories.empty()) throw Error("evaluation: no clips");
  const int channels = static_cast<int>(trajectories.front().num_classes());
  EvalReport report;
  double ap_sum = 0.0, attc_sum = 0.0;
  int attc_count = 0;
  for (int c = 0; c < channels; ++c) {
    const std::vector<ScoredClip> clips =
        ChannelClips(trajectories, annotations, c);
    ClassReport cls;
    cls.name = ClassName(c, channels);
    cls.channel = c;
    cls.num_clips = static_cast<int>(clips.size());
    cls.num_positives = static_cast<int>(std::count_if(
        clips.begin(), clips.end(), [](const ScoredClip& s) { return s.positive; }));
    if (cls.num_positives == 0) {
      report.omitted_classes.push_back(cls.name);
      continue;
    }
    cls.curve = PrTtcCurve(clips, config);
    cls.ap = AveragePrecision(cls.curve);
    try {
      cls.attc = Attc(cls.curve);
    } catch (const UndefinedMetricError&) {
      cls.attc.reset();
    }
    ap_sum += cls.ap;
    if (cls.attc) {
      attc_sum += *cls.attc;
      ++attc_count;
    }
    report.classes.push_back(std::move(cls));
  }
  if (report.classes.empty()) {
    throw UndefinedMetricError("no class has a positive clip");
  }
  report.macro_ap = ap_sum / static_cast<double>(report.classes.size());
  if (attc_count > 0) report.macro_attc = attc_sum / attc_count;
  return report;
}

std::string ReportJson(const EvalReport& report) {
  Json j;
  Json classes = Json::array();
  for (const ClassReport& c : report.classes) {
    Json e;
    e["name"] = c.name;
    e["channel"] = c.channel;
    e["num_clips"] = c.num_clips;
    e["num_positives"] = c.num_positives;
    e["ap"] = c.ap;
    e["attc"] = c.attc ? Json(*c.attc) : Json(nullptr);
    classes.push_back(std::move(e));
  }
  j["classes"] = std::move(classes);
  j["omitted_classes"] = report.omitted_classes;
  j["macro"] = {{"ap", report.macro_ap},
                {"attc", report.macro_attc ? Json(*report.macro_attc)
                                           : Json(nullptr)}};
  return j.dump(2) + "\n";
}

void WriteCurveCsv(std::ostream& out, std::span<const CurvePoint> curve) {
  out << "q,precision,recall,mean_ttc,tp,fp,fn,tn\n";
  for (const CurvePoint& p : curve) {
    out << FormatDouble(p.q) << ',' << FormatDouble(p.precision) << ','
        << FormatDouble(p.recall) << ','
        << (p.mean_ttc ? FormatDouble(*p.mean_ttc) : std::string()) << ','
        << p.tp << ',' << p.fp << ',' << p.fn << ',' << p.tn << '\n';
  }
}

}  // namespace anticipate::eval
