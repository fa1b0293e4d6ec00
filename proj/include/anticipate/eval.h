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

// Anticipation metrics.
//
// A clip is predicted positive at threshold q when its risk rate reaches q
// (r_t >= q) at some frame. Positives are only searched up to the accident
// frame T, negatives over the whole clip. Sweeping q yields precision, recall
// and the mean time-to-collision (T - t_cross) / F of the true positives.
//
// AP averages, over the distinct non-zero recall levels, the best precision
// reachable at that recall or higher. ATTC averages, over the same levels,
// the mean TTC at the highest threshold that still reaches the level; levels
// without a true positive are skipped.

#ifndef ANTICIPATE_EVAL_H_
#define ANTICIPATE_EVAL_H_

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anticipate/dataset.h"
#include "anticipate/model.h"

namespace anticipate::eval {

enum class ThresholdPolicy { kAllObserved, kFixedGrid };

struct EvalConfig {
  ThresholdPolicy policy = ThresholdPolicy::kAllObserved;
  int grid_size = 101;  // used by kFixedGrid; q = i / (n - 1)
  bool per_class = false;
};

void ValidateEvalConfig(const EvalConfig& config);

// One clip reduced to a single channel.
struct ScoredClip {
  std::vector<double> scores;
  bool positive = false;
  // Last frame searched for a crossing. For positives this is the accident
  // frame T; 0 means the whole clip.
  int last_frame = 0;
  double frame_rate = 20.0;

  int horizon() const;
  // Highest score within the horizon.
  double Peak() const;
};

// Smallest 1-based t <= horizon with r_t >= q.
std::optional<int> CrossingTime(std::span<const double> r, double q,
                                int horizon = -1);

enum class OutcomeKind { kTruePositive, kFalsePositive, kFalseNegative,
                         kTrueNegative };

struct ClipOutcome {
  OutcomeKind kind = OutcomeKind::kTrueNegative;
  double ttc = 0.0;  // seconds, true positives only
};

ClipOutcome ClassifyClip(const ScoredClip& clip, double q);

struct CurvePoint {
  double q = 0.0;
  double precision = 1.0;
  double recall = 0.0;
  std::optional<double> mean_ttc;
  int tp = 0, fp = 0, fn = 0, tn = 0;
};

// Points ordered by decreasing q. Throws UndefinedMetricError when there is
// no positive clip.
std::vector<CurvePoint> PrTtcCurve(std::span<const ScoredClip> clips,
                                   const EvalConfig& config = {});

double AveragePrecision(std::span<const CurvePoint> curve);

// Throws UndefinedMetricError when no recall level has a true positive.
double Attc(std::span<const CurvePoint> curve);

struct ClassReport {
  std::string name;
  int channel = 0;
  int num_positives = 0;
  int num_clips = 0;
  double ap = 0.0;
  std::optional<double> attc;
  std::vector<CurvePoint> curve;
};

struct EvalReport {
  std::vector<ClassReport> classes;
  std::vector<std::string> omitted_classes;  // no positives
  double macro_ap = 0.0;
  std::optional<double> macro_attc;  // mean over classes with an ATTC
};

// Channels of `trajectories` aligned with `annotations`. With one channel
// the single class is called "risk". With C channels, class c counts its own
// positives as positives and every other clip as negative.
std::vector<ScoredClip> ChannelClips(
    std::span<const model::RiskTrajectory> trajectories,
    std::span<const ClipAnnotation> annotations, int channel);

// Throws Error on misalignment and UndefinedMetricError if no class has a
// positive.
EvalReport PerClassReport(std::span<const model::RiskTrajectory> trajectories,
                          std::span<const ClipAnnotation> annotations,
                          const EvalConfig& config = {});

std::string ReportJson(const EvalReport& report);
void WriteCurveCsv(std::ostream& out, std::span<const CurvePoint> curve);

}  // namespace anticipate::eval

#endif  // ANTICIPATE_EVAL_H_
