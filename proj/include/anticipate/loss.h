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

// Early-anticipation losses.
//
// A positive clip with accident frame T is penalised per frame t <= T by
//
//   -alpha(d) * log(r_t),   d = T - t (frames before the accident),
//
// and a negative clip by the plain cross-entropy -log(1 - r_t). The three
// variants differ only in the penalty weight alpha:
//
//   EL      alpha = exp(-d)
//   LEA     alpha = exp(-max(0, d - lambda * (e - 1)))
//   AdaLEA  alpha = exp(-max(0, d - F * phi(e - 1) - gamma))
//
// where e is the 1-based training epoch, F the frame rate, and phi(e - 1) the
// validation ATTC (seconds) measured after the previous epoch, phi(0) = 0.
// LEA moves the saturation frontier (the largest d with alpha = 1) back by
// lambda frames per epoch; AdaLEA places it at F * phi + gamma frames.

#ifndef ANTICIPATE_LOSS_H_
#define ANTICIPATE_LOSS_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "anticipate/dataset.h"
#include "anticipate/model.h"
#include "anticipate/tape.h"

namespace anticipate::loss {

enum class Variant { kEL, kLEA, kAdaLEA };

std::string_view VariantName(Variant variant);
std::optional<Variant> ParseVariant(std::string_view name);

struct LossConfig {
  Variant variant = Variant::kAdaLEA;
  double lambda = 3.0;  // frames per epoch
  double gamma = 5.0;   // frames
  double frame_rate_F = 20.0;
};

// Throws ConfigError naming the field.
void ValidateLossConfig(const LossConfig& config);

struct EpochContext {
  int epoch = 1;          // e, 1-based
  double phi_prev = 0.0;  // phi(e - 1), seconds
};

// Risk rates are clamped to [kRiskClamp, 1 - kRiskClamp] before the log.
inline constexpr double kRiskClamp = 1e-7;

// All three throw DomainError on violated preconditions (d < 0, e < 1, ...).
double ElWeight(double d);
double LeaWeight(double d, int epoch, double lambda);
double AdaleaWeight(double d, int epoch, double frame_rate, double phi_prev,
                    double gamma);

// Weight of the configured variant. Only AdaLEA reads ctx.phi_prev.
double PenaltyWeight(const LossConfig& config, const EpochContext& ctx,
                     double d);

// Number of times a penalty weight consumed phi since process start.
std::uint64_t PhiReadCount();

struct ClipLoss {
  double value = 0.0;
  std::vector<double> grad;  // d value / d r_t, same length as r
};

// sum_{t=1}^{T} -alpha(T - t) log r_t. Throws DomainError unless
// 1 <= T <= r.size().
ClipLoss PositiveClipLoss(std::span<const double> r, int accident_frame,
                          const LossConfig& config, const EpochContext& ctx);

// sum_{t=1}^{last_frame} -log(1 - r_t); last_frame defaults to all frames.
ClipLoss NegativeClipLoss(std::span<const double> r, int last_frame = -1);

// Loss of one clip summed over channels. With C = 1 positives are positive
// on the single channel. With C > 1 a positive clip of class c is positive
// on channel c and negative on every other channel; negatives are negative
// on every channel. Positive clips are supervised on frames 1..T only.
// grad has the shape of `rates`.
struct TrajectoryLoss {
  double value = 0.0;
  Tensor grad;
};
TrajectoryLoss ClipTrajectoryLoss(const Tensor& rates,
                                  const ClipAnnotation& annotation,
                                  const LossConfig& config,
                                  const EpochContext& ctx);

// Mean over clips of ClipTrajectoryLoss. Throws Error on misalignment.
double BatchLoss(std::span<const model::RiskTrajectory> trajectories,
                 std::span<const ClipAnnotation> annotations,
                 const LossConfig& config, const EpochContext& ctx);

// Same quantity recorded on a tape so it can be differentiated with respect
// to the model parameters.
diff::Var BatchLoss(std::span<const diff::Var> trajectories,
                    std::span<const ClipAnnotation> annotations,
                    const LossConfig& config, const EpochContext& ctx);

struct ScheduleRow {
  int epoch = 1;
  int t = 1;
  int d = 0;
  double alpha = 1.0;
};

// alpha(t) for every epoch 1..epochs and frame 1..frames with the accident at
// the last frame. phi_sequence[e - 1] is phi(e - 1); missing entries repeat
// the last value (or 0 when empty).
std::vector<ScheduleRow> DumpSchedule(const LossConfig& config, int epochs,
                                      int frames,
                                      std::span<const double> phi_sequence);

// "epoch,t,d,alpha" header plus one line per row.
void WriteScheduleCsv(std::ostream& out, std::span<const ScheduleRow> rows);

}  // namespace anticipate::loss

#endif  // ANTICIPATE_LOSS_H_
