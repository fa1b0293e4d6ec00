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

#include "anticipate/loss.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>

#include "anticipate/errors.h"
#include "anticipate/format.h"

namespace anticipate::loss {
namespace {

std::atomic<std::uint64_t> phi_reads{0};

void RequireDistance(double d) {
  if (!(d >= 0.0)) throw DomainError("frame distance d must be >= 0");
}

void RequireEpoch(int epoch) {
  if (epoch < 1) throw DomainError("epoch must be >= 1");
}

double Clamp(double r) { return std::clamp(r, kRiskClamp, 1.0 - kRiskClamp); }

bool InsideClamp(double r) {
  return r > kRiskClamp && r < 1.0 - kRiskClamp;
}

}  // namespace

std::string_view VariantName(Variant variant) {
  switch (variant) {
    case Variant::kEL:
      return "EL";
    case Variant::kLEA:
      return "LEA";
    case Variant::kAdaLEA:
      return "AdaLEA";
  }
  return "?";
}

std::optional<Variant> ParseVariant(std::string_view name) {
  if (name == "EL") return Variant::kEL;
  if (name == "LEA") return Variant::kLEA;
  if (name == "AdaLEA") return Variant::kAdaLEA;
  return std::nullopt;
}

void ValidateLossConfig(const LossConfig& c) {
  if (!(c.lambda >= 0.0)) throw ConfigError("lambda", "must be >= 0");
  if (!(c.gamma >= 0.0)) throw ConfigError("gamma", "must be >= 0");
  if (!(c.frame_rate_F > 0.0) || !std::isfinite(c.frame_rate_F)) {
    throw ConfigError("frame_rate_F", "must be > 0");
  }
}

double ElWeight(double d) {
  RequireDistance(d);
  return std::exp(-d);
}

double LeaWeight(double d, int epoch, double lambda) {
  RequireDistance(d);
  RequireEpoch(epoch);
  if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
  return std::exp(-std::max(0.0, d - lambda * (epoch - 1)));
}

double AdaleaWeight(double d, int epoch, double frame_rate, double phi_prev,
                    double gamma) {
  RequireDistance(d);
  RequireEpoch(epoch);
  if (!(frame_rate > 0.0)) throw DomainError("frame rate must be > 0");
  if (!(phi_prev >= 0.0)) throw DomainError("phi must be >= 0");
  if (!(gamma >= 0.0)) throw DomainError("gamma must be >= 0");
  return std::exp(-std::max(0.0, d - frame_rate * phi_prev - gamma));
}

double PenaltyWeight(const LossConfig& config, const EpochContext& ctx,
                     double d) {
  switch (config.variant) {
    case Variant::kEL:
      return ElWeight(d);
    case Variant::kLEA:
      return LeaWeight(d, ctx.epoch, config.lambda);
    case Variant::kAdaLEA:
      phi_reads.fetch_add(1, std::memory_order_relaxed);
      return AdaleaWeight(d, ctx.epoch, config.frame_rate_F, ctx.phi_prev,
                          config.gamma);
  }
  return 0.0;
}

std::uint64_t PhiReadCount() { return phi_reads.load(); }

ClipLoss PositiveClipLoss(std::span<const double> r, int accident_frame,
                          const LossConfig& config, const EpochContext& ctx) {
  if (accident_frame < 1 || static_cast<std::size_t>(accident_frame) > r.size()) {
    throw DomainError("accident frame " + std::to_string(accident_frame) +
                      " outside [1, " + std::to_string(r.size()) + "]");
  }
  ClipLoss out;
  out.grad.assign(r.size(), 0.0);
  for (int t = 1; t <= accident_frame; ++t) {
    const double alpha = PenaltyWeight(config, ctx, accident_frame - t);
    const double rt = r[t - 1];
    out.value -= alpha * std::log(Clamp(rt));
    if (InsideClamp(rt)) out.grad[t - 1] = -alpha / rt;
  }
  return out;
}

ClipLoss NegativeClipLoss(std::span<const double> r, int last_frame) {
  const std::size_t n =
      last_frame < 0 ? r.size()
                     : std::min<std::size_t>(r.size(), last_frame);
  ClipLoss out;
  out.grad.assign(r.size(), 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    out.value -= std::log1p(-Clamp(r[t]));
    if (InsideClamp(r[t])) out.grad[t] = 1.0 / (1.0 - r[t]);
  }
  return out;
}

TrajectoryLoss ClipTrajectoryLoss(const Tensor& rates,
                                  const ClipAnnotation& annotation,
                                  const LossConfig& config,
                                  const EpochContext& ctx) {
  const std::size_t frames = rates.rows(), channels = rates.cols();
  if (frames != static_cast<std::size_t>(annotation.num_frames)) {
    throw Error("trajectory of " + std::to_string(frames) +
                " frames is not aligned with clip " + annotation.clip_id);
  }
  int positive_channel = -1;
  int horizon = -1;
  if (annotation.positive()) {
    horizon = *annotation.accident_start_T;
    if (channels == 1) {
      positive_channel = 0;
    } else {
      if (!annotation.risk_class) {
        throw Error("clip " + annotation.clip_id +
                    " has no risk_class for a multi-class model");
      }
      positive_channel = static_cast<int>(*annotation.risk_class);
      if (positive_channel >= static_cast<int>(channels)) {
        throw Error("clip " + annotation.clip_id + " has risk class channel " +
                    std::to_string(positive_channel) + " but the model has " +
                    std::to_string(channels));
      }
    }
  }

  TrajectoryLoss out;
  out.grad = Tensor(frames, channels);
  std::vector<double> channel(frames);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t t = 0; t < frames; ++t) channel[t] = rates(t, c);
    const ClipLoss part =
        static_cast<int>(c) == positive_channel
            ? PositiveClipLoss(channel, horizon, config, ctx)
            : NegativeClipLoss(channel, horizon);
    out.value += part.value;
    for (std::size_t t = 0; t < frames; ++t) out.grad(t, c) = part.grad[t];
  }
  return out;
}

double BatchLoss(std::span<const model::RiskTrajectory> trajectories,
                 std::span<const ClipAnnotation> annotations,
                 const LossConfig& config, const EpochContext& ctx) {
  if (trajectories.size() != annotations.size() || trajectories.empty()) {
    throw Error("batch_loss: " + std::to_string(trajectories.size()) +
                " trajectories for " + std::to_string(annotations.size()) +
                " annotations");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    if (trajectories[i].clip_id != annotations[i].clip_id) {
      throw Error("batch_loss: trajectory " + trajectories[i].clip_id +
                  " paired with annotation " + annotations[i].clip_id);
    }
    total += ClipTrajectoryLoss(trajectories[i].rates, annotations[i], config,
                                ctx)
                 .value;
  }
  return total / static_cast<double>(trajectories.size());
}

diff::Var BatchLoss(std::span<const diff::Var> trajectories,
                    std::span<const ClipAnnotation> annotations,
                    const LossConfig& config, const EpochContext& ctx) {
  if (trajectories.size() != annotations.size() || trajectories.empty()) {
    throw Error("batch_loss: " + std::to_string(trajectories.size()) +
                " trajectories for " + std::to_string(annotations.size()) +
                " annotations");
  }
  const double scale = 1.0 / static_cast<double>(trajectories.size());
  diff::Var total;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    TrajectoryLoss clip = ClipTrajectoryLoss(trajectories[i].value(),
                                             annotations[i], config, ctx);
    for (double& g : clip.grad.data()) g *= scale;
    diff::Var term =
        diff::ScalarFunction(trajectories[i], clip.value * scale, clip.grad);
    total = total.valid() ? diff::Add(total, term) : term;
  }
  return total;
}

std::vector<ScheduleRow> DumpSchedule(const LossConfig& config, int epochs,
                                      int frames,
                                      std::span<const double> phi_sequence) {
  ValidateLossConfig(config);
  if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (frames < 1) throw ConfigError("frames", "must be >= 1");
  std::vector<ScheduleRow> rows;
  rows.reserve(static_cast<std::size_t>(epochs) * frames);
  for (int e = 1; e <= epochs; ++e) {
    EpochContext ctx{e, 0.0};
    if (!phi_sequence.empty()) {
      ctx.phi_prev = phi_sequence[std::min<std::size_t>(e - 1,
                                                        phi_sequence.size() - 1)];
    }
    for (int t = 1; t <= frames; ++t) {
      const int d = frames - t;
      rows.push_back({e, t, d, PenaltyWeight(config, ctx, d)});
    }
  }
  return rows;
}

void WriteScheduleCsv(std::ostream& out, std::span<const ScheduleRow> rows) {
  out << "epoch,t,d,alpha\n";
  for (const ScheduleRow& row : rows) {
    out << row.epoch << ',' << row.t << ',' << row.d << ','
        << FormatDouble(row.alpha) << '\n';
  }
}

}  // namespace anticipate::loss
