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

#include "anticipate/synthetic.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "anticipate/errors.h"

namespace anticipate {

void ValidateSyntheticConfig(const SyntheticConfig& c) {
  auto require = [](bool ok, const char* field, const char* what) {
    if (!ok) throw ConfigError(field, what);
  };
  require(c.num_clips >= 1, "num_clips", "must be >= 1");
  require(c.positive_fraction >= 0.0 && c.positive_fraction <= 1.0,
          "positive_fraction", "must lie in [0, 1]");
  require(c.num_frames >= 1, "num_frames", "must be >= 1");
  require(c.frame_rate_F > 0.0 && std::isfinite(c.frame_rate_F),
          "frame_rate_F", "must be > 0");
  require(c.D_g >= 1, "D_g", "must be >= 1");
  require(c.D_l >= 1, "D_l", "must be >= 1");
  require(c.K >= 1, "K", "must be >= 1");
  require(c.precursor_onset_frames >= 0, "precursor_onset_frames",
          "must be >= 0");
  require(c.precursor_onset_frames < c.num_frames, "precursor_onset_frames",
          "must be < num_frames");
  require(c.precursor_growth_tau > 0.0, "precursor_growth_tau", "must be > 0");
  require(std::isfinite(c.precursor_amplitude), "precursor_amplitude",
          "must be finite");
  require(c.noise_sigma >= 0.0 && std::isfinite(c.noise_sigma), "noise_sigma",
          "must be >= 0");
  require(c.object_presence >= 0.0 && c.object_presence <= 1.0,
          "object_presence", "must lie in [0, 1]");
  require(c.num_classes >= 1 && c.num_classes <= kNumRiskClasses,
          "num_classes", "must lie in [1, 3]");
}

int NumSyntheticPositives(const SyntheticConfig& c) {
  return static_cast<int>(std::lround(c.num_clips * c.positive_fraction));
}

Dataset GenerateSynthetic(const SyntheticConfig& c) {
  ValidateSyntheticConfig(c);
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto noise = [&] { return c.noise_sigma * normal(rng); };

  std::vector<std::vector<double>> directions(c.num_classes);
  for (auto& dir : directions) {
    double norm = 0.0;
    do {
      dir.assign(c.D_l, 0.0);
      norm = 0.0;
      for (double& v : dir) {
        v = normal(rng);
        norm += v * v;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& v : dir) v /= norm;
  }

  const int num_positive = NumSyntheticPositives(c);
  std::vector<Label> labels(c.num_clips, Label::kNegative);
  std::fill_n(labels.begin(), num_positive, Label::kPositive);
  std::shuffle(labels.begin(), labels.end(), rng);

  Dataset out;
  out.annotations.reserve(c.num_clips);
  out.features.reserve(c.num_clips);
  const int frames = c.num_frames;
  const int accident = frames;  // accident at the last frame
  const int onset = accident - c.precursor_onset_frames;

  for (int i = 0; i < c.num_clips; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "clip_%05d", i);

    ClipAnnotation a;
    a.clip_id = id;
    a.label = labels[i];
    a.num_frames = frames;
    a.frame_rate_F = c.frame_rate_F;
    int slot = -1;
    int cls = -1;
    if (a.positive()) {
      a.accident_start_T = accident;
      cls = std::uniform_int_distribution<int>(0, c.num_classes - 1)(rng);
      a.risk_class = static_cast<RiskClass>(cls);
      slot = std::uniform_int_distribution<int>(0, c.K - 1)(rng);
    }

    FeatureSequence f;
    f.clip_id = id;
    f.global_feats = Tensor(frames, c.D_g);
    for (double& v : f.global_feats.data()) v = noise();
    f.local_feats.reserve(frames);
    f.local_mask.reserve(frames);
    for (int t = 1; t <= frames; ++t) {
      Tensor locals(c.K, c.D_l);
      ObjectMask mask(c.K, 0);
      for (int j = 0; j < c.K; ++j) {
        const bool present = j == slot || unit(rng) < c.object_presence;
        if (!present) continue;
        mask[j] = 1;
        for (double& v : locals.row(j)) v = noise();
      }
      if (slot >= 0 && t >= onset) {
        const double g = c.precursor_amplitude *
                         std::exp(-(accident - t) / c.precursor_growth_tau);
        auto row = locals.row(slot);
        for (int d = 0; d < c.D_l; ++d) row[d] += g * directions[cls][d];
      }
      f.local_feats.push_back(std::move(locals));
      f.local_mask.push_back(std::move(mask));
    }
    out.annotations.push_back(std::move(a));
    out.features.push_back(std::move(f));
  }
  return out;
}

}  // namespace anticipate
