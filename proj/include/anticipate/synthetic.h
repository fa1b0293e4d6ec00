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

// Synthetic incident sequences standing in for video-derived features.
//
// Negatives are pure Gaussian noise. In a positive clip one object slot
// carries a class-specific unit direction scaled by
//
//   amplitude * exp(-(T - t) / precursor_growth_tau)
//
// for frames t >= T - precursor_onset_frames, added on top of the noise, with
// T = num_frames. The onset bounds how early any model can possibly react.

#ifndef ANTICIPATE_SYNTHETIC_H_
#define ANTICIPATE_SYNTHETIC_H_

#include <cstdint>

#include "anticipate/dataset.h"

namespace anticipate {

struct SyntheticConfig {
  int num_clips = 600;
  double positive_fraction = 0.75;
  int num_frames = 100;
  double frame_rate_F = 20.0;
  int D_g = 8;
  int D_l = 8;
  int K = 4;
  int precursor_onset_frames = 60;
  double precursor_growth_tau = 20.0;
  double precursor_amplitude = 1.0;
  double noise_sigma = 1.0;
  // Probability that a non-precursor object slot is present in a frame.
  double object_presence = 1.0;
  int num_classes = 3;
  std::uint64_t seed = 0;
};

// Throws ConfigError naming the first invalid field.
void ValidateSyntheticConfig(const SyntheticConfig& config);

// round(num_clips * positive_fraction), halves away from zero.
int NumSyntheticPositives(const SyntheticConfig& config);

// Deterministic given config.seed.
Dataset GenerateSynthetic(const SyntheticConfig& config);

}  // namespace anticipate

#endif  // ANTICIPATE_SYNTHETIC_H_
