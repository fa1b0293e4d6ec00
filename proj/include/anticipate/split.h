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

#ifndef ANTICIPATE_SPLIT_H_
#define ANTICIPATE_SPLIT_H_

#include <array>
#include <cstdint>

#include "anticipate/dataset.h"

namespace anticipate {

struct DatasetSplits {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Stratified by (label, risk_class). Within each stratum the clips are
// shuffled with `seed` and apportioned by largest remainder, so every split
// holds its share of each stratum to within one clip. Clips keep their
// original relative order inside each split.
//
// Throws DataError for an empty dataset and ConfigError("fractions") unless
// the fractions are nonnegative and sum to 1 within 1e-9.
DatasetSplits SplitDataset(const Dataset& dataset,
                           const std::array<double, 3>& fractions,
                           std::uint64_t seed);

}  // namespace anticipate

#endif  // ANTICIPATE_SPLIT_H_
