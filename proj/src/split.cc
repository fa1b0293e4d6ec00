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

#include "anticipate/split.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <utility>

#include "anticipate/errors.h"

namespace anticipate {
namespace {

// Largest-remainder apportionment of n items over the fractions. Ties go to
// the earlier split.
std::array<std::size_t, 3> Apportion(std::size_t n,
                                     const std::array<double, 3>& fractions) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (int s = 0; s < 3; ++s) {
    const double exact = n * fractions[s];
    counts[s] = static_cast<std::size_t>(std::floor(exact));
    remainder[s] = exact - counts[s];
    assigned += counts[s];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainder[a] > remainder[b]; });
  for (int i = 0; assigned < n; i = (i + 1) % 3) {
    if (fractions[order[i]] > 0.0) {
      ++counts[order[i]];
      ++assigned;
    }
  }
  return counts;
}

void Append(Dataset& dst, const Dataset& src, std::size_t i) {
  dst.annotations.push_back(src.annotations[i]);
  dst.features.push_back(src.features[i]);
}

}  // namespace

DatasetSplits SplitDataset(const Dataset& dataset,
                           const std::array<double, 3>& fractions,
                           std::uint64_t seed) {
  if (dataset.empty()) {
    throw DataError(DataError::Kind::kInvariant, "dataset",
                    "cannot split an empty dataset");
  }
  for (double f : fractions) {
    if (!(f >= 0.0)) throw ConfigError("fractions", "must be nonnegative");
  }
  const double total = std::accumulate(fractions.begin(), fractions.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("fractions", "must sum to 1, got " + std::to_string(total));
  }

  // Stratum key: (label, risk class or -1). std::map keeps a fixed order.
  std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const ClipAnnotation& a = dataset.annotations[i];
    const int cls = a.risk_class ? static_cast<int>(*a.risk_class) : -1;
    strata[{static_cast<int>(a.label), cls}].push_back(i);
  }

  std::mt19937_64 rng(seed);
  std::vector<int> assignment(dataset.size(), 0);
  for (auto& [key, members] : strata) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto counts = Apportion(members.size(), fractions);
    std::size_t pos = 0;
    for (int s = 0; s < 3; ++s) {
      for (std::size_t c = 0; c < counts[s]; ++c) assignment[members[pos++]] = s;
    }
  }

  DatasetSplits out;
  Dataset* targets[3] = {&out.train, &out.val, &out.test};
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    Append(*targets[assignment[i]], dataset, i);
  }
  return out;
}

}  // namespace anticipate
