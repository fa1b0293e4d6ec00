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

#include "anticipate/dataset.h"

#include <algorithm>
#include <cmath>

#include "anticipate/errors.h"

namespace anticipate {
namespace {

[[noreturn]] void Violation(const std::string& clip_id,
                            const std::string& what) {
  throw DataError(DataError::Kind::kInvariant, "clip " + clip_id, what);
}

}  // namespace

std::string_view LabelName(Label label) {
  return label == Label::kPositive ? "positive" : "negative";
}

std::optional<Label> ParseLabel(std::string_view name) {
  if (name == "positive") return Label::kPositive;
  if (name == "negative") return Label::kNegative;
  return std::nullopt;
}

std::string_view RiskClassName(RiskClass cls) {
  switch (cls) {
    case RiskClass::kCyclist:
      return "cyclist";
    case RiskClass::kPedestrian:
      return "pedestrian";
    case RiskClass::kVehicle:
      return "vehicle";
  }
  return "unknown";
}

std::optional<RiskClass> ParseRiskClass(std::string_view name) {
  if (name == "cyclist") return RiskClass::kCyclist;
  if (name == "pedestrian") return RiskClass::kPedestrian;
  if (name == "vehicle") return RiskClass::kVehicle;
  return std::nullopt;
}

std::size_t Dataset::num_positives() const {
  return static_cast<std::size_t>(
      std::count_if(annotations.begin(), annotations.end(),
                    [](const ClipAnnotation& a) { return a.positive(); }));
}

void ValidateAnnotation(const ClipAnnotation& a) {
  if (a.clip_id.empty()) Violation("<empty>", "clip_id is empty");
  if (a.num_frames < 1) Violation(a.clip_id, "num_frames must be >= 1");
  if (!(a.frame_rate_F > 0) || !std::isfinite(a.frame_rate_F)) {
    Violation(a.clip_id, "frame_rate_F must be > 0");
  }
  if (a.positive()) {
    if (!a.accident_start_T) {
      Violation(a.clip_id, "positive clip without accident_start_T");
    }
    if (*a.accident_start_T < 1 || *a.accident_start_T > a.num_frames) {
      Violation(a.clip_id, "accident_start_T " +
                               std::to_string(*a.accident_start_T) +
                               " outside [1, " + std::to_string(a.num_frames) +
                               "]");
    }
  } else {
    if (a.accident_start_T) {
      Violation(a.clip_id, "negative clip with accident_start_T");
    }
    if (a.risk_class) Violation(a.clip_id, "negative clip with risk_class");
  }
}

void ValidateFeatures(const FeatureSequence& f) {
  const std::size_t frames = f.num_frames();
  if (f.local_feats.size() != frames || f.local_mask.size() != frames) {
    Violation(f.clip_id, "local features/mask do not cover every frame");
  }
  const std::size_t k = f.num_objects(), dl = f.local_dim();
  for (std::size_t t = 0; t < frames; ++t) {
    const Tensor& locals = f.local_feats[t];
    if (locals.rows() != k || locals.cols() != dl || f.local_mask[t].size() != k) {
      Violation(f.clip_id,
                "frame " + std::to_string(t + 1) + " has inconsistent local shape");
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (f.local_mask[t][j]) continue;
      for (double v : locals.row(j)) {
        if (v != 0.0) {
          Violation(f.clip_id, "masked-out local row " + std::to_string(j) +
                                   " at frame " + std::to_string(t + 1) +
                                   " is not zero");
        }
      }
    }
  }
  if (!f.global_feats.AllFinite()) Violation(f.clip_id, "non-finite feature");
  for (const Tensor& locals : f.local_feats) {
    if (!locals.AllFinite()) Violation(f.clip_id, "non-finite feature");
  }
}

void ValidateDataset(const Dataset& dataset) {
  if (dataset.annotations.size() != dataset.features.size()) {
    throw DataError(DataError::Kind::kInvariant, "dataset",
                    "annotation count " +
                        std::to_string(dataset.annotations.size()) +
                        " != feature count " +
                        std::to_string(dataset.features.size()));
  }
  std::optional<bool> positives_have_class;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const ClipAnnotation& a = dataset.annotations[i];
    const FeatureSequence& f = dataset.features[i];
    ValidateAnnotation(a);
    ValidateFeatures(f);
    if (a.clip_id != f.clip_id) {
      Violation(a.clip_id, "features are stored for clip " + f.clip_id);
    }
    if (static_cast<std::size_t>(a.num_frames) != f.num_frames()) {
      Violation(a.clip_id, "annotation says " + std::to_string(a.num_frames) +
                               " frames, features have " +
                               std::to_string(f.num_frames()));
    }
    const FeatureSequence& first = dataset.features.front();
    if (f.global_dim() != first.global_dim() ||
        f.num_objects() != first.num_objects() ||
        f.local_dim() != first.local_dim()) {
      Violation(a.clip_id, "feature dimensions differ from clip " +
                               first.clip_id);
    }
    if (a.positive()) {
      const bool has = a.risk_class.has_value();
      if (positives_have_class && *positives_have_class != has) {
        Violation(a.clip_id,
                  "risk_class must be present on every positive or on none");
      }
      positives_have_class = has;
    }
  }
}

}  // namespace anticipate
