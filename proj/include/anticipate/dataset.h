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

#ifndef ANTICIPATE_DATASET_H_
#define ANTICIPATE_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anticipate/tensor.h"

namespace anticipate {

enum class Label { kPositive, kNegative };

// Object class that causes the anticipated accident. The underlying value is
// the output channel used for risk-factor anticipation.
enum class RiskClass { kCyclist = 0, kPedestrian = 1, kVehicle = 2 };
inline constexpr int kNumRiskClasses = 3;

std::string_view LabelName(Label label);
std::optional<Label> ParseLabel(std::string_view name);
std::string_view RiskClassName(RiskClass cls);
std::optional<RiskClass> ParseRiskClass(std::string_view name);

struct ClipAnnotation {
  std::string clip_id;
  Label label = Label::kNegative;
  // First frame of the accident, 1-based. Present iff positive.
  std::optional<int> accident_start_T;
  int num_frames = 0;
  std::optional<RiskClass> risk_class;
  double frame_rate_F = 20.0;

  bool positive() const { return label == Label::kPositive; }

  friend bool operator==(const ClipAnnotation&,
                         const ClipAnnotation&) = default;
};

using ObjectMask = std::vector<std::uint8_t>;

struct FeatureSequence {
  std::string clip_id;
  Tensor global_feats;              // num_frames x D_g
  std::vector<Tensor> local_feats;  // per frame, K x D_l
  std::vector<ObjectMask> local_mask;  // per frame, K flags

  std::size_t num_frames() const { return global_feats.rows(); }
  std::size_t global_dim() const { return global_feats.cols(); }
  std::size_t num_objects() const {
    return local_feats.empty() ? 0 : local_feats.front().rows();
  }
  std::size_t local_dim() const {
    return local_feats.empty() ? 0 : local_feats.front().cols();
  }

  friend bool operator==(const FeatureSequence&,
                         const FeatureSequence&) = default;
};

// Clip annotations and features, aligned by index.
struct Dataset {
  std::vector<ClipAnnotation> annotations;
  std::vector<FeatureSequence> features;

  std::size_t size() const { return annotations.size(); }
  bool empty() const { return annotations.empty(); }
  std::size_t num_positives() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct DatasetMeta {
  std::string name;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
  std::size_t test_size = 0;
  double frame_rate_F = 20.0;
  int num_classes = 1;

  std::size_t total() const { return train_size + val_size + test_size; }
};

// Each throws DataError(kInvariant) naming the clip id.
void ValidateAnnotation(const ClipAnnotation& annotation);
void ValidateFeatures(const FeatureSequence& features);
// Per-clip checks plus alignment, shared dimensions, and risk-class
// consistency (either every positive carries a risk class or none does).
void ValidateDataset(const Dataset& dataset);

}  // namespace anticipate

#endif  // ANTICIPATE_DATASET_H_
