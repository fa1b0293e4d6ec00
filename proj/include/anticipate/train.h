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

// Training loop.
//
// Epoch e runs minibatch updates with the weight schedule of epoch e, then
// scores the validation split. For AdaLEA the validation ATTC becomes
// phi(e), which drives the schedule of epoch e + 1.

#ifndef ANTICIPATE_TRAIN_H_
#define ANTICIPATE_TRAIN_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anticipate/dataset.h"
#include "anticipate/eval.h"
#include "anticipate/loss.h"
#include "anticipate/model.h"

namespace anticipate::train {

enum class OptimizerKind { kAdam, kSgdMomentum };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double momentum = 0.9;  // sgd_momentum only
};

struct TrainConfig {
  loss::LossConfig loss;
  model::ModelConfig model;
  int epochs = 10;
  int batch_size = 16;
  double learning_rate = 1e-3;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  // Phi is held at its previous value while validation AP is below the gate.
  std::optional<double> phi_gate;
};

// Throws ConfigError naming the first invalid field.
void ValidateTrainConfig(const TrainConfig& config);

struct OptimizerState {
  std::int64_t step = 0;
  std::vector<Tensor> first;   // momentum / first moment, one per parameter
  std::vector<Tensor> second;  // second moment (Adam only)

  friend bool operator==(const OptimizerState&,
                         const OptimizerState&) = default;
};

// One update of `params` in place. State tensors are created on first use.
void OptimizerStep(std::span<Tensor* const> params,
                   std::span<const Tensor> grads, OptimizerState& state,
                   const OptimizerConfig& config, double learning_rate);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean of the epoch's batch losses
  double val_ap = 0.0;
  std::optional<double> val_attc;
  double phi_used = 0.0;  // phi(e - 1), the value the schedule read

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainState {
  int epoch = 0;  // completed epochs
  model::Model model;
  OptimizerState optimizer;
  std::vector<double> phi_history;  // phi(1) .. phi(epoch)
  std::vector<EpochRecord> history;

  double phi() const { return phi_history.empty() ? 0.0 : phi_history.back(); }

  friend bool operator==(const TrainState&, const TrainState&) = default;
};

struct Checkpoint {
  TrainConfig config;
  TrainState state;
  std::uint64_t fingerprint = 0;  // of the training and validation splits
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws FormatError on a bad magic, an unsupported version or corruption.
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

std::uint64_t SplitFingerprint(const Dataset& train_set, const Dataset& val_set);

// Binary tasks use C = 1; per-class tasks C = number of risk classes.
struct Validation {
  double ap = 0.0;
  std::optional<double> attc;
};
Validation ValidateEpoch(const model::Model& model, const Dataset& val_set);

// Forward pass over a whole split.
std::vector<model::RiskTrajectory> Predict(const model::Model& model,
                                           const Dataset& dataset);

class Trainer {
 public:
  using Logger = std::function<void(const std::string&)>;

  // Throws DataError when a split is empty or val has no positive.
  Trainer(const TrainConfig& config, const Dataset& train_set,
          const Dataset& val_set);
  // Resumes from a checkpoint made on the same splits.
  Trainer(const Checkpoint& checkpoint, const Dataset& train_set,
          const Dataset& val_set);

  void set_logger(Logger logger) { logger_ = std::move(logger); }

  bool done() const { return state_.epoch >= config_.epochs; }
  // Trains one epoch and validates. Throws DivergenceError.
  const EpochRecord& RunEpoch();
  // Runs the remaining epochs.
  void Run();

  const TrainConfig& config() const { return config_; }
  const TrainState& state() const { return state_; }
  Checkpoint MakeCheckpoint() const;
  // Batch losses of the most recent epoch, in order.
  const std::vector<double>& last_batch_losses() const {
    return last_batch_losses_;
  }

 private:
  void CheckSplits() const;
  void Log(const std::string& message) const;

  TrainConfig config_;
  const Dataset& train_;
  const Dataset& val_;
  std::uint64_t fingerprint_;
  TrainState state_;
  std::vector<double> last_batch_losses_;
  Logger logger_;
};

// Order in which epoch `epoch` visits the training clips.
std::vector<std::size_t> EpochOrder(std::size_t size, std::uint64_t seed,
                                    int epoch);

}  // namespace anticipate::train

#endif  // ANTICIPATE_TRAIN_H_
