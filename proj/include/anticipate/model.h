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

// The anticipation network.
//
// For every frame t the object features are pooled by additive soft
// attention conditioned on the previous hidden state,
//
//   s_j = v . tanh(W_a l_j + W_h h_{t-1} + b),   w = masked_softmax(s),
//   context_t = sum_j w_j l_j,
//
// the pooled context is concatenated with the global frame feature, and the
// fused sequence runs through a single recurrent layer (QRNN with ifo-pooling
// or an LSTM baseline). A sigmoid head maps h_t to one risk rate per class.
//
// The attention is a single-layer stand-in for dynamic soft-attention; it is
// not a reproduction of any particular published attention network.

#ifndef ANTICIPATE_MODEL_H_
#define ANTICIPATE_MODEL_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "anticipate/dataset.h"
#include "anticipate/tape.h"
#include "anticipate/tensor.h"

namespace anticipate::model {

using diff::Tape;
using diff::Var;

enum class RecurrentKind { kQrnn, kLstm };

std::string_view RecurrentKindName(RecurrentKind kind);

struct ModelConfig {
  RecurrentKind recurrent_kind = RecurrentKind::kQrnn;
  int k = 2;               // QRNN kernel width
  int m = 16;              // hidden size
  int num_classes = 1;     // C; 1 = binary risk anticipation
  int D_g = 8;
  int D_l = 8;
  int K = 4;
  int attention_dim = 16;

  int input_dim() const { return D_g + D_l; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Throws ConfigError naming the first invalid field.
void ValidateModelConfig(const ModelConfig& config);

// QRNN gate order inside the fused kernels.
enum class QrnnGate { kZ = 0, kF = 1, kI = 2, kO = 3 };

// kernel[j] is the (n x 4m) weight applied at lag j; column blocks hold the
// z, f, i, o gates in that order. bias is 1 x 4m.
struct QrnnParams {
  std::vector<Tensor> kernel;
  Tensor bias;

  int k() const { return static_cast<int>(kernel.size()); }
  int m() const { return static_cast<int>(bias.cols() / 4); }
  // Writes the n x m block of one gate at one lag.
  void SetGateKernel(QrnnGate gate, int lag, const Tensor& w);
  void SetGateBias(QrnnGate gate, const Tensor& b);

  friend bool operator==(const QrnnParams&, const QrnnParams&) = default;
};

// Gate order i, f, o, g in the 4m column blocks.
struct LstmParams {
  Tensor w_x;  // n x 4m
  Tensor w_h;  // m x 4m
  Tensor bias; // 1 x 4m

  friend bool operator==(const LstmParams&, const LstmParams&) = default;
};

struct AttentionParams {
  Tensor w_a;   // D_l x a
  Tensor w_h;   // m x a
  Tensor bias;  // 1 x a
  Tensor v;     // a x 1

  friend bool operator==(const AttentionParams&, const AttentionParams&) = default;
};

struct HeadParams {
  Tensor w;     // m x C
  Tensor bias;  // 1 x C

  friend bool operator==(const HeadParams&, const HeadParams&) = default;
};

struct Model {
  ModelConfig config;
  AttentionParams attention;
  QrnnParams qrnn;  // empty unless recurrent_kind == kQrnn
  LstmParams lstm;  // empty unless recurrent_kind == kLstm
  HeadParams head;

  // Stable order shared by optimizers, gradients and checkpoints.
  std::vector<Tensor*> Parameters();
  std::vector<const Tensor*> Parameters() const;
  std::vector<std::string> ParameterNames() const;
  // Group each parameter belongs to: attention, recurrent or head.
  std::vector<std::string> ParameterGroups() const;

  friend bool operator==(const Model&, const Model&) = default;
};

// Deterministic given `seed`. Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
// biases zero except the forget gate bias, which starts at +1.
Model InitParams(const ModelConfig& config, std::uint64_t seed);

struct RiskTrajectory {
  std::string clip_id;
  Tensor rates;  // num_frames x C, entries in (0, 1)

  std::size_t num_frames() const { return rates.rows(); }
  std::size_t num_classes() const { return rates.cols(); }
  std::vector<double> Channel(std::size_t c) const;
};

// Full-sequence QRNN over X (T x n): Z = tanh(W_z * X), F, I, O = sigmoid(.),
// c_t = f_t c_{t-1} + i_t z_t, h_t = o_t c_t. Returns H (T x m).
Var QrnnForward(Var x, std::span<const Var> kernel, Var bias);

// Standard LSTM with c_0 = h_0 = 0. Returns H (T x m).
Var LstmForward(Var x, Var w_x, Var w_h, Var bias);

struct AttentionVars {
  Var w_a, w_h, bias, v;
};

// Convex combination of the present rows of `locals` (K x D_l); a frame with
// every object masked yields a zero context. Returns 1 x D_l.
Var AttendLocals(Var locals, const diff::Mask& mask, Var h_prev,
                 const AttentionVars& params);

// Parameters of `model` bound as leaves of one tape, in Parameters() order.
struct BoundModel {
  std::vector<Var> leaves;
};
BoundModel Bind(Tape& tape, const Model& model);

// Risk trajectory (num_frames x C) recorded on `tape`.
Var ModelForward(Tape& tape, const BoundModel& bound, const Model& model,
                 const FeatureSequence& features);

// Evaluation-only forward pass.
RiskTrajectory ModelForward(const Model& model,
                            const FeatureSequence& features,
                            bool checked = false);

}  // namespace anticipate::model

#endif  // ANTICIPATE_MODEL_H_
