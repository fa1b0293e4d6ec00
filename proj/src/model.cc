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

#include "anticipate/model.h"

#include <cmath>
#include <random>

#include "anticipate/errors.h"

namespace anticipate::model {
namespace {

using diff::ActivationKind;

Var Sigmoid(Var x) { return diff::Activation(x, ActivationKind::kSigmoid); }
Var Tanh(Var x) { return diff::Activation(x, ActivationKind::kTanh); }

void UniformInit(Tensor& t, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.data()) v = dist(rng);
}

void CheckColumns(Var x, int n, const char* what) {
  if (x.cols() != static_cast<std::size_t>(n)) {
    throw ShapeError(std::string(what) + ": input has " +
                     std::to_string(x.cols()) + " columns, expected " +
                     std::to_string(n));
  }
}

struct Gates {
  Var z, f, i, o;
};

Gates SplitQrnnGates(Var pre, std::size_t m) {
  return {Tanh(diff::SliceCols(pre, 0, m)),
          Sigmoid(diff::SliceCols(pre, m, m)),
          Sigmoid(diff::SliceCols(pre, 2 * m, m)),
          Sigmoid(diff::SliceCols(pre, 3 * m, m))};
}

struct CellState {
  Var h, c;
};

CellState LstmStep(Var x, CellState prev, Var w_x, Var w_h, Var bias,
                   std::size_t m) {
  Var pre = diff::Affine(x, w_x, diff::Affine(prev.h, w_h, bias));
  Var in = Sigmoid(diff::SliceCols(pre, 0, m));
  Var forget = Sigmoid(diff::SliceCols(pre, m, m));
  Var out = Sigmoid(diff::SliceCols(pre, 2 * m, m));
  Var cand = Tanh(diff::SliceCols(pre, 3 * m, m));
  Var c = diff::Add(diff::Mul(forget, prev.c), diff::Mul(in, cand));
  return {diff::Mul(out, Tanh(c)), c};
}

}  // namespace

std::string_view RecurrentKindName(RecurrentKind kind) {
  return kind == RecurrentKind::kQrnn ? "qrnn" : "lstm";
}

void ValidateModelConfig(const ModelConfig& c) {
  auto require = [](bool ok, const char* field, const char* what) {
    if (!ok) throw ConfigError(field, what);
  };
  require(c.k >= 1, "k", "must be >= 1");
  require(c.m >= 1, "m", "must be >= 1");
  require(c.num_classes >= 1 && c.num_classes <= kNumRiskClasses,
          "num_classes", "must lie in [1, 3]");
  require(c.D_g >= 0, "D_g", "must be >= 0");
  require(c.D_l >= 1, "D_l", "must be >= 1");
  require(c.K >= 1, "K", "must be >= 1");
  require(c.attention_dim >= 1, "attention_dim", "must be >= 1");
}

void QrnnParams::SetGateKernel(QrnnGate gate, int lag, const Tensor& w) {
  Tensor& dst = kernel.at(lag);
  const std::size_t hidden = bias.cols() / 4;
  if (w.rows() != dst.rows() || w.cols() != hidden) {
    throw ShapeError("gate kernel " + w.ShapeString() + " does not fit (" +
                     std::to_string(dst.rows()) + " x " +
                     std::to_string(hidden) + ")");
  }
  const std::size_t offset = static_cast<std::size_t>(gate) * hidden;
  for (std::size_t r = 0; r < w.rows(); ++r) {
    for (std::size_t c = 0; c < hidden; ++c) dst(r, offset + c) = w(r, c);
  }
}

void QrnnParams::SetGateBias(QrnnGate gate, const Tensor& b) {
  const std::size_t hidden = bias.cols() / 4;
  if (b.rows() != 1 || b.cols() != hidden) {
    throw ShapeError("gate bias " + b.ShapeString() + " does not fit (1 x " +
                     std::to_string(hidden) + ")");
  }
  const std::size_t offset = static_cast<std::size_t>(gate) * hidden;
  for (std::size_t c = 0; c < hidden; ++c) bias(0, offset + c) = b(0, c);
}

std::vector<Tensor*> Model::Parameters() {
  std::vector<Tensor*> out = {&attention.w_a, &attention.w_h, &attention.bias,
                              &attention.v};
  if (config.recurrent_kind == RecurrentKind::kQrnn) {
    for (Tensor& w : qrnn.kernel) out.push_back(&w);
    out.push_back(&qrnn.bias);
  } else {
    out.insert(out.end(), {&lstm.w_x, &lstm.w_h, &lstm.bias});
  }
  out.insert(out.end(), {&head.w, &head.bias});
  return out;
}

std::vector<const Tensor*> Model::Parameters() const {
  auto mutable_params = const_cast<Model*>(this)->Parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

std::vector<std::string> Model::ParameterNames() const {
  std::vector<std::string> out = {"attention.w_a", "attention.w_h",
                                  "attention.bias", "attention.v"};
  if (config.recurrent_kind == RecurrentKind::kQrnn) {
    for (std::size_t j = 0; j < qrnn.kernel.size(); ++j) {
      out.push_back("qrnn.kernel." + std::to_string(j));
    }
    out.push_back("qrnn.bias");
  } else {
    out.insert(out.end(), {"lstm.w_x", "lstm.w_h", "lstm.bias"});
  }
  out.insert(out.end(), {"head.w", "head.bias"});
  return out;
}

std::vector<std::string> Model::ParameterGroups() const {
  std::vector<std::string> out;
  for (const std::string& name : ParameterNames()) {
    out.push_back(name.substr(0, name.find('.')));
  }
  return out;
}

Model InitParams(const ModelConfig& config, std::uint64_t seed) {
  ValidateModelConfig(config);
  std::mt19937_64 rng(seed);
  const std::size_t n = config.input_dim(), m = config.m;
  const std::size_t a = config.attention_dim, dl = config.D_l;

  Model model;
  model.config = config;
  model.attention.w_a = Tensor(dl, a);
  model.attention.w_h = Tensor(m, a);
  model.attention.bias = Tensor(1, a);
  model.attention.v = Tensor(a, 1);
  UniformInit(model.attention.w_a, dl, rng);
  UniformInit(model.attention.w_h, m, rng);
  UniformInit(model.attention.v, a, rng);

  if (config.recurrent_kind == RecurrentKind::kQrnn) {
    model.qrnn.kernel.assign(config.k, Tensor(n, 4 * m));
    for (Tensor& w : model.qrnn.kernel) UniformInit(w, config.k * n, rng);
    model.qrnn.bias = Tensor(1, 4 * m);
    model.qrnn.SetGateBias(QrnnGate::kF, Tensor(1, m, 1.0));
  } else {
    model.lstm.w_x = Tensor(n, 4 * m);
    model.lstm.w_h = Tensor(m, 4 * m);
    model.lstm.bias = Tensor(1, 4 * m);
    UniformInit(model.lstm.w_x, n, rng);
    UniformInit(model.lstm.w_h, m, rng);
    for (std::size_t c = m; c < 2 * m; ++c) model.lstm.bias(0, c) = 1.0;
  }

  model.head.w = Tensor(m, config.num_classes);
  model.head.bias = Tensor(1, config.num_classes);
  UniformInit(model.head.w, m, rng);
  return model;
}

std::vector<double> RiskTrajectory::Channel(std::size_t c) const {
  std::vector<double> out(rates.rows());
  for (std::size_t t = 0; t < rates.rows(); ++t) out[t] = rates(t, c);
  return out;
}

Var QrnnForward(Var x, std::span<const Var> kernel, Var bias) {
  if (kernel.empty()) throw ShapeError("qrnn: kernel width must be >= 1");
  CheckColumns(x, static_cast<int>(kernel[0].rows()), "qrnn");
  const std::size_t m = bias.cols() / 4;
  Var pre = diff::CausalConv1d(x, kernel, bias);
  const Gates g = SplitQrnnGates(pre, m);
  Var c = diff::IfoPool(g.z, g.f, g.i);
  return diff::Mul(g.o, c);
}

Var LstmForward(Var x, Var w_x, Var w_h, Var bias) {
  CheckColumns(x, static_cast<int>(w_x.rows()), "lstm");
  Tape& tape = *x.tape;
  const std::size_t m = w_h.rows();
  CellState state{tape.Constant(Tensor(1, m)), tape.Constant(Tensor(1, m))};
  std::vector<Var> hs;
  hs.reserve(x.rows());
  for (std::size_t t = 0; t < x.rows(); ++t) {
    state = LstmStep(diff::Row(x, t), state, w_x, w_h, bias, m);
    hs.push_back(state.h);
  }
  return diff::StackRows(hs);
}

Var AttendLocals(Var locals, const diff::Mask& mask, Var h_prev,
                 const AttentionVars& p) {
  if (locals.cols() != p.w_a.rows() || mask.size() != locals.rows() ||
      h_prev.cols() != p.w_h.rows()) {
    throw ShapeError("attend_locals: locals " + locals.value().ShapeString() +
                     ", mask of " + std::to_string(mask.size()) +
                     ", h_prev " + h_prev.value().ShapeString() +
                     " do not match the attention parameters");
  }
  Var hidden = Tanh(
      diff::Affine(locals, p.w_a, diff::Affine(h_prev, p.w_h, p.bias)));
  Var weights = diff::MaskedSoftmax(diff::Matmul(hidden, p.v), mask);
  return diff::Matmul(diff::Transpose(weights), locals);
}

BoundModel Bind(Tape& tape, const Model& model) {
  BoundModel bound;
  for (const Tensor* p : model.Parameters()) {
    bound.leaves.push_back(tape.Parameter(*p));
  }
  return bound;
}

Var ModelForward(Tape& tape, const BoundModel& bound, const Model& model,
                 const FeatureSequence& features) {
  const ModelConfig& cfg = model.config;
  if (features.global_dim() != static_cast<std::size_t>(cfg.D_g) ||
      features.local_dim() != static_cast<std::size_t>(cfg.D_l) ||
      features.num_objects() != static_cast<std::size_t>(cfg.K)) {
    throw ShapeError("model_forward: clip " + features.clip_id +
                     " has D_g=" + std::to_string(features.global_dim()) +
                     " D_l=" + std::to_string(features.local_dim()) +
                     " K=" + std::to_string(features.num_objects()) +
                     ", model expects D_g=" + std::to_string(cfg.D_g) +
                     " D_l=" + std::to_string(cfg.D_l) +
                     " K=" + std::to_string(cfg.K));
  }
  const std::vector<Var>& leaves = bound.leaves;
  const AttentionVars att{leaves[0], leaves[1], leaves[2], leaves[3]};
  std::size_t next = 4;
  std::vector<Var> kernel;
  Var rec_bias, lstm_wx, lstm_wh;
  if (cfg.recurrent_kind == RecurrentKind::kQrnn) {
    kernel.assign(leaves.begin() + next, leaves.begin() + next + cfg.k);
    next += cfg.k;
    rec_bias = leaves[next++];
  } else {
    lstm_wx = leaves[next++];
    lstm_wh = leaves[next++];
    rec_bias = leaves[next++];
  }
  const Var head_w = leaves[next++];
  const Var head_b = leaves[next++];

  const std::size_t m = cfg.m;
  const std::size_t frames = features.num_frames();
  Var global = tape.Constant(features.global_feats);
  Var zero = tape.Constant(Tensor(1, m));
  CellState state{zero, zero};
  std::vector<Var> inputs;  // fused x_t, kept for the causal kernel window
  std::vector<Var> hs;
  inputs.reserve(frames);
  hs.reserve(frames);

  for (std::size_t t = 0; t < frames; ++t) {
    Var locals = tape.Constant(features.local_feats[t]);
    Var context = AttendLocals(locals, features.local_mask[t], state.h, att);
    Var x = cfg.D_g > 0 ? diff::ConcatCols(diff::Row(global, t), context)
                        : context;
    inputs.push_back(x);
    if (cfg.recurrent_kind == RecurrentKind::kQrnn) {
      Var pre = diff::Affine(x, kernel[0], rec_bias);
      for (std::size_t j = 1; j < kernel.size() && j <= t; ++j) {
        pre = diff::Add(pre, diff::Matmul(inputs[t - j], kernel[j]));
      }
      const Gates g = SplitQrnnGates(pre, m);
      Var c = diff::Add(diff::Mul(g.f, state.c), diff::Mul(g.i, g.z));
      state = {diff::Mul(g.o, c), c};
    } else {
      state = LstmStep(x, state, lstm_wx, lstm_wh, rec_bias, m);
    }
    hs.push_back(state.h);
  }
  Var h = diff::StackRows(hs);
  return diff::Activation(diff::Affine(h, head_w, head_b),
                          ActivationKind::kSigmoid);
}

RiskTrajectory ModelForward(const Model& model,
                            const FeatureSequence& features, bool checked) {
  Tape tape(checked);
  const BoundModel bound = Bind(tape, model);
  Var r = ModelForward(tape, bound, model, features);
  return {features.clip_id, tape.Value(r)};
}

}  // namespace anticipate::model
