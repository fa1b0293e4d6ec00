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

#include "anticipate/train.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "anticipate/config.h"
#include "anticipate/dataset_io.h"
#include "anticipate/errors.h"
#include "anticipate/format.h"
#include "binary_io.h"

namespace anticipate::train {
namespace {

using internal::PutF64;
using internal::PutU32;
using internal::PutU64;

constexpr char kCheckpointMagic[4] = {'E', 'A', 'C', 'K'};

void PutTensor(std::ostream& out, const Tensor& t) {
  PutU32(out, static_cast<std::uint32_t>(t.rows()));
  PutU32(out, static_cast<std::uint32_t>(t.cols()));
  for (double v : t.data()) PutF64(out, v);
}

Tensor GetTensor(internal::Reader& r) {
  const std::uint32_t rows = r.U32(), cols = r.U32();
  if (static_cast<std::uint64_t>(rows) * cols > (1u << 26)) {
    r.Fail("implausible tensor shape");
  }
  Tensor t(rows, cols);
  for (double& v : t.data()) v = r.F64();
  return t;
}

void PutTensors(std::ostream& out, const std::vector<Tensor>& ts) {
  PutU32(out, static_cast<std::uint32_t>(ts.size()));
  for (const Tensor& t : ts) PutTensor(out, t);
}

std::vector<Tensor> GetTensors(internal::Reader& r) {
  const std::uint32_t n = r.U32();
  if (n > 4096) r.Fail("implausible tensor count");
  std::vector<Tensor> ts;
  ts.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) ts.push_back(GetTensor(r));
  return ts;
}

std::string CheckpointBytes(const Checkpoint& ckpt) {
  std::ostringstream out(std::ios::binary);
  out.write(kCheckpointMagic, 4);
  PutU32(out, kCheckpointVersion);
  const std::string config = TrainConfigToJson(ckpt.config);
  PutU32(out, static_cast<std::uint32_t>(config.size()));
  out.write(config.data(), static_cast<std::streamsize>(config.size()));
  PutU64(out, ckpt.fingerprint);

  const TrainState& s = ckpt.state;
  PutU32(out, static_cast<std::uint32_t>(s.epoch));
  std::vector<Tensor> params;
  for (const Tensor* p : s.model.Parameters()) params.push_back(*p);
  PutTensors(out, params);
  PutU64(out, static_cast<std::uint64_t>(s.optimizer.step));
  PutTensors(out, s.optimizer.first);
  PutTensors(out, s.optimizer.second);
  PutU32(out, static_cast<std::uint32_t>(s.phi_history.size()));
  for (double phi : s.phi_history) PutF64(out, phi);
  PutU32(out, static_cast<std::uint32_t>(s.history.size()));
  for (const EpochRecord& rec : s.history) {
    PutU32(out, static_cast<std::uint32_t>(rec.epoch));
    PutF64(out, rec.train_loss);
    PutF64(out, rec.val_ap);
    out.put(rec.val_attc ? 1 : 0);
    PutF64(out, rec.val_attc.value_or(0.0));
    PutF64(out, rec.phi_used);
  }
  return out.str();
}

bool IsPositive(const ClipAnnotation& a) { return a.positive(); }

}  // namespace

void ValidateTrainConfig(const TrainConfig& c) {
  loss::ValidateLossConfig(c.loss);
  model::ValidateModelConfig(c.model);
  if (c.epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (c.batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) {
    throw ConfigError("learning_rate", "must be > 0");
  }
  const OptimizerConfig& o = c.optimizer;
  if (!(o.beta1 >= 0.0 && o.beta1 < 1.0)) {
    throw ConfigError("optimizer.beta1", "must be in [0, 1)");
  }
  if (!(o.beta2 >= 0.0 && o.beta2 < 1.0)) {
    throw ConfigError("optimizer.beta2", "must be in [0, 1)");
  }
  if (!(o.epsilon > 0.0)) throw ConfigError("optimizer.epsilon", "must be > 0");
  if (!(o.momentum >= 0.0 && o.momentum < 1.0)) {
    throw ConfigError("optimizer.momentum", "must be in [0, 1)");
  }
  if (c.phi_gate && !(*c.phi_gate >= 0.0 && *c.phi_gate <= 1.0)) {
    throw ConfigError("phi_gate", "must be in [0, 1]");
  }
}

void OptimizerStep(std::span<Tensor* const> params,
                   std::span<const Tensor> grads, OptimizerState& state,
                   const OptimizerConfig& config, double learning_rate) {
  if (params.size() != grads.size()) {
    throw ShapeError("optimizer: " + std::to_string(params.size()) +
                     " parameters but " + std::to_string(grads.size()) +
                     " gradients");
  }
  const bool adam = config.kind == OptimizerKind::kAdam;
  if (state.first.empty()) {
    for (const Tensor* p : params) {
      state.first.emplace_back(p->rows(), p->cols());
      if (adam) state.second.emplace_back(p->rows(), p->cols());
    }
  }
  ++state.step;
  const double bias1 = 1.0 - std::pow(config.beta1, state.step);
  const double bias2 = 1.0 - std::pow(config.beta2, state.step);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    if (!p.SameShape(g)) {
      throw ShapeError("optimizer: gradient " + g.ShapeString() +
                       " for parameter " + p.ShapeString());
    }
    std::span<double> pv = p.data(), m = state.first[i].data();
    std::span<const double> gv = g.data();
    if (adam) {
      std::span<double> v = state.second[i].data();
      for (std::size_t j = 0; j < pv.size(); ++j) {
        m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * gv[j];
        v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * gv[j] * gv[j];
        const double m_hat = m[j] / bias1, v_hat = v[j] / bias2;
        pv[j] -= learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
      }
    } else {
      for (std::size_t j = 0; j < pv.size(); ++j) {
        m[j] = config.momentum * m[j] + gv[j];
        pv[j] -= learning_rate * m[j];
      }
    }
  }
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = CheckpointBytes(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError(DataError::Kind::kMissingFile, path.string(), "cannot open");
  }
  const std::string where = path.string();
  internal::Reader r(in, [&](const std::string& what) {
    throw FormatError(where + ": " + what);
  });
  char magic[4];
  r.Bytes(magic, 4);
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    r.Fail("not a checkpoint (bad magic)");
  }
  const std::uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    r.Fail("unsupported checkpoint version " + std::to_string(version) +
           " (this build reads version " + std::to_string(kCheckpointVersion) +
           ")");
  }
  const std::uint32_t config_len = r.U32();
  if (config_len > (1u << 20)) r.Fail("implausible config length");
  std::string config(config_len, '\0');
  r.Bytes(config.data(), config_len);

  Checkpoint ckpt;
  try {
    ckpt.config = ParseTrainConfig(config);
  } catch (const ConfigError& e) {
    r.Fail(std::string("embedded config: ") + e.what());
  }
  ckpt.fingerprint = r.U64();

  TrainState& s = ckpt.state;
  s.epoch = static_cast<int>(r.U32());
  s.model = model::InitParams(ckpt.config.model, 0);
  std::vector<Tensor> params = GetTensors(r);
  std::vector<Tensor*> slots = s.model.Parameters();
  if (params.size() != slots.size()) r.Fail("parameter count mismatch");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i]->SameShape(params[i])) {
      r.Fail("parameter " + std::to_string(i) + " has shape " +
             params[i].ShapeString() + ", expected " +
             slots[i]->ShapeString());
    }
    *slots[i] = std::move(params[i]);
  }
  s.optimizer.step = static_cast<std::int64_t>(r.U64());
  s.optimizer.first = GetTensors(r);
  s.optimizer.second = GetTensors(r);
  const std::uint32_t phis = r.U32();
  if (phis > (1u << 20)) r.Fail("implausible phi history");
  for (std::uint32_t i = 0; i < phis; ++i) s.phi_history.push_back(r.F64());
  const std::uint32_t records = r.U32();
  if (records > (1u << 20)) r.Fail("implausible epoch history");
  for (std::uint32_t i = 0; i < records; ++i) {
    EpochRecord rec;
    rec.epoch = static_cast<int>(r.U32());
    rec.train_loss = r.F64();
    rec.val_ap = r.F64();
    char has_attc = 0;
    r.Bytes(&has_attc, 1);
    const double attc = r.F64();
    if (has_attc) rec.val_attc = attc;
    rec.phi_used = r.F64();
    s.history.push_back(rec);
  }
  if (!r.AtEnd()) r.Fail("trailing bytes");
  if (s.phi_history.size() != static_cast<std::size_t>(s.epoch) ||
      s.history.size() != static_cast<std::size_t>(s.epoch)) {
    r.Fail("history length does not match the completed epochs");
  }
  return ckpt;
}

std::uint64_t SplitFingerprint(const Dataset& train_set,
                               const Dataset& val_set) {
  const std::uint64_t a = Fingerprint(train_set), b = Fingerprint(val_set);
  return a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
}

std::vector<model::RiskTrajectory> Predict(const model::Model& model,
                                           const Dataset& dataset) {
  std::vector<model::RiskTrajectory> out;
  out.reserve(dataset.size());
  for (const FeatureSequence& f : dataset.features) {
    out.push_back(model::ModelForward(model, f));
  }
  return out;
}

Validation ValidateEpoch(const model::Model& model, const Dataset& val_set) {
  const std::vector<model::RiskTrajectory> trajectories = Predict(model, val_set);
  const eval::EvalReport report =
      eval::PerClassReport(trajectories, val_set.annotations);
  return {report.macro_ap, report.macro_attc};
}

std::vector<std::size_t> EpochOrder(std::size_t size, std::uint64_t seed,
                                    int epoch) {
  std::vector<std::size_t> order(size);
  std::iota(order.begin(), order.end(), 0);
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  std::mt19937_64 rng(seq);
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle.
  for (std::size_t i = size; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

Trainer::Trainer(const TrainConfig& config, const Dataset& train_set,
                 const Dataset& val_set)
    : config_(config),
      train_(train_set),
      val_(val_set),
      fingerprint_(0) {
  ValidateTrainConfig(config_);
  CheckSplits();
  fingerprint_ = SplitFingerprint(train_, val_);
  state_.model = model::InitParams(config_.model, config_.seed);
}

Trainer::Trainer(const Checkpoint& checkpoint, const Dataset& train_set,
                 const Dataset& val_set)
    : config_(checkpoint.config),
      train_(train_set),
      val_(val_set),
      fingerprint_(0),
      state_(checkpoint.state) {
  ValidateTrainConfig(config_);
  CheckSplits();
  fingerprint_ = SplitFingerprint(train_, val_);
  if (fingerprint_ != checkpoint.fingerprint) {
    throw DataError(DataError::Kind::kInvariant, "checkpoint",
                    "checkpoint was made on different data splits");
  }
}

void Trainer::CheckSplits() const {
  if (train_.empty()) {
    throw DataError(DataError::Kind::kInvariant, "train", "split is empty");
  }
  if (val_.empty() || std::none_of(val_.annotations.begin(),
                                   val_.annotations.end(), IsPositive)) {
    throw DataError(DataError::Kind::kInvariant, "val",
                    "validation split needs at least one positive clip");
  }
  if (config_.model.num_classes > 1) {
    for (const Dataset* d : {&train_, &val_}) {
      for (const ClipAnnotation& a : d->annotations) {
        if (a.positive() && !a.risk_class) {
          throw DataError(DataError::Kind::kInvariant, a.clip_id,
                          "per-class training needs risk_class on positives");
        }
      }
    }
  }
}

void Trainer::Log(const std::string& message) const {
  if (logger_) logger_(message);
}

const EpochRecord& Trainer::RunEpoch() {
  if (done()) throw Error("training already finished");
  const int epoch = state_.epoch + 1;
  const loss::EpochContext ctx{epoch, state_.phi()};
  const std::vector<std::size_t> order =
      EpochOrder(train_.size(), config_.seed, epoch);
  const std::size_t batch = static_cast<std::size_t>(config_.batch_size);

  last_batch_losses_.clear();
  std::vector<Tensor*> params = state_.model.Parameters();
  std::vector<ClipAnnotation> annotations;
  std::vector<model::Var> outputs;
  std::vector<Tensor> grads;
  for (std::size_t start = 0; start < order.size(); start += batch) {
    const std::size_t end = std::min(order.size(), start + batch);
    const int batch_index = static_cast<int>(start / batch) + 1;
    diff::Tape tape(/*checked=*/false);
    const model::BoundModel bound = model::Bind(tape, state_.model);
    annotations.clear();
    outputs.clear();
    for (std::size_t i = start; i < end; ++i) {
      const std::size_t clip = order[i];
      outputs.push_back(model::ModelForward(tape, bound, state_.model,
                                            train_.features[clip]));
      annotations.push_back(train_.annotations[clip]);
    }
    const model::Var total =
        loss::BatchLoss(outputs, annotations, config_.loss, ctx);
    const double value = total.value()(0, 0);
    if (!std::isfinite(value)) {
      throw DivergenceError(epoch, batch_index, "non-finite loss");
    }
    tape.Backward(total);
    grads.clear();
    for (const model::Var& leaf : bound.leaves) {
      grads.push_back(tape.Grad(leaf));
      if (!grads.back().AllFinite()) {
        throw DivergenceError(epoch, batch_index, "non-finite gradient");
      }
    }
    OptimizerStep(params, grads, state_.optimizer, config_.optimizer,
                  config_.learning_rate);
    last_batch_losses_.push_back(value);
  }

  EpochRecord rec;
  rec.epoch = epoch;
  rec.train_loss =
      std::accumulate(last_batch_losses_.begin(), last_batch_losses_.end(),
                      0.0) /
      static_cast<double>(last_batch_losses_.size());
  rec.phi_used = ctx.phi_prev;

  double phi = state_.phi();
  try {
    const Validation v = ValidateEpoch(state_.model, val_);
    rec.val_ap = v.ap;
    rec.val_attc = v.attc;
  } catch (const UndefinedMetricError& e) {
    Log("epoch " + std::to_string(epoch) + ": " + e.what());
  }
  if (!rec.val_attc) {
    Log("epoch " + std::to_string(epoch) +
        ": validation ATTC undefined, phi held at " + FormatDouble(phi));
  } else if (config_.phi_gate && rec.val_ap < *config_.phi_gate) {
    Log("epoch " + std::to_string(epoch) + ": validation AP " +
        FormatDouble(rec.val_ap) + " below phi_gate, phi held at " +
        FormatDouble(phi));
  } else {
    if (*rec.val_attc < phi) {
      Log("epoch " + std::to_string(epoch) + ": phi decreased from " +
          FormatDouble(phi) + " to " + FormatDouble(*rec.val_attc));
    }
    phi = *rec.val_attc;
  }
  state_.phi_history.push_back(phi);
  state_.history.push_back(rec);
  state_.epoch = epoch;
  return state_.history.back();
}

void Trainer::Run() {
  while (!done()) RunEpoch();
}

Checkpoint Trainer::MakeCheckpoint() const {
  return {config_, state_, fingerprint_};
}

}  // namespace anticipate::train
