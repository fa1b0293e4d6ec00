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

// Reverse-mode differentiation over dense matrices.
//
// A Tape records every primitive application in execution order. Node ids
// are assigned sequentially, so the recording order is already a
// topological order and Backward() simply walks the nodes in reverse.
//
//   Tape tape;
//   Var x = tape.Parameter(Tensor::FromRows({{3}}));
//   Var loss = Sum(Elementwise(x, x, ElementwiseKind::kMul));
//   tape.Backward(loss);
//   tape.Grad(x);  // [[6]]
//
// A tape is a single-threaded unit of work. Distinct tapes share nothing and
// may be used from distinct threads.

#ifndef ANTICIPATE_TAPE_H_
#define ANTICIPATE_TAPE_H_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "anticipate/tensor.h"

namespace anticipate::diff {

class Tape;

// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

enum class ActivationKind { kSigmoid, kTanh };
enum class ElementwiseKind { kAdd, kMul };

// Object presence flags; nonzero means present.
using Mask = std::vector<std::uint8_t>;

class Tape {
 public:
  // Checked mode validates every produced value for NaN/Inf.
  explicit Tape(bool checked = true) : checked_(checked) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that never receives a gradient.
  Var Constant(Tensor value);
  // Leaf whose gradient is accumulated by Backward().
  Var Parameter(Tensor value);

  const Tensor& Value(Var v) const;
  // Gradient of the last Backward() loss with respect to `v`; all zeros when
  // `v` did not contribute.
  Tensor Grad(Var v) const;

  // Throws ShapeError if `loss` is not 1x1 and Error if it is not on this
  // tape.
  void Backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  bool checked() const { return checked_; }

 private:
  enum class Op : std::uint8_t {
    kLeaf,
    kAffine,
    kMatmul,
    kConv,
    kSigmoid,
    kTanh,
    kAdd,
    kMul,
    kMaskedSoftmax,
    kSum,
    kTranspose,
    kConcatCols,
    kSliceCols,
    kRow,
    kStackRows,
    kIfoPool,
    kScalarFunction,
  };

  struct Node {
    Op op = Op::kLeaf;
    bool requires_grad = false;
    Tensor value;
    Tensor grad;  // lazily allocated during Backward()
    std::vector<int> inputs;
    std::size_t arg = 0;  // slice offset, row index
    Mask mask;
    Tensor aux;  // local derivative for kScalarFunction
  };

  Var Record(Op op, Tensor value, std::vector<int> inputs);
  const Node& node(Var v) const;
  Node& mutable_node(int id) { return nodes_[id]; }
  void CheckSameTape(Var a, Var b, const char* op) const;
  void BackwardNode(int id);
  Tensor& GradBuffer(int id);

  friend Var Affine(Var, Var, Var);
  friend Var Matmul(Var, Var);
  friend Var CausalConv1d(Var, std::span<const Var>, Var);
  friend Var Activation(Var, ActivationKind);
  friend Var Elementwise(Var, Var, ElementwiseKind);
  friend Var MaskedSoftmax(Var, const Mask&);
  friend Var Sum(Var);
  friend Var Transpose(Var);
  friend Var ConcatCols(Var, Var);
  friend Var SliceCols(Var, std::size_t, std::size_t);
  friend Var Row(Var, std::size_t);
  friend Var StackRows(std::span<const Var>);
  friend Var IfoPool(Var, Var, Var);
  friend Var ScalarFunction(Var, double, Tensor);

  bool checked_;
  // deque keeps references returned by Value() stable while recording.
  std::deque<Node> nodes_;
};

// y = x W + b. `b` is either 1 x cols (broadcast over rows) or full shape.
Var Affine(Var x, Var w, Var b);
Var Matmul(Var a, Var b);

// Y[t] = sum_{j=0}^{k-1} X[t-j] kernel[j] + b with X[t-j] = 0 before the
// first frame. kernel[j] is the n x m weight applied at lag j; bias is 1 x m.
Var CausalConv1d(Var x, std::span<const Var> kernel, Var bias);

Var Activation(Var x, ActivationKind kind);
Var Elementwise(Var a, Var b, ElementwiseKind kind);
inline Var Add(Var a, Var b) { return Elementwise(a, b, ElementwiseKind::kAdd); }
inline Var Mul(Var a, Var b) { return Elementwise(a, b, ElementwiseKind::kMul); }

// Softmax over a 1xK or Kx1 score vector restricted to entries with a
// nonzero mask. Masked entries get weight 0; an all-masked vector yields all
// zeros.
Var MaskedSoftmax(Var scores, const Mask& mask);

// 1x1 sum of all entries.
Var Sum(Var x);
Var Transpose(Var x);
Var ConcatCols(Var a, Var b);
Var SliceCols(Var x, std::size_t begin, std::size_t count);
Var Row(Var x, std::size_t r);
// Stacks 1xN rows into a TxN matrix.
Var StackRows(std::span<const Var> rows);

// Recurrent pooling over time: c_t = f_t * c_{t-1} + i_t * z_t, c_0 = 0.
// All inputs are T x m; returns C (T x m).
Var IfoPool(Var z, Var f, Var i);

// 1x1 node whose value and derivative with respect to `x` were computed
// outside the tape. Lets pure scalar code (losses) join the graph.
Var ScalarFunction(Var x, double value, Tensor dvalue_dx);

}  // namespace anticipate::diff

#endif  // ANTICIPATE_TAPE_H_
