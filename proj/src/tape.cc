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

#include "anticipate/tape.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "anticipate/errors.h"

namespace anticipate::diff {
namespace {

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// out += a * b
void MatmulAccumulate(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double* out_row = out.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a(i, p);
      if (av == 0.0) continue;
      const double* b_row = b.row(p).data();
      for (std::size_t j = 0; j < m; ++j) out_row[j] += av * b_row[j];
    }
  }
}

// out += a * b^T
void MatmulTransposedBAccumulate(const Tensor& a, const Tensor& b,
                                 Tensor& out) {
  const std::size_t n = a.rows(), m = a.cols(), k = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* a_row = a.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double* b_row = b.row(p).data();
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += a_row[j] * b_row[j];
      out(i, p) += acc;
    }
  }
}

// out += a^T * b
void MatmulTransposedAAccumulate(const Tensor& a, const Tensor& b,
                                 Tensor& out) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* b_row = b.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a(i, p);
      if (av == 0.0) continue;
      double* out_row = out.row(p).data();
      for (std::size_t j = 0; j < m; ++j) out_row[j] += av * b_row[j];
    }
  }
}

std::string Shapes(const Tensor& a, const Tensor& b) {
  return a.ShapeString() + " and " + b.ShapeString();
}

bool IsVector(const Tensor& t) { return t.rows() == 1 || t.cols() == 1; }

}  // namespace

const Tensor& Var::value() const { return tape->Value(*this); }

Var Tape::Constant(Tensor value) {
  if (checked_ && !value.AllFinite()) {
    throw NumericError("non-finite value in constant " + value.ShapeString());
  }
  Var v = Record(Op::kLeaf, std::move(value), {});
  nodes_[v.id].requires_grad = false;
  return v;
}

Var Tape::Parameter(Tensor value) {
  if (checked_ && !value.AllFinite()) {
    throw NumericError("non-finite value in parameter " + value.ShapeString());
  }
  Var v = Record(Op::kLeaf, std::move(value), {});
  nodes_[v.id].requires_grad = true;
  return v;
}

const Tensor& Tape::Value(Var v) const { return node(v).value; }

Tensor Tape::Grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.empty()) return Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

const Tape::Node& Tape::node(Var v) const {
  if (v.tape != this || v.id < 0 ||
      static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw Error("variable is not recorded on this tape");
  }
  return nodes_[v.id];
}

void Tape::CheckSameTape(Var a, Var b, const char* op) const {
  if (a.tape != b.tape) {
    throw Error(std::string(op) + ": operands live on different tapes");
  }
}

Var Tape::Record(Op op, Tensor value, std::vector<int> inputs) {
  if (checked_ && op != Op::kLeaf && !value.AllFinite()) {
    throw NumericError("non-finite value produced by op " +
                       std::to_string(static_cast<int>(op)));
  }
  Node n;
  n.op = op;
  n.value = std::move(value);
  for (int id : inputs) n.requires_grad |= nodes_[id].requires_grad;
  n.inputs = std::move(inputs);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::GradBuffer(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::Backward(Var loss) {
  const Node& root = node(loss);
  if (root.value.rows() != 1 || root.value.cols() != 1) {
    throw ShapeError("backward requires a scalar loss, got " +
                     root.value.ShapeString());
  }
  for (Node& n : nodes_) n.grad = Tensor();
  GradBuffer(loss.id)(0, 0) = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    const Node& n = nodes_[id];
    if (n.grad.empty() || !n.requires_grad || n.op == Op::kLeaf) continue;
    BackwardNode(id);
  }
}

void Tape::BackwardNode(int id) {
  // Input gradients are written through GradBuffer(), which never touches
  // nodes_[id] itself, so `n` stays valid.
  const Node& n = nodes_[id];
  const Tensor& g = n.grad;
  auto wants = [&](int input) { return nodes_[input].requires_grad; };

  switch (n.op) {
    case Op::kLeaf:
      break;
    case Op::kAffine:
    case Op::kMatmul: {
      const int x = n.inputs[0], w = n.inputs[1];
      if (wants(x)) {
        MatmulTransposedBAccumulate(g, nodes_[w].value, GradBuffer(x));
      }
      if (wants(w)) {
        MatmulTransposedAAccumulate(nodes_[x].value, g, GradBuffer(w));
      }
      if (n.op == Op::kAffine && wants(n.inputs[2])) {
        Tensor& db = GradBuffer(n.inputs[2]);
        if (db.rows() == 1) {
          for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t c = 0; c < g.cols(); ++c) db(0, c) += g(r, c);
          }
        } else {
          for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i];
        }
      }
      break;
    }
    case Op::kConv: {
      const int x = n.inputs[0];
      const std::size_t k = n.inputs.size() - 2;
      const int b = n.inputs.back();
      const Tensor& xv = nodes_[x].value;
      const std::size_t steps = xv.rows(), in = xv.cols(), out = g.cols();
      for (std::size_t j = 0; j < k; ++j) {
        const int w = n.inputs[1 + j];
        const Tensor& wv = nodes_[w].value;
        const bool want_x = wants(x), want_w = wants(w);
        for (std::size_t t = j; t < steps; ++t) {
          const std::size_t src = t - j;
          if (want_x) {
            Tensor& dx = GradBuffer(x);
            for (std::size_t p = 0; p < in; ++p) {
              double acc = 0.0;
              for (std::size_t q = 0; q < out; ++q) acc += g(t, q) * wv(p, q);
              dx(src, p) += acc;
            }
          }
          if (want_w) {
            Tensor& dw = GradBuffer(w);
            for (std::size_t p = 0; p < in; ++p) {
              const double xp = xv(src, p);
              if (xp == 0.0) continue;
              for (std::size_t q = 0; q < out; ++q) dw(p, q) += xp * g(t, q);
            }
          }
        }
      }
      if (wants(b)) {
        Tensor& db = GradBuffer(b);
        for (std::size_t t = 0; t < steps; ++t) {
          for (std::size_t q = 0; q < out; ++q) db(0, q) += g(t, q);
        }
      }
      break;
    }
    case Op::kSigmoid: {
      Tensor& dx = GradBuffer(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = n.value[i];
        dx[i] += g[i] * y * (1.0 - y);
      }
      break;
    }
    case Op::kTanh: {
      Tensor& dx = GradBuffer(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = n.value[i];
        dx[i] += g[i] * (1.0 - y * y);
      }
      break;
    }
    case Op::kAdd: {
      for (int input : n.inputs) {
        if (!wants(input)) continue;
        Tensor& d = GradBuffer(input);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
      }
      break;
    }
    case Op::kMul: {
      const int a = n.inputs[0], b = n.inputs[1];
      const Tensor& av = nodes_[a].value;
      const Tensor& bv = nodes_[b].value;
      if (a == b) {
        Tensor& d = GradBuffer(a);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += 2.0 * g[i] * av[i];
        break;
      }
      if (wants(a)) {
        Tensor& d = GradBuffer(a);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * bv[i];
      }
      if (wants(b)) {
        Tensor& d = GradBuffer(b);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * av[i];
      }
      break;
    }
    case Op::kMaskedSoftmax: {
      const Tensor& y = n.value;
      double dot = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) dot += y[i] * g[i];
      Tensor& ds = GradBuffer(n.inputs[0]);
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (n.mask[i]) ds[i] += y[i] * (g[i] - dot);
      }
      break;
    }
    case Op::kSum: {
      Tensor& dx = GradBuffer(n.inputs[0]);
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g(0, 0);
      break;
    }
    case Op::kTranspose: {
      Tensor& dx = GradBuffer(n.inputs[0]);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) dx(c, r) += g(r, c);
      }
      break;
    }
    case Op::kConcatCols: {
      const int a = n.inputs[0], b = n.inputs[1];
      const std::size_t ac = nodes_[a].value.cols();
      if (wants(a)) {
        Tensor& da = GradBuffer(a);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t c = 0; c < ac; ++c) da(r, c) += g(r, c);
        }
      }
      if (wants(b)) {
        Tensor& db = GradBuffer(b);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t c = ac; c < g.cols(); ++c) db(r, c - ac) += g(r, c);
        }
      }
      break;
    }
    case Op::kSliceCols: {
      Tensor& dx = GradBuffer(n.inputs[0]);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) dx(r, c + n.arg) += g(r, c);
      }
      break;
    }
    case Op::kRow: {
      Tensor& dx = GradBuffer(n.inputs[0]);
      for (std::size_t c = 0; c < g.cols(); ++c) dx(n.arg, c) += g(0, c);
      break;
    }
    case Op::kStackRows: {
      for (std::size_t r = 0; r < n.inputs.size(); ++r) {
        if (!wants(n.inputs[r])) continue;
        Tensor& d = GradBuffer(n.inputs[r]);
        for (std::size_t c = 0; c < g.cols(); ++c) d(0, c) += g(r, c);
      }
      break;
    }
    case Op::kIfoPool: {
      const Tensor& zv = nodes_[n.inputs[0]].value;
      const Tensor& fv = nodes_[n.inputs[1]].value;
      const Tensor& iv = nodes_[n.inputs[2]].value;
      const Tensor& cv = n.value;
      const std::size_t steps = cv.rows(), m = cv.cols();
      Tensor dz(steps, m), df(steps, m), di(steps, m);
      std::vector<double> carry(m, 0.0);
      for (std::size_t t = steps; t-- > 0;) {
        for (std::size_t q = 0; q < m; ++q) {
          const double dc = g(t, q) + carry[q];
          dz(t, q) = dc * iv(t, q);
          di(t, q) = dc * zv(t, q);
          df(t, q) = t > 0 ? dc * cv(t - 1, q) : 0.0;
          carry[q] = dc * fv(t, q);
        }
      }
      const Tensor* parts[3] = {&dz, &df, &di};
      for (int p = 0; p < 3; ++p) {
        if (!wants(n.inputs[p])) continue;
        Tensor& d = GradBuffer(n.inputs[p]);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += (*parts[p])[i];
      }
      break;
    }
    case Op::kScalarFunction: {
      Tensor& dx = GradBuffer(n.inputs[0]);
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g(0, 0) * n.aux[i];
      break;
    }
  }
}

Var Affine(Var x, Var w, Var b) {
  Tape& tape = *x.tape;
  tape.CheckSameTape(x, w, "affine");
  tape.CheckSameTape(x, b, "affine");
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const Tensor& bv = b.value();
  if (xv.cols() != wv.rows()) {
    throw ShapeError("affine: inner dimensions differ: " + Shapes(xv, wv));
  }
  const bool broadcast = bv.rows() == 1 && bv.cols() == wv.cols();
  const bool full = bv.rows() == xv.rows() && bv.cols() == wv.cols();
  if (!broadcast && !full) {
    throw ShapeError("affine: bias " + bv.ShapeString() +
                     " not broadcastable to output (" +
                     std::to_string(xv.rows()) + " x " +
                     std::to_string(wv.cols()) + ")");
  }
  Tensor y(xv.rows(), wv.cols());
  for (std::size_t r = 0; r < y.rows(); ++r) {
    for (std::size_t c = 0; c < y.cols(); ++c) {
      y(r, c) = broadcast ? bv(0, c) : bv(r, c);
    }
  }
  MatmulAccumulate(xv, wv, y);
  return tape.Record(Tape::Op::kAffine, std::move(y), {x.id, w.id, b.id});
}

Var Matmul(Var a, Var b) {
  Tape& tape = *a.tape;
  tape.CheckSameTape(a, b, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: inner dimensions differ: " + Shapes(av, bv));
  }
  Tensor y(av.rows(), bv.cols());
  MatmulAccumulate(av, bv, y);
  return tape.Record(Tape::Op::kMatmul, std::move(y), {a.id, b.id});
}

Var CausalConv1d(Var x, std::span<const Var> kernel, Var bias) {
  Tape& tape = *x.tape;
  if (kernel.empty()) throw ShapeError("causal_conv1d: kernel width must be >= 1");
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  const std::size_t out = kernel[0].cols();
  std::vector<int> inputs = {x.id};
  for (const Var& w : kernel) {
    tape.CheckSameTape(x, w, "causal_conv1d");
    const Tensor& wv = w.value();
    if (wv.rows() != xv.cols() || wv.cols() != out) {
      throw ShapeError("causal_conv1d: kernel slice " + wv.ShapeString() +
                       " incompatible with input " + xv.ShapeString());
    }
    inputs.push_back(w.id);
  }
  tape.CheckSameTape(x, bias, "causal_conv1d");
  if (bv.rows() != 1 || bv.cols() != out) {
    throw ShapeError("causal_conv1d: bias " + bv.ShapeString() +
                     " must be (1 x " + std::to_string(out) + ")");
  }
  inputs.push_back(bias.id);

  const std::size_t steps = xv.rows(), in = xv.cols();
  Tensor y(steps, out);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t q = 0; q < out; ++q) y(t, q) = bv(0, q);
    for (std::size_t j = 0; j < kernel.size() && j <= t; ++j) {
      const Tensor& wv = kernel[j].value();
      for (std::size_t p = 0; p < in; ++p) {
        const double xp = xv(t - j, p);
        if (xp == 0.0) continue;
        for (std::size_t q = 0; q < out; ++q) y(t, q) += xp * wv(p, q);
      }
    }
  }
  return tape.Record(Tape::Op::kConv, std::move(y), std::move(inputs));
}

Var Activation(Var x, ActivationKind kind) {
  Tensor y = x.value();
  if (kind == ActivationKind::kSigmoid) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = Sigmoid(y[i]);
    return x.tape->Record(Tape::Op::kSigmoid, std::move(y), {x.id});
  }
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(y[i]);
  return x.tape->Record(Tape::Op::kTanh, std::move(y), {x.id});
}

Var Elementwise(Var a, Var b, ElementwiseKind kind) {
  Tape& tape = *a.tape;
  tape.CheckSameTape(a, b, "elementwise");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.SameShape(bv)) {
    throw ShapeError("elementwise: shape mismatch " + Shapes(av, bv));
  }
  Tensor y = av;
  if (kind == ElementwiseKind::kAdd) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
    return tape.Record(Tape::Op::kAdd, std::move(y), {a.id, b.id});
  }
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  return tape.Record(Tape::Op::kMul, std::move(y), {a.id, b.id});
}

Var MaskedSoftmax(Var scores, const Mask& mask) {
  const Tensor& s = scores.value();
  if (!IsVector(s) || mask.size() != s.size()) {
    throw ShapeError("masked_softmax: scores " + s.ShapeString() +
                     " with mask of length " + std::to_string(mask.size()));
  }
  Tensor y(s.rows(), s.cols());
  double max_score = -INFINITY;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (mask[i]) max_score = std::max(max_score, s[i]);
  }
  if (max_score != -INFINITY) {
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!mask[i]) continue;
      y[i] = std::exp(s[i] - max_score);
      total += y[i];
    }
    for (std::size_t i = 0; i < s.size(); ++i) y[i] /= total;
  }
  Var v = scores.tape->Record(Tape::Op::kMaskedSoftmax, std::move(y),
                              {scores.id});
  scores.tape->mutable_node(v.id).mask = mask;
  return v;
}

Var Sum(Var x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  return x.tape->Record(Tape::Op::kSum, Tensor::Scalar(total), {x.id});
}

Var Transpose(Var x) {
  const Tensor& xv = x.value();
  Tensor y(xv.cols(), xv.rows());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    for (std::size_t c = 0; c < xv.cols(); ++c) y(c, r) = xv(r, c);
  }
  return x.tape->Record(Tape::Op::kTranspose, std::move(y), {x.id});
}

Var ConcatCols(Var a, Var b) {
  Tape& tape = *a.tape;
  tape.CheckSameTape(a, b, "concat_cols");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rows() != bv.rows()) {
    throw ShapeError("concat_cols: row counts differ: " + Shapes(av, bv));
  }
  Tensor y(av.rows(), av.cols() + bv.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    std::copy(av.row(r).begin(), av.row(r).end(), y.row(r).begin());
    std::copy(bv.row(r).begin(), bv.row(r).end(),
              y.row(r).begin() + av.cols());
  }
  return tape.Record(Tape::Op::kConcatCols, std::move(y), {a.id, b.id});
}

Var SliceCols(Var x, std::size_t begin, std::size_t count) {
  const Tensor& xv = x.value();
  if (begin + count > xv.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " +
                     xv.ShapeString());
  }
  Tensor y(xv.rows(), count);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    for (std::size_t c = 0; c < count; ++c) y(r, c) = xv(r, begin + c);
  }
  Var v = x.tape->Record(Tape::Op::kSliceCols, std::move(y), {x.id});
  x.tape->mutable_node(v.id).arg = begin;
  return v;
}

Var Row(Var x, std::size_t r) {
  const Tensor& xv = x.value();
  if (r >= xv.rows()) {
    throw ShapeError("row: index " + std::to_string(r) + " out of range for " +
                     xv.ShapeString());
  }
  Tensor y(1, xv.cols());
  std::copy(xv.row(r).begin(), xv.row(r).end(), y.row(0).begin());
  Var v = x.tape->Record(Tape::Op::kRow, std::move(y), {x.id});
  x.tape->mutable_node(v.id).arg = r;
  return v;
}

Var StackRows(std::span<const Var> rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no rows");
  Tape& tape = *rows[0].tape;
  const std::size_t cols = rows[0].cols();
  Tensor y(rows.size(), cols);
  std::vector<int> inputs;
  inputs.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    tape.CheckSameTape(rows[0], rows[r], "stack_rows");
    const Tensor& rv = rows[r].value();
    if (rv.rows() != 1 || rv.cols() != cols) {
      throw ShapeError("stack_rows: row " + std::to_string(r) + " has shape " +
                       rv.ShapeString());
    }
    std::copy(rv.row(0).begin(), rv.row(0).end(), y.row(r).begin());
    inputs.push_back(rows[r].id);
  }
  return tape.Record(Tape::Op::kStackRows, std::move(y), std::move(inputs));
}

Var IfoPool(Var z, Var f, Var i) {
  Tape& tape = *z.tape;
  tape.CheckSameTape(z, f, "ifo_pool");
  tape.CheckSameTape(z, i, "ifo_pool");
  const Tensor& zv = z.value();
  const Tensor& fv = f.value();
  const Tensor& iv = i.value();
  if (!zv.SameShape(fv) || !zv.SameShape(iv)) {
    throw ShapeError("ifo_pool: gate shapes differ: " + Shapes(zv, fv) +
                     " and " + iv.ShapeString());
  }
  Tensor c(zv.rows(), zv.cols());
  for (std::size_t t = 0; t < zv.rows(); ++t) {
    for (std::size_t q = 0; q < zv.cols(); ++q) {
      const double prev = t > 0 ? c(t - 1, q) : 0.0;
      c(t, q) = fv(t, q) * prev + iv(t, q) * zv(t, q);
    }
  }
  return tape.Record(Tape::Op::kIfoPool, std::move(c), {z.id, f.id, i.id});
}

Var ScalarFunction(Var x, double value, Tensor dvalue_dx) {
  if (!x.value().SameShape(dvalue_dx)) {
    throw ShapeError("scalar_function: derivative " + dvalue_dx.ShapeString() +
                     " does not match input " + x.value().ShapeString());
  }
  Var v = x.tape->Record(Tape::Op::kScalarFunction, Tensor::Scalar(value),
                         {x.id});
  x.tape->mutable_node(v.id).aux = std::move(dvalue_dx);
  return v;
}

}  // namespace anticipate::diff
