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

#include "anticipate/grad_check.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "anticipate/errors.h"

namespace anticipate::diff {
namespace {

double Evaluate(const TapeFunction& function, std::span<const Tensor> inputs) {
  Tape tape(/*checked=*/false);
  std::vector<Var> leaves;
  leaves.reserve(inputs.size());
  for (const Tensor& t : inputs) leaves.push_back(tape.Parameter(t));
  const Var out = function(tape, leaves);
  const Tensor& v = tape.Value(out);
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("grad_check: function output " + v.ShapeString() +
                     " is not scalar");
  }
  return v(0, 0);
}

}  // namespace

GradCheckResult GradCheck(const TapeFunction& function,
                          std::span<const Tensor> inputs, double h) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> leaves;
    for (const Tensor& t : inputs) leaves.push_back(tape.Parameter(t));
    const Var out = function(tape, leaves);
    const Tensor& v = tape.Value(out);
    if (v.rows() != 1 || v.cols() != 1) {
      throw ShapeError("grad_check: function output " + v.ShapeString() +
                       " is not scalar");
    }
    tape.Backward(out);
    for (const Var& leaf : leaves) analytic.push_back(tape.Grad(leaf));
  }

  GradCheckResult result;
  std::vector<Tensor> probe(inputs.begin(), inputs.end());
  double tensor_error = 0.0;
  for (std::size_t in = 0; in < probe.size(); ++in) {
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t i = 0; i < probe[in].size(); ++i) {
      const double saved = probe[in][i];
      probe[in][i] = saved + h;
      const double plus = Evaluate(function, probe);
      probe[in][i] = saved - h;
      const double minus = Evaluate(function, probe);
      probe[in][i] = saved;

      const double numeric = (plus - minus) / (2.0 * h);
      const double a = analytic[in][i];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
      const double err = std::abs(a - numeric) /
                         std::max(1e-8, std::abs(a) + std::abs(numeric));
      if (err > result.max_relative_error) {
        result = {err, in, i, a, numeric};
      }
    }
    tensor_error =
        std::max(tensor_error, std::sqrt(diff2) /
                                   std::max(1e-8, std::sqrt(a2) + std::sqrt(n2)));
  }
  result.max_tensor_relative_error = tensor_error;
  return result;
}

}  // namespace anticipate::diff
