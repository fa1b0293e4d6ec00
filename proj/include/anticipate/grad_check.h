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

#ifndef ANTICIPATE_GRAD_CHECK_H_
#define ANTICIPATE_GRAD_CHECK_H_

#include <cstddef>
#include <functional>
#include <span>

#include "anticipate/tape.h"
#include "anticipate/tensor.h"

namespace anticipate::diff {

// Builds a scalar on `tape` from the given parameter leaves.
using TapeFunction = std::function<Var(Tape& tape, std::span<const Var>)>;

struct GradCheckResult {
  // max over coordinates of |analytic - numeric| /
  // max(1e-8, |analytic| + |numeric|)
  double max_relative_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  // max over inputs of ||analytic - numeric||_2 /
  // max(1e-8, ||analytic||_2 + ||numeric||_2). Unlike the per-coordinate
  // figure it is not dominated by round-off on near-zero coordinates.
  double max_tensor_relative_error = 0.0;
};

// Compares reverse-mode gradients against central differences with step `h`.
// Throws ShapeError when the function is not scalar-valued.
GradCheckResult GradCheck(const TapeFunction& function,
                          std::span<const Tensor> inputs, double h = 1e-5);

}  // namespace anticipate::diff

#endif  // ANTICIPATE_GRAD_CHECK_H_
