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

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "anticipate/errors.h"
#include "anticipate/format.h"
#include "anticipate/grad_check.h"
#include "anticipate/tape.h"
#include "anticipate/tensor.h"
#include "test_util.h"

namespace anticipate::diff {
namespace {

using testing_util::RandomTensor;

constexpr double kGradTolerance = 1e-4;
constexpr int kPoints = 10;

// Weighted sum so every output coordinate gets a distinct upstream gradient.
Var Project(Tape& tape, Var y, std::uint64_t seed) {
  return Sum(Mul(y, tape.Constant(RandomTensor(y.rows(), y.cols(), seed))));
}

void ExpectGradOk(const TapeFunction& f, std::vector<Tensor> inputs) {
  const GradCheckResult r = GradCheck(f, inputs);
  EXPECT_LT(r.max_relative_error, kGradTolerance)
      << "input " << r.worst_input << " index " << r.worst_index
      << " analytic " << r.worst_analytic << " numeric " << r.worst_numeric;
}

TEST(TensorTest, ShapeAndAccess) {
  Tensor t(2, 3, 1.5);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  t(1, 2) = 4.0;
  EXPECT_EQ(t.row(1)[2], 4.0);
  EXPECT_EQ(t.ShapeString(), "(2 x 3)");
  EXPECT_THROW(Tensor(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
  Tensor bad(1, 1, std::numeric_limits<double>::infinity());
  EXPECT_FALSE(bad.AllFinite());
}

TEST(TapeTest, AffineValue) {
  Tape tape;
  Var x = tape.Constant(Tensor::FromRows({{1, 2}}));
  Var w = tape.Parameter(Tensor::FromRows({{1, 0, 2}, {0, 1, 3}}));
  Var b = tape.Parameter(Tensor::FromRows({{0.5, 0.5, 0.5}}));
  const Tensor& y = Affine(x, w, b).value();
  EXPECT_EQ(y, Tensor::FromRows({{1.5, 2.5, 8.5}}));
}

TEST(TapeTest, MatmulShapeMismatchThrows) {
  Tape tape;
  Var a = tape.Constant(Tensor(2, 3));
  Var b = tape.Constant(Tensor(2, 3));
  EXPECT_THROW(Matmul(a, b), ShapeError);
}

TEST(TapeTest, CausalConvUsesOnlyPastRows) {
  Tape tape;
  Var x = tape.Constant(Tensor::FromRows({{1}, {2}, {3}}));
  std::vector<Var> kernel{tape.Parameter(Tensor::FromRows({{10}})),
                          tape.Parameter(Tensor::FromRows({{1}}))};
  Var b = tape.Parameter(Tensor(1, 1));
  // y_t = 10 x_t + x_{t-1}, x_0 = 0
  EXPECT_EQ(CausalConv1d(x, kernel, b).value(),
            Tensor::FromRows({{10}, {21}, {32}}));
  EXPECT_THROW(CausalConv1d(x, {}, b), ShapeError);
}

TEST(TapeTest, MaskedSoftmaxIgnoresMaskedEntries) {
  Tape tape;
  Var s = tape.Constant(Tensor::FromRows({{1000.0, 2.0, 2.0}}));
  const Tensor& w = MaskedSoftmax(s, {0, 1, 1}).value();
  EXPECT_DOUBLE_EQ(w(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(w(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(w(0, 2), 0.5);
  const Tensor& none = MaskedSoftmax(s, {0, 0, 0}).value();
  EXPECT_EQ(none, Tensor(1, 3));
}

TEST(TapeTest, IfoPoolRecurrence) {
  Tape tape;
  Var z = tape.Constant(Tensor::FromRows({{1.0}, {2.0}}));
  Var f = tape.Constant(Tensor::FromRows({{0.5}, {0.25}}));
  Var i = tape.Constant(Tensor::FromRows({{1.0}, {0.5}}));
  // c1 = 0.5*0 + 1*1 = 1; c2 = 0.25*1 + 0.5*2 = 1.25
  EXPECT_EQ(IfoPool(z, f, i).value(), Tensor::FromRows({{1.0}, {1.25}}));
}

TEST(TapeTest, UnreachedNodeHasZeroGrad) {
  Tape tape;
  Var a = tape.Parameter(Tensor(2, 2, 1.0));
  Var unused = tape.Parameter(Tensor(1, 3, 1.0));
  tape.Backward(Sum(a));
  EXPECT_EQ(tape.Grad(a), Tensor(2, 2, 1.0));
  EXPECT_EQ(tape.Grad(unused), Tensor(1, 3));
}

TEST(TapeTest, BackwardRequiresScalar) {
  Tape tape;
  Var a = tape.Parameter(Tensor(2, 2, 1.0));
  EXPECT_THROW(tape.Backward(a), ShapeError);
}

TEST(TapeTest, CheckedModeRejectsNonFinite) {
  Tape tape(/*checked=*/true);
  EXPECT_THROW(
      tape.Parameter(Tensor(1, 1, std::numeric_limits<double>::quiet_NaN())),
      NumericError);
}

TEST(TapeTest, SquaredViaAliasedMul) {
  Tape tape;
  Var a = tape.Parameter(Tensor::FromRows({{3.0}}));
  tape.Backward(Sum(Mul(a, a)));
  EXPECT_DOUBLE_EQ(tape.Grad(a)(0, 0), 6.0);
}

// Finite-difference checks, one per primitive, each at kPoints seeded
// random inputs.
class PrimitiveGradTest : public ::testing::TestWithParam<int> {
 protected:
  std::uint64_t seed() const { return 1000 + GetParam(); }
};

TEST_P(PrimitiveGradTest, Affine) {
  ExpectGradOk(
      [&](Tape& t, std::span<const Var> v) {
        return Project(t, Affine(v[0], v[1], v[2]), seed());
      },
      {RandomTensor(3, 4, seed()), RandomTensor(4, 2, seed() + 1),
       RandomTensor(1, 2, seed() + 2)});
}

TEST_P(PrimitiveGradTest, AffineFullBias) {
  ExpectGradOk(
      [&](Tape& t, std::span<const Var> v) {
        return Project(t, Affine(v[0], v[1], v[2]), seed());
      },
      {RandomTensor(3, 4, seed()), RandomTensor(4, 2, seed() + 1),
       RandomTensor(3, 2, seed() + 2)});
}

TEST_P(PrimitiveGradTest, Matmul) {
  ExpectGradOk(
      [&](Tape& t, std::span<const Var> v) {
        return Project(t, Matmul(v[0], v[1]), seed());
      },
      {RandomTensor(2, 3, seed()), RandomTensor(3, 4, seed() + 1)});
}

TEST_P(PrimitiveGradTest, CausalConv) {
  ExpectGradOk(
      [&](Tape& t, std::span<const Var> v) {
        std::vector<Var> kernel{v[1], v[2], v[3]};
        return Project(t, CausalConv1d(v[0], kernel, v[4]), seed());
      },
      {RandomTensor(5, 3, seed()), RandomTensor(3, 2, seed() + 1),
       RandomTensor(3, 2, seed() + 2), RandomTensor(3, 2, seed() + 3),
       RandomTensor(1, 2, seed() + 4)});
}

TEST_P(PrimitiveGradTest, Sigmoid) {
  ExpectGradOk(
      [&](Tape& t, std::span<const Var> v) {
        return Project(t, Activation(v[0], ActivationKind::kSigmoid), seed());
      },
      {RandomTensor(3, 3, seed(), 3.0)});
}

TEST_P(PrimitiveGradTest, Tanh) {
  ExpectGradOk(
      [&](Tape& t, std::span<const Var> v) {
        return Project(t, Activation(v[0], ActivationKind::kTanh), seed());
      },
      {RandomTensor(3, 3, seed(), 2.0)});
}

TEST_P(PrimitiveGradTest, AddAndMul) {
  ExpectGradOk(
      [&](Tape& t, std::span<const Var> v) {
        return Project(t, Mul(Add(v[0], v[1]), v[1]), seed());
      },
      {RandomTensor(2, 3, seed()), RandomTensor(2, 3, seed() + 1)});
}

TEST_P(PrimitiveGradTest, MaskedSoftmax) {
  const Mask mask{1, 0, 1, 1, 0};
  ExpectGradOk(
      [&](Tape& t, std::span<const Var> v) {
        return Project(t, MaskedSoftmax(v[0], mask), seed());
      },
      {RandomTensor(1, 5, seed(), 2.0)});
  ExpectGradOk(
      [&](Tape& t, std::span<const Var> v) {
        return Project(t, MaskedSoftmax(v[0], mask), seed());
      },
      {RandomTensor(5, 1, seed(), 2.0)});
}

TEST_P(PrimitiveGradTest, TransposeConcatSliceRow) {
  ExpectGradOk(
      [&](Tape& t, std::span<const Var> v) {
        Var c = ConcatCols(Transpose(v[0]), v[1]);
        Var s = SliceCols(c, 1, 3);
        return Project(t, Row(s, 2), seed());
      },
      {RandomTensor(2, 4, seed()), RandomTensor(4, 3, seed() + 1)});
}

TEST_P(PrimitiveGradTest, StackRows) {
  ExpectGradOk(
      [&](Tape& t, std::span<const Var> v) {
        std::vector<Var> rows{v[0], v[1], v[0]};
        return Project(t, StackRows(rows), seed());
      },
      {RandomTensor(1, 3, seed()), RandomTensor(1, 3, seed() + 1)});
}

TEST_P(PrimitiveGradTest, IfoPool) {
  ExpectGradOk(
      [&](Tape& t, std::span<const Var> v) {
        Var f = Activation(v[1], ActivationKind::kSigmoid);
        return Project(t, IfoPool(v[0], f, v[2]), seed());
      },
      {RandomTensor(4, 3, seed()), RandomTensor(4, 3, seed() + 1),
       RandomTensor(4, 3, seed() + 2)});
}

TEST_P(PrimitiveGradTest, ScalarFunction) {
  // sum(x^3) computed outside the tape.
  ExpectGradOk(
      [&](Tape&, std::span<const Var> v) {
        const Tensor& x = v[0].value();
        double value = 0.0;
        Tensor d(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.size(); ++i) {
          value += x[i] * x[i] * x[i];
          d[i] = 3.0 * x[i] * x[i];
        }
        return ScalarFunction(v[0], value, d);
      },
      {RandomTensor(2, 2, seed())});
}

INSTANTIATE_TEST_SUITE_P(SeededPoints, PrimitiveGradTest,
                         ::testing::Range(0, kPoints));

TEST(GradCheckTest, RejectsNonScalar) {
  EXPECT_THROW(GradCheck([](Tape&, std::span<const Var> v) { return v[0]; },
                         std::vector<Tensor>{Tensor(2, 2, 1.0)}),
               ShapeError);
}

TEST(GradCheckTest, DetectsWrongGradient) {
  // Claims d/dx x^2 = x, which is off by a factor of two.
  const GradCheckResult r = GradCheck(
      [](Tape&, std::span<const Var> v) {
        const double x = v[0].value()(0, 0);
        return ScalarFunction(v[0], x * x, Tensor(1, 1, x));
      },
      std::vector<Tensor>{Tensor(1, 1, 1.5)});
  EXPECT_GT(r.max_relative_error, 0.1);
  EXPECT_GT(r.max_tensor_relative_error, 0.1);
}

TEST(GradCheckTest, TensorErrorIgnoresRoundOffOnTinyCoordinates) {
  // One coordinate's gradient is ~1e-9 of the other's.
  const GradCheckResult r = GradCheck(
      [](Tape& t, std::span<const Var> v) {
        Var w = t.Constant(Tensor::FromRows({{1e3, 1e-6}}));
        return Sum(Mul(Activation(v[0], ActivationKind::kTanh), w));
      },
      std::vector<Tensor>{Tensor::FromRows({{0.3, 0.7}})});
  EXPECT_LT(r.max_tensor_relative_error, 1e-8);
}

TEST(FormatTest, ShortestRoundTrip) {
  EXPECT_EQ(FormatDouble(0.1), "0.1");
  EXPECT_EQ(FormatDouble(2.0), "2");
  EXPECT_EQ(FormatDouble(1.0 / 3.0), "0.3333333333333333");
  EXPECT_EQ(FormatDouble(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(FormatDouble(-std::numeric_limits<double>::infinity()), "-inf");
}

}  // namespace
}  // namespace anticipate::diff
