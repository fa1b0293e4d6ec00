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

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "anticipate/errors.h"
#include "anticipate/loss.h"
#include "anticipate/model.h"
#include "anticipate/synthetic.h"
#include "test_util.h"

namespace anticipate::model {
namespace {

using testing_util::RandomTensor;

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

ModelConfig SmallConfig(RecurrentKind kind) {
  ModelConfig c;
  c.recurrent_kind = kind;
  c.m = 3;
  c.D_g = 2;
  c.D_l = 2;
  c.K = 3;
  c.attention_dim = 3;
  return c;
}

FeatureSequence RandomFeatures(const ModelConfig& c, int frames,
                               std::uint64_t seed) {
  FeatureSequence f;
  f.clip_id = "clip";
  f.global_feats = RandomTensor(frames, c.D_g, seed);
  std::mt19937_64 rng(seed + 7);
  for (int t = 0; t < frames; ++t) {
    f.local_feats.push_back(RandomTensor(c.K, c.D_l, seed + 100 + t));
    ObjectMask mask(c.K);
    for (auto& bit : mask) bit = rng() % 4 != 0;
    f.local_mask.push_back(mask);
  }
  return f;
}

// Scalar QRNN (n = m = 1, k = 2) replayed by hand against the tape op.
TEST(QrnnTest, MatchesScalarRecurrence) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Tensor x = RandomTensor(2, 1, seed);
    const Tensor w0 = RandomTensor(1, 4, seed + 1);  // lag 0: z f i o
    const Tensor w1 = RandomTensor(1, 4, seed + 2);  // lag 1
    const Tensor b = RandomTensor(1, 4, seed + 3);

    Tape tape;
    std::vector<Var> kernel{tape.Constant(w0), tape.Constant(w1)};
    const Tensor h =
        QrnnForward(tape.Constant(x), kernel, tape.Constant(b)).value();

    double c = 0.0, x_prev = 0.0;
    for (int t = 0; t < 2; ++t) {
      auto pre = [&](int g) {
        return w0(0, g) * x(t, 0) + w1(0, g) * x_prev + b(0, g);
      };
      const double z = std::tanh(pre(0)), f = Sigmoid(pre(1));
      const double i = Sigmoid(pre(2)), o = Sigmoid(pre(3));
      c = f * c + i * z;
      EXPECT_NEAR(h(t, 0), o * c, 1e-12) << "seed " << seed << " t " << t;
      x_prev = x(t, 0);
    }
  }
}

TEST(LstmTest, MatchesScalarRecurrence) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Tensor x = RandomTensor(3, 1, seed);
    const Tensor wx = RandomTensor(1, 4, seed + 1);  // i f o g
    const Tensor wh = RandomTensor(1, 4, seed + 2);
    const Tensor b = RandomTensor(1, 4, seed + 3);
    Tape tape;
    const Tensor h = LstmForward(tape.Constant(x), tape.Constant(wx),
                                 tape.Constant(wh), tape.Constant(b))
                         .value();
    ASSERT_EQ(h.rows(), 3u);
    double c = 0.0, hp = 0.0;
    for (int t = 0; t < 3; ++t) {
      auto pre = [&](int g) { return wx(0, g) * x(t, 0) + wh(0, g) * hp + b(0, g); };
      const double i = Sigmoid(pre(0)), f = Sigmoid(pre(1));
      const double o = Sigmoid(pre(2)), g = std::tanh(pre(3));
      c = f * c + i * g;
      hp = o * std::tanh(c);
      EXPECT_NEAR(h(t, 0), hp, 1e-12);
    }
  }
}

TEST(AttentionTest, ConvexCombinationOfPresentObjects) {
  const ModelConfig c = SmallConfig(RecurrentKind::kQrnn);
  const Model model = InitParams(c, 3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Tape tape;
    const BoundModel bound = Bind(tape, model);
    const std::vector<Var> params = bound.leaves;  // attention first
    const AttentionVars att{params[0], params[1], params[2], params[3]};
    Tensor locals = RandomTensor(c.K, c.D_l, seed);
    const diff::Mask mask{1, 0, 1};
    Var h_prev = tape.Constant(RandomTensor(1, c.m, seed + 1));
    const Tensor out =
        AttendLocals(tape.Constant(locals), mask, h_prev, att).value();
    for (int d = 0; d < c.D_l; ++d) {
      const double lo = std::min(locals(0, d), locals(2, d));
      const double hi = std::max(locals(0, d), locals(2, d));
      EXPECT_GE(out(0, d), lo - 1e-12);
      EXPECT_LE(out(0, d), hi + 1e-12);
    }
    // The masked object does not matter.
    locals(1, 0) += 100.0;
    locals(1, 1) -= 50.0;
    EXPECT_EQ(AttendLocals(tape.Constant(locals), mask, h_prev, att).value(),
              out);
    // Nothing present: zero context.
    EXPECT_EQ(
        AttendLocals(tape.Constant(locals), {0, 0, 0}, h_prev, att).value(),
        Tensor(1, c.D_l));
  }
}

TEST(AttentionTest, ShapeMismatchThrows) {
  const Model model = InitParams(SmallConfig(RecurrentKind::kQrnn), 1);
  Tape tape;
  const BoundModel bound = Bind(tape, model);
  const AttentionVars att{bound.leaves[0], bound.leaves[1], bound.leaves[2],
                          bound.leaves[3]};
  EXPECT_THROW(AttendLocals(tape.Constant(Tensor(3, 5)), {1, 1, 1},
                            tape.Constant(Tensor(1, 3)), att),
               ShapeError);
}

class ModelKindTest : public ::testing::TestWithParam<RecurrentKind> {};

TEST_P(ModelKindTest, OutputShapeAndRange) {
  ModelConfig c = SmallConfig(GetParam());
  c.num_classes = 3;
  const Model model = InitParams(c, 5);
  const RiskTrajectory r = ModelForward(model, RandomFeatures(c, 7, 1));
  EXPECT_EQ(r.clip_id, "clip");
  ASSERT_EQ(r.num_frames(), 7u);
  ASSERT_EQ(r.num_classes(), 3u);
  for (double v : r.rates.data()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST_P(ModelKindTest, Causal) {
  const ModelConfig c = SmallConfig(GetParam());
  const Model model = InitParams(c, 9);
  const FeatureSequence f = RandomFeatures(c, 8, 2);
  const Tensor base = ModelForward(model, f).rates;
  for (int s = 1; s < 8; ++s) {
    FeatureSequence g = f;
    for (int t = s; t < 8; ++t) {
      for (double& v : g.global_feats.row(t)) v += 3.0;
      for (double& v : g.local_feats[t].data()) v -= 2.0;
      g.local_mask[t].assign(c.K, 1);
    }
    const Tensor changed = ModelForward(model, g).rates;
    for (int t = 0; t < s; ++t) {
      EXPECT_EQ(changed(t, 0), base(t, 0)) << "future frame " << s + 1
                                           << " changed frame " << t + 1;
    }
    EXPECT_NE(changed(s, 0), base(s, 0));
  }
}

TEST_P(ModelKindTest, InitDeterministic) {
  const ModelConfig c = SmallConfig(GetParam());
  EXPECT_EQ(InitParams(c, 4), InitParams(c, 4));
  EXPECT_NE(InitParams(c, 4), InitParams(c, 5));
  const Model m = InitParams(c, 4);
  EXPECT_EQ(m.Parameters().size(), m.ParameterNames().size());
  EXPECT_EQ(m.Parameters().size(), m.ParameterGroups().size());
}

TEST_P(ModelKindTest, TapeAndEvalForwardAgree) {
  const ModelConfig c = SmallConfig(GetParam());
  const Model model = InitParams(c, 6);
  const FeatureSequence f = RandomFeatures(c, 5, 3);
  Tape tape;
  const Var r = ModelForward(tape, Bind(tape, model), model, f);
  EXPECT_EQ(r.value(), ModelForward(model, f).rates);
}

// Gradient of the mean batch loss through the whole network against central
// differences of the evaluation-only forward pass.
TEST_P(ModelKindTest, EndToEndGradient) {
  ModelConfig c = SmallConfig(GetParam());
  c.num_classes = 2;
  const Model model = InitParams(c, 8);
  std::vector<FeatureSequence> feats{RandomFeatures(c, 6, 10),
                                     RandomFeatures(c, 6, 11)};
  feats[1].clip_id = "other";
  std::vector<ClipAnnotation> ann(2);
  ann[0].clip_id = "clip";
  ann[0].label = Label::kPositive;
  ann[0].accident_start_T = 5;
  ann[0].num_frames = 6;
  ann[0].risk_class = RiskClass::kPedestrian;
  ann[1].clip_id = "other";
  ann[1].num_frames = 6;

  for (loss::Variant v :
       {loss::Variant::kEL, loss::Variant::kLEA, loss::Variant::kAdaLEA}) {
    loss::LossConfig lc;
    lc.variant = v;
    const loss::EpochContext ctx{3, 0.1};

    Tape tape;
    const BoundModel bound = Bind(tape, model);
    std::vector<Var> traj;
    for (const auto& f : feats) traj.push_back(ModelForward(tape, bound, model, f));
    tape.Backward(loss::BatchLoss(traj, ann, lc, ctx));

    auto objective = [&](const Model& m) {
      std::vector<RiskTrajectory> r;
      for (const auto& f : feats) r.push_back(ModelForward(m, f));
      return loss::BatchLoss(r, ann, lc, ctx);
    };
    Model probe = model;
    const std::vector<Tensor*> params = probe.Parameters();
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
      const Tensor& grad = tape.Grad(bound.leaves[p]);
      for (std::size_t i = 0; i < params[p]->size(); ++i) {
        const double keep = (*params[p])[i];
        (*params[p])[i] = keep + h;
        const double up = objective(probe);
        (*params[p])[i] = keep - h;
        const double down = objective(probe);
        (*params[p])[i] = keep;
        const double numeric = (up - down) / (2 * h);
        const double err = std::abs(numeric - grad[i]) /
                           std::max(1.0, std::abs(numeric) + std::abs(grad[i]));
        worst = std::max(worst, err);
      }
    }
    EXPECT_LT(worst, 1e-6) << loss::VariantName(v);
  }
}

INSTANTIATE_TEST_SUITE_P(Kinds, ModelKindTest,
                         ::testing::Values(RecurrentKind::kQrnn,
                                           RecurrentKind::kLstm));

TEST(ModelConfigTest, RejectsBadFields) {
  ModelConfig c;
  c.num_classes = 4;
  EXPECT_THROW(ValidateModelConfig(c), ConfigError);
  c = ModelConfig();
  c.k = 0;
  try {
    ValidateModelConfig(c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "k");
  }
}

}  // namespace
}  // namespace anticipate::model
