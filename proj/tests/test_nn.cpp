// Copyright 2026 The Coughnet Authors. All Rights Reserved.
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

#include <gtest/gtest.h>

#include <cmath>

#include "coughnet/nn/checkpoint.hpp"
#include "coughnet/nn/layers.hpp"
#include "coughnet/nn/loss.hpp"
#include "coughnet/nn/optim.hpp"
#include "coughnet/oracles.hpp"

namespace coughnet::nn {
namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> d(0.0, scale);
  for (Index i = 0; i < t.size(); ++i) t[i] = d(rng);
  return t;
}

constexpr double kLayerTol = 1e-4;

TEST(Dense, LinearCaseWeightGradIsOuterProduct) {
  Rng rng(1);
  Dense d(3, 2, rng);
  Tensor x({1, 3}, Eigen::VectorXd::LinSpaced(3, 1.0, 3.0));
  d.forward(x, {});
  d.backward(Tensor::constant({1, 2}, 1.0));
  for (Index o = 0; o < 2; ++o) {
    for (Index i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(d.weight_grad().matrix()(o, i), x[i]);
  }
}

TEST(Dense, GradientCheck) {
  Rng rng(2);
  Dense d(5, 4, rng);
  auto r = oracle::check_layer(d, random_tensor({3, 5}, rng), {Mode::train, 0}, rng);
  EXPECT_LT(r.max_rel_error, kLayerTol) << r.worst;
}

TEST(Dense, ShapeMismatchReportsBothShapes) {
  Rng rng(3);
  Dense d(5, 4, rng);
  try {
    d.forward(Tensor({2, 6}), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::shape);
    EXPECT_NE(std::string(e.what()).find("(2, 6)"), std::string::npos);
  }
}

TEST(Layers, BackwardBeforeForwardIsProtocolError) {
  Rng rng(4);
  Dense d(2, 2, rng);
  Conv2d c(1, 1, {}, rng);
  BatchNorm bn(2);
  Relu relu;
  for (Layer* l : std::vector<Layer*>{&d, &c, &bn, &relu}) {
    try {
      l->backward(Tensor({1, 2}));
      FAIL() << to_string(l->kind());
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::protocol);
    }
  }
}

TEST(Conv2d, IdentityOneByOneKernelIsIdentity) {
  Rng rng(5);
  Conv2d c(2, 2, {1, 1, 0, false}, rng);
  c.weight().data().setZero();
  c.weight()[0] = 1.0;  // [0,0]
  c.weight()[3] = 1.0;  // [1,1]
  Tensor x = random_tensor({2, 2, 4, 5}, rng);
  Tensor y = c.forward(x, {});
  EXPECT_EQ(y.shape(), x.shape());
  EXPECT_TRUE(y.data().isApprox(x.data()));
}

TEST(Conv2d, GradientCheckStridedPaddedWithBias) {
  Rng rng(6);
  Conv2d c(2, 3, {3, 2, 1, true}, rng);
  auto r = oracle::check_layer(c, random_tensor({2, 2, 5, 6}, rng), {}, rng);
  EXPECT_LT(r.max_rel_error, kLayerTol) << r.worst;
}

TEST(Conv2d, MatchesDirectCrossCorrelation) {
  Rng rng(7);
  Conv2d c(2, 2, {3, 1, 1, false}, rng);
  Tensor x = random_tensor({1, 2, 4, 4}, rng);
  Tensor y = c.forward(x, {});
  auto X = [&](Index ch, Index i, Index j) -> double {
    if (i < 0 || j < 0 || i >= 4 || j >= 4) return 0.0;
    return x[(ch * 4 + i) * 4 + j];
  };
  for (Index o = 0; o < 2; ++o) {
    for (Index i = 0; i < 4; ++i) {
      for (Index j = 0; j < 4; ++j) {
        double s = 0.0;
        for (Index ch = 0; ch < 2; ++ch) {
          for (Index a = 0; a < 3; ++a) {
            for (Index b = 0; b < 3; ++b) s += c.weight()[((o * 2 + ch) * 3 + a) * 3 + b] * X(ch, i + a - 1, j + b - 1);
          }
        }
        EXPECT_NEAR(y[(o * 4 + i) * 4 + j], s, 1e-12);
      }
    }
  }
}

TEST(BatchNorm, TrainOutputIsStandardized) {
  Rng rng(8);
  BatchNorm bn(3);
  Tensor x = random_tensor({16, 3}, rng, 4.0);
  x.matrix().col(1).array() += 10.0;
  Tensor y = bn.forward(x, {Mode::train, 0});
  const auto m = y.matrix();
  for (Index f = 0; f < 3; ++f) {
    EXPECT_NEAR(m.col(f).mean(), 0.0, 1e-12);
    EXPECT_NEAR((m.col(f).array() - m.col(f).mean()).square().mean(), 1.0, 1e-5);
  }
}

TEST(BatchNorm, NormalizedBatchPassesThrough) {
  BatchNorm bn(1);
  Tensor x({4, 1}, (Eigen::VectorXd(4) << -1.0, -1.0, 1.0, 1.0).finished());
  Tensor y = bn.forward(x, {Mode::train, 0});
  EXPECT_TRUE(y.data().isApprox(x.data(), 1e-4));
}

TEST(BatchNorm, BatchOfOneInTrainModeIsDegenerate) {
  BatchNorm bn(2);
  try {
    bn.forward(Tensor({1, 2}), {Mode::train, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate);
  }
  EXPECT_NO_THROW(bn.forward(Tensor({1, 2}), {Mode::infer, 0}));
}

TEST(BatchNorm, RunningMeanFollowsClosedFormEma) {
  Rng rng(9);
  BatchNorm bn(2, 0.9);
  double expected = 0.0;
  for (int step = 0; step < 40; ++step) {
    Tensor x = random_tensor({8, 2}, rng);
    x.matrix().array() += 3.0;
    const double mean = x.matrix().col(0).mean();
    expected = 0.9 * expected + 0.1 * mean;
    bn.forward(x, {Mode::train, static_cast<std::uint64_t>(step)});
  }
  EXPECT_NEAR(bn.running_mean()[0], expected, 1e-12);
  EXPECT_NEAR(bn.running_mean()[0], 3.0, 0.2);
}

TEST(BatchNorm, InferDoesNotMutateAndIsRepeatable) {
  Rng rng(10);
  BatchNorm bn(3);
  bn.forward(random_tensor({6, 3}, rng), {Mode::train, 0});
  const Tensor mean = bn.running_mean();
  Tensor x = random_tensor({5, 3}, rng);
  Tensor a = bn.forward(x, {});
  Tensor b = bn.forward(x, {});
  EXPECT_EQ(a.data(), b.data());
  EXPECT_EQ(mean.data(), bn.running_mean().data());
}

TEST(BatchNorm, GradientCheckRank2AndRank4) {
  Rng rng(11);
  BatchNorm bn2(4);
  bn2.gamma().data() = Eigen::VectorXd::LinSpaced(4, 0.5, 2.0);
  auto r2 = oracle::check_layer(bn2, random_tensor({6, 4}, rng), {Mode::train, 0}, rng);
  EXPECT_LT(r2.max_rel_error, kLayerTol) << r2.worst;
  BatchNorm bn4(3);
  auto r4 = oracle::check_layer(bn4, random_tensor({2, 3, 3, 4}, rng), {Mode::train, 0}, rng);
  EXPECT_LT(r4.max_rel_error, kLayerTol) << r4.worst;
  auto ri = oracle::check_layer(bn4, random_tensor({2, 3, 3, 4}, rng), {Mode::infer, 0}, rng);
  EXPECT_LT(ri.max_rel_error, kLayerTol) << ri.worst;
}

TEST(Dropout, InferIsIdentityBothWays) {
  Dropout d(0.5, 1);
  Rng rng(12);
  Tensor x = random_tensor({4, 5}, rng);
  EXPECT_EQ(d.forward(x, {}).data(), x.data());
  EXPECT_EQ(d.backward(x).data(), x.data());
}

TEST(Dropout, TrainMaskIsReplayableAndScaled) {
  Dropout d(0.3, 99);
  Tensor x = Tensor::constant({100, 10}, 1.0);
  Tensor a = d.forward(x, {Mode::train, 5});
  Tensor b = d.forward(x, {Mode::train, 5});
  Tensor c = d.forward(x, {Mode::train, 6});
  EXPECT_EQ(a.data(), b.data());
  EXPECT_NE(a.data(), c.data());
  for (Index i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(a[i] == 0.0 || std::abs(a[i] - 1.0 / 0.7) < 1e-12);
  }
  const double kept = (a.data().array() > 0).cast<double>().mean();
  EXPECT_NEAR(kept, 0.7, 0.05);
  Rng rng(13);
  auto r = oracle::check_layer(d, random_tensor({4, 6}, rng), {Mode::train, 3}, rng);
  EXPECT_LT(r.max_rel_error, kLayerTol) << r.worst;
}

TEST(Relu, GradientCheck) {
  Rng rng(14);
  Relu relu;
  auto r = oracle::check_layer(relu, random_tensor({4, 7}, rng), {}, rng);
  EXPECT_LT(r.max_rel_error, kLayerTol) << r.worst;
}

TEST(Pooling, GlobalMaxOfConstantMapIsConstant) {
  GlobalMaxPool gmp;
  Tensor x = Tensor::constant({2, 3, 4, 4}, 2.5);
  Tensor y = gmp.forward(x, {});
  EXPECT_EQ(y.shape(), (Shape{2, 3}));
  EXPECT_TRUE((y.data().array() == 2.5).all());
}

TEST(Pooling, GradientChecks) {
  Rng rng(15);
  GlobalAvgPool gap;
  GlobalMaxPool gmp;
  MaxPool2d mp(3, 2, 1);
  for (Layer* l : std::vector<Layer*>{&gap, &gmp, &mp}) {
    auto r = oracle::check_layer(*l, random_tensor({2, 3, 5, 5}, rng), {}, rng);
    EXPECT_LT(r.max_rel_error, kLayerTol) << to_string(l->kind()) << " " << r.worst;
  }
}

TEST(Softmax, UniformLogitsGiveUniformProbabilities) {
  Softmax s;
  Tensor y = s.forward(Tensor({1, 3}), {});
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(y[i], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, RowsAreSimplexAndGradientChecks) {
  Rng rng(16);
  Softmax s;
  Tensor y = s.forward(random_tensor({20, 3}, rng, 30.0), {});
  EXPECT_TRUE((y.data().array() >= 0.0).all());
  for (Index r = 0; r < 20; ++r) EXPECT_NEAR(y.matrix().row(r).sum(), 1.0, 1e-9);
  auto res = oracle::check_layer(s, random_tensor({3, 3}, rng), {}, rng);
  EXPECT_LT(res.max_rel_error, kLayerTol) << res.worst;
}

TEST(Standardize, FitThenForwardStandardizesAndGradientChecks) {
  Rng rng(17);
  Standardize st(4);
  Tensor sample = random_tensor({50, 4}, rng, 5.0);
  st.fit(sample);
  Tensor y = st.forward(sample, {});
  for (Index f = 0; f < 4; ++f) EXPECT_NEAR(y.matrix().col(f).mean(), 0.0, 1e-12);
  auto r = oracle::check_layer(st, random_tensor({3, 4}, rng), {}, rng);
  EXPECT_LT(r.max_rel_error, kLayerTol) << r.worst;
}

Sequential basic_block(Index in, Index out, Index stride, Rng& rng, Sequential* shortcut) {
  Sequential main;
  main.emplace<Conv2d>(in, out, Conv2dOptions{3, stride, 1, false}, rng);
  main.emplace<BatchNorm>(out);
  main.emplace<Relu>();
  main.emplace<Conv2d>(out, out, Conv2dOptions{3, 1, 1, false}, rng);
  main.emplace<BatchNorm>(out);
  if (stride != 1 || in != out) {
    shortcut->emplace<Conv2d>(in, out, Conv2dOptions{1, stride, 0, false}, rng);
    shortcut->emplace<BatchNorm>(out);
  }
  return main;
}

TEST(Containers, ResidualBlockGradientCheck) {
  Rng rng(18);
  Sequential sc;
  Sequential main = basic_block(2, 3, 2, rng, &sc);
  ResidualBlock block(std::move(main), std::move(sc));
  auto r = oracle::check_layer(block, random_tensor({3, 2, 6, 6}, rng), {Mode::train, 0}, rng);
  EXPECT_LT(r.max_rel_error, kLayerTol) << r.worst;
  Sequential sc2;
  Sequential main2 = basic_block(3, 3, 1, rng, &sc2);
  ResidualBlock identity(std::move(main2), std::move(sc2));
  auto r2 = oracle::check_layer(identity, random_tensor({3, 3, 4, 4}, rng), {Mode::train, 0}, rng);
  EXPECT_LT(r2.max_rel_error, kLayerTol) << r2.worst;
}

TEST(Containers, ParallelConcatGradientCheckAndWidth) {
  Rng rng(19);
  std::vector<Sequential> branches(2);
  branches[0].emplace<GlobalAvgPool>();
  branches[0].emplace<BatchNorm>(3);
  branches[0].emplace<Dropout>(0.3, 5);
  branches[1].emplace<GlobalMaxPool>();
  branches[1].emplace<BatchNorm>(3);
  branches[1].emplace<Dropout>(0.3, 6);
  ParallelConcat pc(std::move(branches));
  Tensor x = random_tensor({4, 3, 3, 3}, rng);
  EXPECT_EQ(pc.forward(x, {}).shape(), (Shape{4, 6}));
  auto r = oracle::check_layer(pc, x, {Mode::train, 2}, rng);
  EXPECT_LT(r.max_rel_error, kLayerTol) << r.worst;
}

TEST(Containers, CloneIsDeepAndParamNamesAreStable) {
  Rng rng(20);
  Sequential s;
  s.emplace<Dense>(3, 4, rng);
  s.emplace<BatchNorm>(4);
  Sequential copy = s;
  static_cast<Dense&>(copy.at(0)).weight()[0] += 1.0;
  EXPECT_NE(static_cast<Dense&>(copy.at(0)).weight()[0], static_cast<Dense&>(s.at(0)).weight()[0]);
  auto names = s.params("net");
  ASSERT_EQ(names.size(), 4u);
  EXPECT_EQ(names[0].name, "net.0.weight");
  EXPECT_EQ(names[3].name, "net.1.beta");
  EXPECT_EQ(s.state().size(), 2u);
  EXPECT_EQ(s.parameter_count(), 3 * 4 + 4 + 4 + 4);
}

TEST(Loss, PerfectAndUniformPredictions) {
  Tensor perfect({2, 3}, (Eigen::VectorXd(6) << 1, 0, 0, 0, 0, 1).finished());
  EXPECT_NEAR(cross_entropy(perfect, {0, 2}), 0.0, 1e-15);
  Tensor uniform = Tensor::constant({4, 3}, 1.0 / 3.0);
  EXPECT_NEAR(cross_entropy(uniform, {0, 1, 2, 0}), std::log(3.0), 1e-12);
  EXPECT_NEAR(softmax_cross_entropy(Tensor({4, 3}), {0, 1, 2, 0}).loss, 1.0986122886681098, 1e-12);
  Tensor wrong({1, 3}, (Eigen::VectorXd(3) << 0, 1, 0).finished());
  EXPECT_NEAR(cross_entropy(wrong, {0}), -std::log(1e-12), 1e-9);
}

TEST(Loss, FusedGradientMatchesFiniteDifferences) {
  Rng rng(21);
  Tensor z = random_tensor({5, 3}, rng, 2.0);
  const std::vector<int> y{0, 2, 1, 1, 0};
  auto r = softmax_cross_entropy(z, y);
  Tensor expected = r.probabilities;
  for (Index i = 0; i < 5; ++i) expected.matrix()(i, y[static_cast<std::size_t>(i)]) -= 1.0;
  EXPECT_TRUE(r.grad.data().isApprox(expected.data() / 5.0, 1e-14));
  std::vector<oracle::GradProbe> probes{{"logits", &z, r.grad}};
  auto res = oracle::finite_difference_check([&] { return softmax_cross_entropy(z, y).loss; },
                                             probes, 0, rng);
  EXPECT_LT(res.max_rel_error, kLayerTol) << res.worst;
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Rng rng(22);
  Dense d(3, 2, rng);
  const Tensor before = d.weight();
  Adam opt(d.params(), {});
  for (int i = 0; i < 3; ++i) opt.step();
  EXPECT_EQ(before.data(), d.weight().data());
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Tensor p = Tensor::constant({3}, 1.0);
  Tensor g({3}, (Eigen::VectorXd(3) << 0.5, -2.0, 1e-3).finished());
  Adam opt({{"p", &p, &g}}, {0.01, 0.9, 0.999, 1e-8});
  opt.step();
  EXPECT_NEAR(p[0], 1.0 - 0.01, 1e-8);
  EXPECT_NEAR(p[1], 1.0 + 0.01, 1e-8);
  EXPECT_NEAR(p[2], 1.0 - 0.01, 1e-6);
}

TEST(Adam, IdenticalRunsGiveIdenticalTrajectories) {
  auto run = [] {
    Rng rng(23);
    Dense d(4, 3, rng);
    Adam opt(d.params(), {});
    Tensor x = random_tensor({6, 4}, rng);
    for (int s = 0; s < 10; ++s) {
      auto r = softmax_cross_entropy(d.forward(x, {Mode::train, 0}), {0, 1, 2, 0, 1, 2});
      d.backward(r.grad);
      opt.step();
    }
    return d.weight().data();
  };
  EXPECT_EQ(run(), run());
}

TEST(Checkpoint, RoundTripsParamsAndState) {
  Rng rng(24);
  Sequential s;
  s.emplace<Dense>(3, 4, rng);
  s.emplace<BatchNorm>(4);
  s.forward(random_tensor({5, 3}, rng), {Mode::train, 0});
  Checkpoint ck{"abc", "{}", capture(s.params(), s.state())};
  const auto bytes = ck.serialize();
  Checkpoint back = Checkpoint::deserialize(bytes);
  EXPECT_EQ(back.config_digest, "abc");
  Rng other(99);
  Sequential t;
  t.emplace<Dense>(3, 4, other);
  t.emplace<BatchNorm>(4);
  restore(back.tensors, t.params(), t.state());
  EXPECT_EQ(back.serialize(), Checkpoint({"abc", "{}", capture(t.params(), t.state())}).serialize());
}

TEST(Checkpoint, RejectsCorruptionAndShapeMismatch) {
  Rng rng(25);
  Dense d(3, 4, rng);
  Checkpoint ck{"x", "{}", capture(d.params(), d.state())};
  auto bytes = ck.serialize();
  bytes[0] = 'X';
  EXPECT_THROW(Checkpoint::deserialize(bytes), Error);
  bytes = ck.serialize();
  bytes.resize(bytes.size() - 3);
  EXPECT_THROW(Checkpoint::deserialize(bytes), Error);
  Dense wrong(4, 4, rng);
  try {
    restore(ck.tensors, wrong.params(), wrong.state());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::corrupt_file);
  }
}

}  // namespace
}  // namespace coughnet::nn
