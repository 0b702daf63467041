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

#include "coughnet/model.hpp"
#include "coughnet/nn/loss.hpp"
#include "coughnet/oracles.hpp"

namespace coughnet {
namespace {

using nn::Tensor;

ModelConfig tiny_config() {
  ModelConfig c;
  c.image_size = 16;
  c.backbone.widths = {4, 8, 16};
  c.backbone.blocks_per_stage = 1;
  c.branch1_width = 16;
  c.branch3_stacks = {std::vector<int>{8, 4}, std::vector<int>{8, 4}};
  c.branch3_width = 8;
  c.fusion_widths = {16, 8};
  return c;
}

FeatureTriple random_triple(int image, Rng& rng, int label = 0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FeatureTriple t;
  t.record_id = "r" + std::to_string(rng() % 100000);
  t.label = class_from_index(label);
  t.heatmap.height = t.heatmap.width = image;
  t.heatmap.pixels.resize(image * image * 3);
  for (auto& p : t.heatmap.pixels) p = static_cast<float>(u(rng));
  for (int i = 0; i < kNumMfcc; ++i) t.mfcc[i] = 10.0 * (u(rng) - 0.5);
  t.clinical.bits.resize(8);
  for (auto& b : t.clinical.bits) b = u(rng) < 0.5;
  return t;
}

std::vector<const FeatureTriple*> pointers(const std::vector<FeatureTriple>& v) {
  std::vector<const FeatureTriple*> out;
  for (const auto& t : v) out.push_back(&t);
  return out;
}

TEST(ModelConfig, JsonRoundTripAndDigestStable) {
  ModelConfig c = tiny_config();
  const ModelConfig back = ModelConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.digest(), c.digest());
  c.seed = 8;
  EXPECT_NE(back.digest(), c.digest());
}

TEST(ModelConfig, UnknownKeyAndBadEdgeRejected) {
  try {
    ModelConfig::from_json(R"({"imgsize": 3})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::configuration);
  }
  ModelConfig c;
  c.branch3_stacks[1] = {16, 0};
  try {
    Model::build(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::configuration);
    EXPECT_NE(std::string(e.what()).find("branch3.stack1[1]"), std::string::npos);
  }
}

TEST(Model, DefaultParameterCountIsDeterministic) {
  Model a = Model::build(ModelConfig{});
  Model b = Model::build(ModelConfig{});
  EXPECT_EQ(a.parameter_count(), b.parameter_count());
  EXPECT_EQ(a.digest(), b.digest());
}

TEST(Model, BranchTwoIsEightThenSixtyFour) {
  Model m = Model::build(ModelConfig{});
  std::vector<std::string> shapes;
  for (const auto& p : m.params()) {
    if (p.name.rfind("branch2.", 0) == 0 && p.name.ends_with("weight")) {
      shapes.push_back(nn::to_string(p.value->shape()));
    }
  }
  ASSERT_EQ(shapes.size(), 2u);
  EXPECT_EQ(shapes[0], "(8, 8)");
  EXPECT_EQ(shapes[1], "(64, 8)");
  EXPECT_EQ(m.branch_widths()[1], 64);
}

TEST(Model, MfccInputIsThirteen) {
  Model m = Model::build(ModelConfig{});
  Batch b;
  b.images = Tensor({2, 3, 64, 64});
  b.clinical = Tensor({2, 8});
  b.mfcc = Tensor({2, 12});
  EXPECT_THROW(m.forward(b, {}), Error);
  b.mfcc = Tensor({2, 13});
  EXPECT_EQ(m.forward(b, {}).shape(), (nn::Shape{2, 3}));
}

TEST(Model, ResNet50TopologyMatchesStandardParameterCount) {
  ModelConfig c;
  c.backbone.kind = BackboneKind::resnet50;
  c.image_size = 32;
  Model m = Model::build_ablation_resnet_only(c);
  // Backbone + pooling BNs + dense(4096 -> 64) + head(64 -> 3).
  const nn::Index extra = 2 * 2048 * 2 + (4096 * 64 + 64) + (64 * 3 + 3);
  EXPECT_EQ(m.parameter_count() - extra, 23508032);
}

TEST(Model, OutputsAreSimplexAndInferIsPure) {
  Model m = Model::build(tiny_config());
  Rng rng(1);
  std::vector<FeatureTriple> ts;
  for (int i = 0; i < 5; ++i) ts.push_back(random_triple(16, rng));
  const Tensor p = m.predict(pointers(ts));
  for (nn::Index r = 0; r < 5; ++r) EXPECT_NEAR(p.matrix().row(r).sum(), 1.0, 1e-9);
  const auto a = forward_triple(m, ts[0]);
  const auto b = forward_triple(m, ts[0]);
  EXPECT_EQ(a, b);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(a[static_cast<std::size_t>(k)], p.matrix()(0, k));
}

TEST(Model, ZeroedFusionColumnsMakeOutputImageOnly) {
  Model m = Model::build(tiny_config());
  const auto w = m.branch_widths();
  m.fusion_entry().weight().matrix().rightCols(w[1] + w[2]).setZero();
  Rng rng(2);
  FeatureTriple t = random_triple(16, rng);
  const auto base = forward_triple(m, t);
  for (auto& bit : t.clinical.bits) bit = !bit;
  for (int i = 0; i < kNumMfcc; ++i) t.mfcc[i] += 1e-5;
  EXPECT_EQ(forward_triple(m, t), base);
}

TEST(Model, AblationIgnoresClinicalAndMfccAndIsSmaller) {
  Model full = Model::build(ModelConfig{});
  Model ab = Model::build_ablation_resnet_only(ModelConfig{});
  EXPECT_LT(ab.parameter_count(), full.parameter_count());
  Model tiny = Model::build_ablation_resnet_only(tiny_config());
  Rng rng(3);
  FeatureTriple t = random_triple(16, rng);
  const auto base = forward_triple(tiny, t);
  t.clinical.bits.assign(8, 1);
  t.mfcc.setConstant(42.0);
  EXPECT_EQ(forward_triple(tiny, t), base);
}

TEST(Model, FullGraphGradientCheck) {
  ModelConfig c = tiny_config();
  Model m = Model::build(c);
  Rng rng(4);
  std::vector<FeatureTriple> ts;
  for (int i = 0; i < 6; ++i) ts.push_back(random_triple(16, rng, i % 3));
  m.fit_mfcc_scaling(pointers(ts));
  const Batch b = make_batch(pointers(ts), 16, 8);
  const nn::Pass pass{nn::Mode::train, 11};
  auto r = nn::softmax_cross_entropy(m.forward(b, pass), b.labels);
  m.backward(r.grad);
  std::vector<oracle::GradProbe> probes;
  for (const auto& p : m.params()) probes.push_back({p.name, p.value, *p.grad});
  // 50 random parameter entries across the whole graph.
  std::vector<oracle::GradProbe> picked;
  std::uniform_int_distribution<std::size_t> pick(0, probes.size() - 1);
  for (int i = 0; i < 50; ++i) picked.push_back(probes[pick(rng)]);
  auto loss = [&] { return nn::softmax_cross_entropy(m.forward(b, pass), b.labels).loss; };
  auto res = oracle::finite_difference_check(loss, picked, 1, rng, 1e-5, 1e-6, 1e-3);
  EXPECT_EQ(res.checked, 50);
  EXPECT_LT(res.max_rel_error, 1e-3) << res.worst;
}

TEST(Model, CheckpointRoundTripPreservesPredictions) {
  Model m = Model::build(tiny_config());
  Rng rng(5);
  std::vector<FeatureTriple> ts;
  for (int i = 0; i < 4; ++i) ts.push_back(random_triple(16, rng, i % 3));
  m.fit_mfcc_scaling(pointers(ts));
  const Batch b = make_batch(pointers(ts), 16, 8);
  m.forward(b, {nn::Mode::train, 0});
  const auto bytes = m.to_checkpoint().serialize();
  Model back = Model::from_checkpoint(nn::Checkpoint::deserialize(bytes));
  EXPECT_EQ(back.to_checkpoint().serialize(), bytes);
  EXPECT_EQ(back.predict(pointers(ts)).data(), m.predict(pointers(ts)).data());
}

TEST(Model, InferIsInvariantToBatchComposition) {
  Model m = Model::build(tiny_config());
  Rng rng(6);
  std::vector<FeatureTriple> ts;
  for (int i = 0; i < 4; ++i) ts.push_back(random_triple(16, rng));
  const Tensor all = m.predict(pointers(ts));
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto alone = forward_triple(m, ts[i]);
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(alone[static_cast<std::size_t>(k)], all.matrix()(static_cast<nn::Index>(i), k));
    }
  }
}

TEST(PredictRecording, AggregationRules) {
  Tensor one({1, 3}, (Eigen::VectorXd(3) << 0.2, 0.3, 0.5).finished());
  auto r = predict_recording(one);
  EXPECT_DOUBLE_EQ(r.probs[2], 0.5);
  EXPECT_EQ(r.argmax, ClassLabel::covid_positive);
  Tensor same({2, 3}, (Eigen::VectorXd(6) << 0.2, 0.3, 0.5, 0.2, 0.3, 0.5).finished());
  EXPECT_NEAR(predict_recording(same).probs[1], 0.3, 1e-15);
  Tensor split({2, 3}, (Eigen::VectorXd(6) << 1, 0, 0, 0, 1, 0).finished());
  auto s = predict_recording(split);
  EXPECT_DOUBLE_EQ(s.probs[0], 0.5);
  EXPECT_DOUBLE_EQ(s.probs[1], 0.5);
  EXPECT_DOUBLE_EQ(s.probs[2], 0.0);
  try {
    predict_recording(Tensor({0, 3}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_input);
  }
}

}  // namespace
}  // namespace coughnet
