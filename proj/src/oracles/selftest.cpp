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

#include "coughnet/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "coughnet/eval.hpp"
#include "coughnet/features.hpp"
#include "coughnet/model.hpp"
#include "coughnet/nn/layers.hpp"
#include "coughnet/nn/loss.hpp"
#include "coughnet/oracles.hpp"

namespace coughnet::selftest {

namespace {

using namespace coughnet::nn;

constexpr double kLayerTol = 1e-4;
constexpr double kGraphTol = 1e-3;
constexpr double kMfccTol = 1e-8;
constexpr double kAucTol = 1e-9;

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> d(0.0, scale);
  for (Index i = 0; i < t.size(); ++i) t[i] = d(rng);
  return t;
}

CheckResult layer_result(const std::string& name, const oracle::GradCheckResult& r) {
  CheckResult c{"grad " + name, r.max_rel_error < kLayerTol, ""};
  c.detail = fmt("max rel error %.3g (limit %.0e)", r.max_rel_error, kLayerTol);
  if (!c.pass) c.detail += " at " + r.worst;
  return c;
}

Sequential basic_block(Index in, Index out, Index stride, Rng& rng, Sequential& shortcut) {
  Sequential main;
  main.emplace<Conv2d>(in, out, Conv2dOptions{3, stride, 1, false}, rng);
  main.emplace<BatchNorm>(out);
  main.emplace<Relu>();
  main.emplace<Conv2d>(out, out, Conv2dOptions{3, 1, 1, false}, rng);
  main.emplace<BatchNorm>(out);
  if (stride != 1 || in != out) {
    shortcut.emplace<Conv2d>(in, out, Conv2dOptions{1, stride, 0, false}, rng);
    shortcut.emplace<BatchNorm>(out);
  }
  return main;
}

FeatureTriple random_triple(int image, int clinical, Rng& rng, int label) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FeatureTriple t;
  t.record_id = "selftest" + std::to_string(label);
  t.label = class_from_index(label);
  t.heatmap.height = t.heatmap.width = image;
  t.heatmap.pixels.resize(static_cast<std::size_t>(image * image * 3));
  for (auto& p : t.heatmap.pixels) p = static_cast<float>(u(rng));
  for (int i = 0; i < kNumMfcc; ++i) t.mfcc[i] = 10.0 * (u(rng) - 0.5);
  t.clinical.bits.resize(static_cast<std::size_t>(clinical));
  for (auto&& b : t.clinical.bits) b = u(rng) < 0.5;
  return t;
}

CheckResult full_graph_check(std::uint64_t seed) {
  ModelConfig c;
  c.image_size = 16;
  c.backbone.widths = {4, 8, 16};
  c.backbone.blocks_per_stage = 1;
  c.branch1_width = 16;
  c.branch3_stacks = {std::vector<int>{8, 4}, std::vector<int>{8, 4}};
  c.branch3_width = 8;
  c.fusion_widths = {16, 8};
  c.seed = seed;
  Model m = Model::build(c);
  Rng rng(derive_seed(seed, "selftest_graph", 0));
  std::vector<FeatureTriple> ts;
  for (int i = 0; i < 6; ++i) ts.push_back(random_triple(16, c.clinical_size, rng, i % 3));
  std::vector<const FeatureTriple*> ptrs;
  for (const auto& t : ts) ptrs.push_back(&t);
  m.fit_mfcc_scaling(ptrs);
  const Batch b = make_batch(ptrs, 16, c.clinical_size);
  const Pass pass{Mode::train, 11};
  auto r = softmax_cross_entropy(m.forward(b, pass), b.labels);
  m.backward(r.grad);
  std::vector<oracle::GradProbe> probes;
  for (const auto& p : m.params()) probes.push_back({p.name, p.value, *p.grad});
  std::vector<oracle::GradProbe> picked;
  std::uniform_int_distribution<std::size_t> pick(0, probes.size() - 1);
  for (int i = 0; i < 50; ++i) picked.push_back(probes[pick(rng)]);
  auto loss = [&] { return softmax_cross_entropy(m.forward(b, pass), b.labels).loss; };
  auto res = oracle::finite_difference_check(loss, picked, 1, rng, 1e-5, 1e-6, 1e-3);
  CheckResult out{"grad full graph", res.max_rel_error < kGraphTol && res.checked == 50, ""};
  out.detail = fmt("max rel error %.3g over 50 parameters (limit %.0e)", res.max_rel_error, kGraphTol);
  if (!out.pass) out.detail += " at " + res.worst;
  return out;
}

}  // namespace

std::vector<CheckResult> gradient_checks(std::uint64_t seed) {
  std::vector<CheckResult> out;
  Rng rng(derive_seed(seed, "selftest_layers", 0));
  const Pass train{Mode::train, 3};
  {
    Dense d(5, 4, rng);
    out.push_back(layer_result("dense", oracle::check_layer(d, random_tensor({3, 5}, rng), train, rng)));
  }
  {
    Conv2d c(2, 3, {3, 2, 1, true}, rng);
    out.push_back(
        layer_result("conv2d", oracle::check_layer(c, random_tensor({2, 2, 5, 6}, rng), train, rng)));
  }
  {
    BatchNorm bn(4);
    out.push_back(layer_result("batchnorm [N, F]",
                               oracle::check_layer(bn, random_tensor({6, 4}, rng), train, rng)));
    BatchNorm bn4(3);
    out.push_back(layer_result("batchnorm [N, C, H, W]",
                               oracle::check_layer(bn4, random_tensor({2, 3, 3, 4}, rng), train, rng)));
  }
  {
    Dropout d(0.3, 9);
    out.push_back(layer_result("dropout", oracle::check_layer(d, random_tensor({4, 6}, rng), train, rng)));
  }
  {
    Relu r;
    out.push_back(layer_result("relu", oracle::check_layer(r, random_tensor({4, 7}, rng), train, rng,
                                                           0, 1e-5, 1e-4)));
  }
  {
    GlobalAvgPool g;
    out.push_back(layer_result("gap", oracle::check_layer(g, random_tensor({2, 3, 4, 4}, rng), train, rng)));
    GlobalMaxPool m;
    out.push_back(layer_result("gmp", oracle::check_layer(m, random_tensor({2, 3, 4, 4}, rng), train, rng,
                                                          0, 1e-5, 1e-4)));
    MaxPool2d p(3, 2, 1);
    out.push_back(layer_result(
        "maxpool", oracle::check_layer(p, random_tensor({2, 3, 5, 5}, rng), train, rng, 0, 1e-5, 1e-4)));
  }
  {
    Softmax s;
    out.push_back(layer_result("softmax", oracle::check_layer(s, random_tensor({3, 3}, rng), train, rng)));
  }
  {
    Standardize st(4);
    st.fit(random_tensor({50, 4}, rng, 5.0));
    out.push_back(
        layer_result("standardize", oracle::check_layer(st, random_tensor({3, 4}, rng), train, rng)));
  }
  {
    Sequential sc;
    Sequential main = basic_block(2, 3, 2, rng, sc);
    ResidualBlock block(std::move(main), std::move(sc));
    out.push_back(layer_result("residual block", oracle::check_layer(block, random_tensor({3, 2, 6, 6}, rng),
                                                                     train, rng, 0, 1e-5, 1e-4)));
  }
  {
    std::vector<Sequential> branches(2);
    branches[0].emplace<GlobalAvgPool>();
    branches[0].emplace<BatchNorm>(3);
    branches[0].emplace<Dropout>(0.3, 5);
    branches[1].emplace<GlobalMaxPool>();
    branches[1].emplace<BatchNorm>(3);
    branches[1].emplace<Dropout>(0.3, 6);
    ParallelConcat pc(std::move(branches));
    out.push_back(layer_result("concat", oracle::check_layer(pc, random_tensor({4, 3, 3, 3}, rng), train,
                                                             rng, 0, 1e-5, 1e-4)));
  }
  {
    Sequential s;
    s.emplace<Dense>(6, 5, rng);
    s.emplace<BatchNorm>(5);
    s.emplace<Relu>();
    s.emplace<Dense>(5, 3, rng);
    out.push_back(layer_result("sequential", oracle::check_layer(s, random_tensor({4, 6}, rng), train, rng,
                                                                 0, 1e-5, 1e-4)));
  }
  out.push_back(full_graph_check(seed));
  return out;
}

CheckResult mfcc_oracle_check(std::uint64_t seed, int signals) {
  FeatureConfig fc;
  double worst = 0.0;
  for (int s = 0; s < signals; ++s) {
    Rng rng(derive_seed(seed, "selftest_mfcc", static_cast<std::uint64_t>(s)));
    std::uniform_int_distribution<int> len(3000, 6000);
    std::normal_distribution<double> d(0.0, 0.2);
    Signal sig;
    sig.sample_rate = 22050;
    sig.samples.resize(len(rng));
    for (Eigen::Index i = 0; i < sig.samples.size(); ++i) sig.samples[i] = d(rng);
    const MfccVector got = mfcc(mel_spectrogram(sig, fc));
    const auto want = oracle::naive_mfcc(sig.samples, sig.sample_rate, fc.n_fft, fc.hop, fc.n_mels,
                                         fc.fmin, sig.sample_rate / 2.0, fc.power_floor);
    worst = std::max(worst, (got - want).cwiseAbs().maxCoeff());
  }
  CheckResult c{"mfcc oracle", worst < kMfccTol, ""};
  c.detail = fmt("max abs diff %.3g over %.0f signals", worst, signals);
  return c;
}

std::vector<CheckResult> auc_oracle_checks(std::uint64_t seed, int instances) {
  std::vector<CheckResult> out;
  Rng rng(derive_seed(seed, "selftest_auc", 0));
  double worst = 0.0;
  for (int it = 0; it < instances; ++it) {
    std::uniform_int_distribution<int> size(2, 50);
    const int n = size(rng);
    // Few distinct levels so ties are common.
    std::uniform_int_distribution<int> level(0, 1 + it % 12);
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::vector<bool> pos(static_cast<std::size_t>(n));
    std::vector<double> p, q;
    for (int i = 0; i < n; ++i) {
      scores[i] = level(rng) / 7.0;
      pos[i] = i == 0 ? true : i == 1 ? false : (rng() & 1) != 0;
      (pos[i] ? p : q).push_back(scores[i]);
    }
    worst = std::max(worst, std::abs(roc_curve(scores, pos).auc - oracle::pair_count_auc(p, q)));
  }
  CheckResult a{"auc oracle", worst < kAucTol, ""};
  a.detail = fmt("max abs diff %.3g over %.0f instances", worst, instances);
  out.push_back(a);

  double micro_worst = 0.0;
  for (int it = 0; it < 200; ++it) {
    std::uniform_int_distribution<int> size(3, 40);
    const int n = size(rng);
    std::vector<ScoredExample> ex(static_cast<std::size_t>(n));
    Eigen::MatrixXd probs(n, kNumClasses);
    std::vector<int> labels(static_cast<std::size_t>(n));
    std::uniform_int_distribution<int> level(0, 10);
    for (int i = 0; i < n; ++i) {
      labels[i] = i < kNumClasses ? i : static_cast<int>(rng() % kNumClasses);
      double sum = 0.0;
      for (int k = 0; k < kNumClasses; ++k) sum += probs(i, k) = 1.0 + level(rng);
      for (int k = 0; k < kNumClasses; ++k) {
        probs(i, k) /= sum;
        ex[i].probs[static_cast<std::size_t>(k)] = probs(i, k);
      }
      ex[i].true_label = class_from_index(labels[i]);
    }
    micro_worst = std::max(micro_worst,
                           std::abs(micro_average_auc(ex) - oracle::pooled_pair_count_auc(probs, labels)));
  }
  CheckResult m{"micro auc oracle", micro_worst < kAucTol, ""};
  m.detail = fmt("max abs diff %.3g over %.0f instances", micro_worst, 200);
  out.push_back(m);
  return out;
}

std::vector<CheckResult> run_all(std::uint64_t seed) {
  std::vector<CheckResult> out = gradient_checks(seed);
  out.push_back(mfcc_oracle_check(seed));
  for (auto& c : auc_oracle_checks(seed)) out.push_back(std::move(c));
  return out;
}

}  // namespace coughnet::selftest
