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

#include "coughnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "coughnet/nn/loss.hpp"
#include "json.hpp"
#include "json_util.hpp"

namespace coughnet {

using nn::Index;
using nn::Tensor;
using json = nlohmann::json;
using jsonutil::check_keys;
using jsonutil::read_if;

std::string_view backbone_name(BackboneKind kind) {
  return kind == BackboneKind::resnet50 ? "resnet50" : "small_residual";
}

BackboneKind parse_backbone(std::string_view text) {
  if (text == "small_residual") return BackboneKind::small_residual;
  if (text == "resnet50") return BackboneKind::resnet50;
  throw Error(ErrorKind::configuration, "unknown backbone '" + std::string(text) + "'");
}

namespace {

void require_widths(const std::vector<int>& widths, const std::string& edge, bool allow_empty) {
  if (widths.empty() && !allow_empty) {
    throw Error(ErrorKind::configuration, edge + " needs at least one layer");
  }
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (widths[i] <= 0) {
      throw Error(ErrorKind::configuration, edge + "[" + std::to_string(i) +
                                                "] width must be positive, got " +
                                                std::to_string(widths[i]));
    }
  }
}

void require_positive(int value, const std::string& edge) {
  if (value <= 0) {
    throw Error(ErrorKind::configuration,
                edge + " must be positive, got " + std::to_string(value));
  }
}

}  // namespace

void ModelConfig::validate() const {
  require_positive(image_size, "image_size");
  require_positive(clinical_size, "clinical_size");
  require_positive(branch1_width, "branch1.dense");
  require_positive(branch3_width, "branch3.dense");
  if (backbone.kind == BackboneKind::small_residual) {
    require_widths(backbone.widths, "backbone.widths", false);
    require_positive(backbone.blocks_per_stage, "backbone.blocks_per_stage");
    // Stem halves the image, every later stage halves again.
    const int reduction = 1 << backbone.widths.size();
    if (image_size < reduction) {
      throw Error(ErrorKind::configuration,
                  "image_size " + std::to_string(image_size) + " vanishes after " +
                      std::to_string(backbone.widths.size()) + " backbone stages");
    }
  } else {
    require_positive(backbone.base_width, "backbone.base_width");
    if (image_size < 32) {
      throw Error(ErrorKind::configuration, "resnet50 backbone needs image_size >= 32");
    }
  }
  require_widths(branch2_widths, "branch2.widths", false);
  require_widths(branch3_stacks[0], "branch3.stack0", false);
  require_widths(branch3_stacks[1], "branch3.stack1", false);
  require_widths(fusion_widths, "fusion.widths", true);
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw Error(ErrorKind::configuration, "dropout_rate must be in [0, 1)");
  }
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorKind::configuration, "learning_rate must be finite and non-negative");
  }
}

std::string ModelConfig::to_json() const {
  json j;
  j["image_size"] = image_size;
  j["backbone"] = {{"kind", std::string(backbone_name(backbone.kind))},
                   {"blocks_per_stage", backbone.blocks_per_stage},
                   {"widths", backbone.widths},
                   {"base_width", backbone.base_width}};
  j["branch1_width"] = branch1_width;
  j["clinical_size"] = clinical_size;
  j["branch2_widths"] = branch2_widths;
  j["branch3_stacks"] = {branch3_stacks[0], branch3_stacks[1]};
  j["branch3_width"] = branch3_width;
  j["fusion_widths"] = fusion_widths;
  j["dropout_rate"] = dropout_rate;
  j["learning_rate"] = learning_rate;
  j["seed"] = seed;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::configuration, std::string("model config: ") + e.what());
  }
  check_keys(j,
             {"image_size", "backbone", "branch1_width", "clinical_size", "branch2_widths",
              "branch3_stacks", "branch3_width", "fusion_widths", "dropout_rate",
              "learning_rate", "seed"},
             "model");
  ModelConfig c;
  read_if(j, "image_size", c.image_size);
  if (j.contains("backbone")) {
    const json& b = j["backbone"];
    check_keys(b, {"kind", "blocks_per_stage", "widths", "base_width"}, "model.backbone");
    std::string kind(backbone_name(c.backbone.kind));
    read_if(b, "kind", kind);
    c.backbone.kind = parse_backbone(kind);
    read_if(b, "blocks_per_stage", c.backbone.blocks_per_stage);
    read_if(b, "widths", c.backbone.widths);
    read_if(b, "base_width", c.backbone.base_width);
  }
  read_if(j, "branch1_width", c.branch1_width);
  read_if(j, "clinical_size", c.clinical_size);
  read_if(j, "branch2_widths", c.branch2_widths);
  if (j.contains("branch3_stacks")) {
    std::vector<std::vector<int>> stacks;
    read_if(j, "branch3_stacks", stacks);
    if (stacks.size() != 2) {
      throw Error(ErrorKind::configuration, "branch3_stacks needs exactly two stacks");
    }
    c.branch3_stacks = {stacks[0], stacks[1]};
  }
  read_if(j, "branch3_width", c.branch3_width);
  read_if(j, "fusion_widths", c.fusion_widths);
  read_if(j, "dropout_rate", c.dropout_rate);
  read_if(j, "learning_rate", c.learning_rate);
  read_if(j, "seed", c.seed);
  c.validate();
  return c;
}

std::string ModelConfig::digest() const { return sha256_hex(to_json()); }

// ---------------------------------------------------------------------------

namespace {

class Builder {
 public:
  explicit Builder(const ModelConfig& c)
      : config(c), rng(derive_seed(c.seed, "init")), dropout_seed(derive_seed(c.seed, "dropout")) {}

  void bn_dropout(nn::Sequential& s, Index width) {
    s.emplace<nn::BatchNorm>(width);
    s.emplace<nn::Dropout>(config.dropout_rate, mix64(dropout_seed + dropout_count++));
  }

  // Dense -> ReLU -> BN -> Dropout per width.
  Index dense_stack(nn::Sequential& s, Index in, const std::vector<int>& widths) {
    for (int w : widths) {
      s.emplace<nn::Dense>(in, w, rng);
      s.emplace<nn::Relu>();
      bn_dropout(s, w);
      in = w;
    }
    return in;
  }

  nn::Conv2d& conv(nn::Sequential& s, Index in, Index out, Index k, Index stride, Index pad) {
    return s.emplace<nn::Conv2d>(in, out, nn::Conv2dOptions{k, stride, pad, false}, rng);
  }

  void basic_block(nn::Sequential& s, Index in, Index out, Index stride) {
    nn::Sequential main, shortcut;
    conv(main, in, out, 3, stride, 1);
    main.emplace<nn::BatchNorm>(out);
    main.emplace<nn::Relu>();
    conv(main, out, out, 3, 1, 1);
    main.emplace<nn::BatchNorm>(out);
    if (stride != 1 || in != out) {
      conv(shortcut, in, out, 1, stride, 0);
      shortcut.emplace<nn::BatchNorm>(out);
    }
    s.emplace<nn::ResidualBlock>(std::move(main), std::move(shortcut));
  }

  void bottleneck(nn::Sequential& s, Index in, Index mid, Index stride) {
    const Index out = mid * 4;
    nn::Sequential main, shortcut;
    conv(main, in, mid, 1, 1, 0);
    main.emplace<nn::BatchNorm>(mid);
    main.emplace<nn::Relu>();
    conv(main, mid, mid, 3, stride, 1);
    main.emplace<nn::BatchNorm>(mid);
    main.emplace<nn::Relu>();
    conv(main, mid, out, 1, 1, 0);
    main.emplace<nn::BatchNorm>(out);
    if (stride != 1 || in != out) {
      conv(shortcut, in, out, 1, stride, 0);
      shortcut.emplace<nn::BatchNorm>(out);
    }
    s.emplace<nn::ResidualBlock>(std::move(main), std::move(shortcut));
  }

  // Returns the output channel count.
  Index backbone(nn::Sequential& s) {
    const BackboneConfig& b = config.backbone;
    if (b.kind == BackboneKind::resnet50) {
      const Index base = b.base_width;
      conv(s, 3, base, 7, 2, 3);
      s.emplace<nn::BatchNorm>(base);
      s.emplace<nn::Relu>();
      s.emplace<nn::MaxPool2d>(3, 2, 1);
      const int blocks[] = {3, 4, 6, 3};
      Index in = base;
      for (int stage = 0; stage < 4; ++stage) {
        const Index mid = base << stage;
        for (int i = 0; i < blocks[stage]; ++i) {
          bottleneck(s, in, mid, (stage > 0 && i == 0) ? 2 : 1);
          in = mid * 4;
        }
      }
      return in;
    }
    Index in = b.widths.front();
    conv(s, 3, in, 3, 2, 1);
    s.emplace<nn::BatchNorm>(in);
    s.emplace<nn::Relu>();
    for (std::size_t stage = 0; stage < b.widths.size(); ++stage) {
      const Index out = b.widths[stage];
      for (int i = 0; i < b.blocks_per_stage; ++i) {
        basic_block(s, in, out, (stage > 0 && i == 0) ? 2 : 1);
        in = out;
      }
    }
    return in;
  }

  void image_branch(nn::Sequential& s) {
    const Index channels = backbone(s);
    std::vector<nn::Sequential> pools(2);
    pools[0].emplace<nn::GlobalAvgPool>();
    bn_dropout(pools[0], channels);
    pools[1].emplace<nn::GlobalMaxPool>();
    bn_dropout(pools[1], channels);
    s.emplace<nn::ParallelConcat>(std::move(pools));
    s.emplace<nn::Dense>(2 * channels, config.branch1_width, rng);
    s.emplace<nn::Relu>();
  }

  const ModelConfig& config;
  Rng rng;
  std::uint64_t dropout_seed;
  std::uint64_t dropout_count = 0;
};

}  // namespace

Model::Model(ModelConfig config, Variant variant)
    : config_(std::move(config)), variant_(variant) {}

Model Model::build(const ModelConfig& config) {
  config.validate();
  Model m(config, Variant::multi_branch);
  Builder b(m.config_);
  b.image_branch(m.branch1_);
  const Index w2 = b.dense_stack(m.branch2_, config.clinical_size, config.branch2_widths);

  m.branch3_.emplace<nn::Standardize>(kNumMfcc);
  std::vector<nn::Sequential> stacks(2);
  Index tops = 0;
  for (int i = 0; i < 2; ++i) tops += b.dense_stack(stacks[static_cast<std::size_t>(i)], kNumMfcc, config.branch3_stacks[static_cast<std::size_t>(i)]);
  m.branch3_.emplace<nn::ParallelConcat>(std::move(stacks));
  m.branch3_.emplace<nn::Dense>(tops, config.branch3_width, b.rng);
  m.branch3_.emplace<nn::Relu>();

  m.widths_ = {config.branch1_width, w2, config.branch3_width};
  const Index fused = b.dense_stack(m.head_, m.widths_[0] + m.widths_[1] + m.widths_[2],
                                    config.fusion_widths);
  m.head_.emplace<nn::Dense>(fused, kNumClasses, b.rng);
  return m;
}

Model Model::build_ablation_resnet_only(const ModelConfig& config) {
  config.validate();
  Model m(config, Variant::resnet_only);
  Builder b(m.config_);
  b.image_branch(m.branch1_);
  m.widths_ = {config.branch1_width};
  m.head_.emplace<nn::Dense>(config.branch1_width, kNumClasses, b.rng);
  return m;
}

Tensor Model::forward(const Batch& batch, const nn::Pass& pass) {
  Tensor b1 = branch1_.forward(batch.images, pass);
  if (variant_ == Variant::resnet_only) return head_.forward(b1, pass);
  Tensor b2 = branch2_.forward(batch.clinical, pass);
  Tensor b3 = branch3_.forward(batch.mfcc, pass);
  return head_.forward(nn::concat_columns({&b1, &b2, &b3}), pass);
}

void Model::backward(const Tensor& logit_grad) {
  Tensor g = head_.backward(logit_grad);
  if (variant_ == Variant::resnet_only) {
    branch1_.backward(g);
    return;
  }
  std::vector<Tensor> parts = nn::split_columns(g, widths_);
  branch1_.backward(parts[0]);
  branch2_.backward(parts[1]);
  branch3_.backward(parts[2]);
}

Tensor Model::predict(const std::vector<const FeatureTriple*>& triples) {
  // One triple per forward: GEMM blocking depends on the batch size, so
  // batching would make a row's result depend on its neighbours.
  Tensor out({static_cast<Index>(triples.size()), kNumClasses});
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const Batch batch = make_batch({triples[i]}, config_.image_size, config_.clinical_size);
    out.matrix().row(static_cast<Index>(i)) =
        nn::softmax(forward(batch, {nn::Mode::infer, 0})).matrix();
  }
  if (!out.all_finite()) throw Error(ErrorKind::numerical, "non-finite probabilities");
  return out;
}

std::vector<nn::ParamRef> Model::params() {
  std::vector<nn::ParamRef> out;
  branch1_.collect_params("branch1", out);
  branch2_.collect_params("branch2", out);
  branch3_.collect_params("branch3", out);
  head_.collect_params("head", out);
  return out;
}

std::vector<nn::StateRef> Model::state() {
  std::vector<nn::StateRef> out;
  branch1_.collect_state("branch1", out);
  branch2_.collect_state("branch2", out);
  branch3_.collect_state("branch3", out);
  head_.collect_state("head", out);
  return out;
}

Index Model::parameter_count() {
  Index n = 0;
  for (const auto& p : params()) n += p.value->size();
  return n;
}

void Model::fit_mfcc_scaling(const std::vector<const FeatureTriple*>& train) {
  if (variant_ == Variant::resnet_only) return;
  if (train.empty()) throw Error(ErrorKind::empty_input, "no training triples for MFCC scaling");
  Tensor sample({static_cast<Index>(train.size()), kNumMfcc});
  for (std::size_t i = 0; i < train.size(); ++i) {
    sample.matrix().row(static_cast<Index>(i)) = train[i]->mfcc.transpose();
  }
  static_cast<nn::Standardize&>(branch3_.at(0)).fit(sample);
}

nn::Dense& Model::fusion_entry() { return static_cast<nn::Dense&>(head_.at(0)); }

std::array<Index, 3> Model::branch_widths() const {
  if (variant_ == Variant::resnet_only) return {widths_[0], 0, 0};
  return {widths_[0], widths_[1], widths_[2]};
}

nn::Checkpoint Model::to_checkpoint() {
  json wrapper;
  wrapper["variant"] = variant_ == Variant::multi_branch ? "multi_branch" : "resnet_only";
  wrapper["model"] = json::parse(config_.to_json());
  return {config_.digest(), wrapper.dump(), nn::capture(params(), state())};
}

Model Model::from_checkpoint(const nn::Checkpoint& checkpoint) {
  json wrapper;
  try {
    wrapper = json::parse(checkpoint.config_json);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::corrupt_file, std::string("checkpoint config: ") + e.what());
  }
  if (!wrapper.contains("variant") || !wrapper.contains("model")) {
    throw Error(ErrorKind::corrupt_file, "checkpoint config lacks variant or model");
  }
  const ModelConfig config = ModelConfig::from_json(wrapper["model"].dump());
  if (config.digest() != checkpoint.config_digest) {
    throw Error(ErrorKind::corrupt_file, "checkpoint config digest mismatch");
  }
  const std::string variant = wrapper["variant"].get<std::string>();
  Model m = variant == "resnet_only" ? build_ablation_resnet_only(config) : build(config);
  nn::restore(checkpoint.tensors, m.params(), m.state());
  return m;
}

std::string Model::digest() { return sha256_hex(to_checkpoint().serialize()); }

Batch make_batch(const std::vector<const FeatureTriple*>& triples, int image_size,
                 int clinical_size) {
  const auto n = static_cast<Index>(triples.size());
  if (n == 0) throw Error(ErrorKind::empty_input, "empty batch");
  Batch b;
  b.images = Tensor({n, 3, image_size, image_size});
  b.clinical = Tensor({n, clinical_size});
  b.mfcc = Tensor({n, kNumMfcc});
  b.labels.reserve(triples.size());
  const Index plane = static_cast<Index>(image_size) * image_size;
  for (Index i = 0; i < n; ++i) {
    const FeatureTriple& t = *triples[static_cast<std::size_t>(i)];
    if (t.heatmap.height != image_size || t.heatmap.width != image_size) {
      throw Error(ErrorKind::shape, "heatmap of " + t.key() + " is " +
                                        std::to_string(t.heatmap.height) + "x" +
                                        std::to_string(t.heatmap.width) + ", model expects " +
                                        std::to_string(image_size) + "x" +
                                        std::to_string(image_size));
    }
    if (static_cast<int>(t.clinical.bits.size()) != clinical_size) {
      throw Error(ErrorKind::shape, "clinical vector of " + t.key() + " has " +
                                        std::to_string(t.clinical.bits.size()) +
                                        " bits, model expects " + std::to_string(clinical_size));
    }
    double* img = b.images.ptr() + i * 3 * plane;
    for (Index p = 0; p < plane; ++p) {
      for (Index c = 0; c < 3; ++c) img[c * plane + p] = t.heatmap.pixels[p * 3 + c];
    }
    for (int k = 0; k < clinical_size; ++k) {
      b.clinical.matrix()(i, k) = t.clinical.bits[static_cast<std::size_t>(k)];
    }
    b.mfcc.matrix().row(i) = t.mfcc.transpose();
    b.labels.push_back(class_index(t.label));
  }
  return b;
}

RecordingPrediction predict_recording(const Tensor& chunk_probs) {
  if (chunk_probs.rank() != 2 || chunk_probs.dim(0) == 0) {
    throw Error(ErrorKind::empty_input, "recording has no chunk predictions");
  }
  if (chunk_probs.dim(1) != kNumClasses) {
    throw Error(ErrorKind::shape, "chunk probabilities must have 3 columns, got " +
                                      nn::to_string(chunk_probs.shape()));
  }
  Eigen::RowVectorXd mean = chunk_probs.matrix().colwise().mean();
  mean /= mean.sum();
  RecordingPrediction r;
  Index arg = 0;
  mean.maxCoeff(&arg);
  for (int k = 0; k < kNumClasses; ++k) r.probs[static_cast<std::size_t>(k)] = mean[k];
  r.argmax = class_from_index(static_cast<int>(arg));
  r.positive_score = mean[class_index(ClassLabel::covid_positive)];
  return r;
}

std::array<double, kNumClasses> forward_triple(Model& model, const FeatureTriple& triple) {
  const Tensor p = model.predict({&triple});
  return {p[0], p[1], p[2]};
}

}  // namespace coughnet
