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

#ifndef COUGHNET_MODEL_HPP_
#define COUGHNET_MODEL_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "coughnet/features.hpp"
#include "coughnet/nn/checkpoint.hpp"
#include "coughnet/nn/layers.hpp"

namespace coughnet {

enum class BackboneKind { small_residual, resnet50 };

struct BackboneConfig {
  BackboneKind kind = BackboneKind::small_residual;
  /// small_residual: basic blocks per stage and stage widths; the stem is a
  /// stride-2 3x3 convolution to widths[0].
  int blocks_per_stage = 2;
  std::vector<int> widths = {8, 16, 32};
  /// resnet50: bottleneck base width (64 gives the standard network).
  int base_width = 64;
};

struct ModelConfig {
  int image_size = 64;
  BackboneConfig backbone;
  int branch1_width = 64;
  int clinical_size = 8;
  std::vector<int> branch2_widths = {8, 64};
  std::array<std::vector<int>, 2> branch3_stacks = {std::vector<int>{32, 16},
                                                     std::vector<int>{32, 16}};
  int branch3_width = 32;
  std::vector<int> fusion_widths = {64, 32};
  double dropout_rate = 0.3;
  double learning_rate = 1e-3;
  std::uint64_t seed = 7;

  /// Throws Error(configuration) naming the first inconsistent edge.
  void validate() const;
  /// Canonical JSON (sorted keys, no whitespace).
  std::string to_json() const;
  /// Rejects unknown keys with Error(configuration).
  static ModelConfig from_json(const std::string& text);
  std::string digest() const;
};

std::string_view backbone_name(BackboneKind kind);
BackboneKind parse_backbone(std::string_view text);

/// Stacked network inputs; images are NCHW.
struct Batch {
  nn::Tensor images;
  nn::Tensor clinical;
  nn::Tensor mfcc;
  std::vector<int> labels;

  nn::Index size() const { return images.empty() ? 0 : images.dim(0); }
};

/// Copies triples into tensors. Throws Error(shape) when a heatmap is not
/// image_size square or the clinical vector has the wrong length.
Batch make_batch(const std::vector<const FeatureTriple*>& triples, int image_size,
                 int clinical_size);

class Model {
 public:
  enum class Variant { multi_branch, resnet_only };

  static Model build(const ModelConfig& config);
  /// Image branch followed directly by a 3-way head.
  static Model build_ablation_resnet_only(const ModelConfig& config);

  Variant variant() const { return variant_; }
  const ModelConfig& config() const { return config_; }

  nn::Tensor forward(const Batch& batch, const nn::Pass& pass);
  /// Gradient of the loss with respect to the last forward's logits.
  void backward(const nn::Tensor& logit_grad);
  /// Softmax probabilities in infer mode, [triples, 3]. Each row is
  /// independent of the others.
  nn::Tensor predict(const std::vector<const FeatureTriple*>& triples);

  std::vector<nn::ParamRef> params();
  std::vector<nn::StateRef> state();
  nn::Index parameter_count();

  /// Fits the MFCC standardizer; a no-op for the ablation variant.
  void fit_mfcc_scaling(const std::vector<const FeatureTriple*>& train);

  /// First fusion layer; its input columns are [branch1 | branch2 | branch3].
  nn::Dense& fusion_entry();
  std::array<nn::Index, 3> branch_widths() const;

  nn::Checkpoint to_checkpoint();
  static Model from_checkpoint(const nn::Checkpoint& checkpoint);
  /// sha256 of the serialized checkpoint.
  std::string digest();

 private:
  Model(ModelConfig config, Variant variant);

  ModelConfig config_;
  Variant variant_;
  nn::Sequential branch1_, branch2_, branch3_, head_;
  std::vector<nn::Index> widths_;
};

/// Probability mean over chunks of one recording.
struct RecordingPrediction {
  std::array<double, kNumClasses> probs{};
  ClassLabel argmax = ClassLabel::asymptomatic_negative;
  double positive_score = 0.0;
};

/// Renormalized arithmetic mean of [chunks, 3] probabilities.
/// Throws Error(empty_input) for zero chunks.
RecordingPrediction predict_recording(const nn::Tensor& chunk_probs);

/// Single triple in infer mode; returns the probability row.
std::array<double, kNumClasses> forward_triple(Model& model, const FeatureTriple& triple);

}  // namespace coughnet

#endif  // COUGHNET_MODEL_HPP_
