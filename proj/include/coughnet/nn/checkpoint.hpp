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

#ifndef COUGHNET_NN_CHECKPOINT_HPP_
#define COUGHNET_NN_CHECKPOINT_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coughnet/nn/layers.hpp"

namespace coughnet::nn {

/// Named tensors plus the model configuration that produced them. Layout is
/// in docs/FORMATS.md; all numbers are little-endian.
struct Checkpoint {
  std::string config_digest;
  std::string config_json;
  std::vector<std::pair<std::string, Tensor>> tensors;

  std::vector<std::uint8_t> serialize() const;
  static Checkpoint deserialize(std::span<const std::uint8_t> bytes);

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

/// Snapshot of parameters followed by state tensors.
std::vector<std::pair<std::string, Tensor>> capture(const std::vector<ParamRef>& params,
                                                    const std::vector<StateRef>& state);

/// Copies tensors back by name. Throws Error(corrupt_file) on a missing,
/// extra or wrongly shaped tensor.
void restore(const std::vector<std::pair<std::string, Tensor>>& tensors,
             const std::vector<ParamRef>& params, const std::vector<StateRef>& state);

}  // namespace coughnet::nn

#endif  // COUGHNET_NN_CHECKPOINT_HPP_
