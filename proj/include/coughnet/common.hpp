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

#ifndef COUGHNET_COMMON_HPP_
#define COUGHNET_COMMON_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace coughnet {

/// Failure categories. The CLI maps them onto exit codes.
enum class ErrorKind {
  usage,
  io,
  schema,
  unsupported_format,
  corrupt_file,
  empty_input,
  degenerate,
  parameter,
  configuration,
  shape,
  protocol,
  conflict,
  not_found,
  unlabeled,
  cannot_balance,
  cannot_split,
  undefined_metric,
  numerical,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

using Rng = std::mt19937_64;

/// splitmix64 finalizer; the building block for all derived seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a sequence of tags.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t index = 0);

/// Uniform double in [0, 1) from a counter-based hash.
inline double hash_uniform(std::uint64_t seed, std::uint64_t a,
                           std::uint64_t b) {
  const std::uint64_t h = mix64(mix64(seed ^ mix64(a)) ^ b);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Lowercase hex SHA-256 of a byte range.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_file(const std::string& path);

}  // namespace coughnet

#endif  // COUGHNET_COMMON_HPP_
