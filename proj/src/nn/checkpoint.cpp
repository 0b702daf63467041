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

#include "coughnet/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

namespace coughnet::nn {

namespace {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

constexpr char kMagic[4] = {'C', 'N', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  template <typename T>
  void pod(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes(b) {}
  void need(std::size_t n) {
    if (pos + n > bytes.size()) throw Error(ErrorKind::corrupt_file, "checkpoint truncated");
  }
  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
    pos += n;
    return s;
  }
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

}  // namespace

std::vector<std::uint8_t> Checkpoint::serialize() const {
  Writer w;
  w.out.insert(w.out.end(), kMagic, kMagic + 4);
  w.pod(kVersion);
  w.str(config_digest);
  w.str(config_json);
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    w.str(name);
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (Index d : t.shape()) w.pod<std::uint64_t>(static_cast<std::uint64_t>(d));
    for (Index i = 0; i < t.size(); ++i) w.pod<double>(t[i]);
  }
  return std::move(w.out);
}

Checkpoint Checkpoint::deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorKind::corrupt_file, "not a checkpoint (bad magic)");
  }
  r.pos = 4;
  if (const auto v = r.pod<std::uint32_t>(); v != kVersion) {
    throw Error(ErrorKind::unsupported_format, "checkpoint version " + std::to_string(v));
  }
  Checkpoint ck;
  ck.config_digest = r.str();
  ck.config_json = r.str();
  const auto count = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const auto rank = r.pod<std::uint32_t>();
    if (rank > 8) throw Error(ErrorKind::corrupt_file, "implausible tensor rank in " + name);
    Shape shape;
    std::uint64_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const auto dim = r.pod<std::uint64_t>();
      shape.push_back(static_cast<Index>(dim));
      n *= dim;
    }
    r.need(n * sizeof(double));
    Eigen::VectorXd data(static_cast<Index>(n));
    std::memcpy(data.data(), bytes.data() + r.pos, n * sizeof(double));
    r.pos += n * sizeof(double);
    ck.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  if (r.pos != bytes.size()) throw Error(ErrorKind::corrupt_file, "trailing bytes in checkpoint");
  return ck;
}

void Checkpoint::save(const std::string& path) const {
  const auto bytes = serialize();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::io, "cannot write " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorKind::io, "short write to " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot read " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

std::vector<std::pair<std::string, Tensor>> capture(const std::vector<ParamRef>& params,
                                                    const std::vector<StateRef>& state) {
  std::vector<std::pair<std::string, Tensor>> out;
  for (const auto& p : params) out.emplace_back(p.name, *p.value);
  for (const auto& s : state) out.emplace_back(s.name, *s.value);
  return out;
}

void restore(const std::vector<std::pair<std::string, Tensor>>& tensors,
             const std::vector<ParamRef>& params, const std::vector<StateRef>& state) {
  std::map<std::string, Tensor*> targets;
  for (const auto& p : params) targets[p.name] = p.value;
  for (const auto& s : state) targets[s.name] = s.value;
  if (targets.size() != tensors.size()) {
    throw Error(ErrorKind::corrupt_file, "checkpoint holds " + std::to_string(tensors.size()) +
                                             " tensors, model expects " +
                                             std::to_string(targets.size()));
  }
  for (const auto& [name, t] : tensors) {
    auto it = targets.find(name);
    if (it == targets.end()) throw Error(ErrorKind::corrupt_file, "unexpected tensor " + name);
    if (it->second->shape() != t.shape()) {
      throw Error(ErrorKind::corrupt_file, "tensor " + name + " has shape " +
                                               to_string(t.shape()) + ", model expects " +
                                               to_string(it->second->shape()));
    }
    *it->second = t;
  }
}

}  // namespace coughnet::nn
