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

#ifndef COUGHNET_SRC_JSON_UTIL_HPP_
#define COUGHNET_SRC_JSON_UTIL_HPP_

#include <set>
#include <string>

#include "coughnet/common.hpp"
#include "json.hpp"

namespace coughnet::jsonutil {

using json = nlohmann::json;

inline void check_keys(const json& j, const std::set<std::string>& allowed,
                       const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::configuration, where + " must be an object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw Error(ErrorKind::configuration, "unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::configuration, std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace coughnet::jsonutil

#endif  // COUGHNET_SRC_JSON_UTIL_HPP_
