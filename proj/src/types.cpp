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

#include "coughnet/types.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "coughnet/common.hpp"

namespace coughnet {
namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

ClassLabel class_from_index(int index) {
  if (index < 0 || index >= kNumClasses) {
    throw Error(ErrorKind::parameter,
                "class index out of range: " + std::to_string(index));
  }
  return static_cast<ClassLabel>(index);
}

std::string_view class_name(ClassLabel label) {
  switch (label) {
    case ClassLabel::asymptomatic_negative: return "class1";
    case ClassLabel::symptomatic_negative: return "class2";
    case ClassLabel::covid_positive: return "class3";
  }
  return "class?";
}

ClassLabel parse_class_name(std::string_view name) {
  for (ClassLabel c : kAllClasses) {
    if (class_name(c) == name) return c;
  }
  throw Error(ErrorKind::schema, "unknown class '" + std::string(name) + "'");
}

std::string_view status_name(Status status) {
  switch (status) {
    case Status::covid_positive: return "covid_positive";
    case Status::healthy: return "healthy";
    case Status::symptomatic: return "symptomatic";
    case Status::unknown: return "unknown";
  }
  return "unknown";
}

Status parse_status(std::string_view text) {
  const std::string s = lower(text);
  if (s == "covid-19" || s == "covid_positive" || s == "covid" ||
      s == "positive") {
    return Status::covid_positive;
  }
  if (s == "healthy" || s == "negative") return Status::healthy;
  if (s == "symptomatic") return Status::symptomatic;
  return Status::unknown;
}

std::string_view gender_name(Gender gender) {
  switch (gender) {
    case Gender::male: return "male";
    case Gender::female: return "female";
    case Gender::other: return "other";
  }
  return "other";
}

std::optional<Gender> parse_gender(std::string_view text) {
  const std::string s = lower(text);
  if (s.empty()) return std::nullopt;
  if (s == "male" || s == "m") return Gender::male;
  if (s == "female" || s == "f") return Gender::female;
  return Gender::other;
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view text) {
  for (Split s : kAllSplits) {
    if (split_name(s) == text) return s;
  }
  throw Error(ErrorKind::schema, "unknown split '" + std::string(text) + "'");
}

std::string_view augment_kind_name(AugmentKind kind) {
  switch (kind) {
    case AugmentKind::gaussian_noise: return "gaussian_noise";
    case AugmentKind::pitch_shift: return "pitch_shift";
    case AugmentKind::time_shift: return "time_shift";
    case AugmentKind::time_stretch: return "time_stretch";
  }
  return "gaussian_noise";
}

AugmentKind parse_augment_kind(std::string_view text) {
  for (AugmentKind k : {AugmentKind::gaussian_noise, AugmentKind::pitch_shift,
                        AugmentKind::time_shift, AugmentKind::time_stretch}) {
    if (augment_kind_name(k) == text) return k;
  }
  throw Error(ErrorKind::schema,
              "unknown augmentation '" + std::string(text) + "'");
}

void validate_record_set(const RecordSet& records) {
  std::unordered_set<std::string> ids;
  for (const Record& r : records) {
    if (!ids.insert(r.id).second) {
      throw Error(ErrorKind::schema, "duplicate record id " + r.id);
    }
  }
  for (const Record& r : records) {
    if (!(r.cough_certainty >= 0.0 && r.cough_certainty <= 1.0)) {
      throw Error(ErrorKind::schema, "certainty outside [0,1] for " + r.id);
    }
    if (r.parent_id) {
      if (*r.parent_id == r.id) {
        throw Error(ErrorKind::schema, "record " + r.id + " is its own parent");
      }
      if (!ids.contains(*r.parent_id)) {
        throw Error(ErrorKind::schema,
                    "record " + r.id + " has missing parent " + *r.parent_id);
      }
    }
  }
}

}  // namespace coughnet
