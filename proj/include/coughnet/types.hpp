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

#ifndef COUGHNET_TYPES_HPP_
#define COUGHNET_TYPES_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coughnet/common.hpp"

namespace coughnet {

/// The three-way label scheme. Column order in every report follows the
/// enumerator order.
enum class ClassLabel : std::uint8_t {
  asymptomatic_negative = 0,  // class1
  symptomatic_negative = 1,   // class2
  covid_positive = 2,         // class3
};

inline constexpr int kNumClasses = 3;
inline constexpr std::array<ClassLabel, kNumClasses> kAllClasses = {
    ClassLabel::asymptomatic_negative, ClassLabel::symptomatic_negative,
    ClassLabel::covid_positive};

constexpr int class_index(ClassLabel label) { return static_cast<int>(label); }
ClassLabel class_from_index(int index);
/// "class1", "class2", "class3".
std::string_view class_name(ClassLabel label);
ClassLabel parse_class_name(std::string_view name);

enum class Status { covid_positive, healthy, symptomatic, unknown };
std::string_view status_name(Status status);
Status parse_status(std::string_view text);

enum class Gender { male, female, other };
std::string_view gender_name(Gender gender);
std::optional<Gender> parse_gender(std::string_view text);

enum class Split : std::uint8_t { train = 0, val = 1, test = 2 };
inline constexpr std::array<Split, 3> kAllSplits = {Split::train, Split::val,
                                                    Split::test};
std::string_view split_name(Split split);
Split parse_split(std::string_view text);

enum class AugmentKind { gaussian_noise, pitch_shift, time_shift, time_stretch };
std::string_view augment_kind_name(AugmentKind kind);
AugmentKind parse_augment_kind(std::string_view text);

/// magnitude is SNR dB, semitones, shift fraction or stretch rate by kind.
struct AugmentSpec {
  AugmentKind kind = AugmentKind::gaussian_noise;
  double magnitude = 0.0;
  std::uint64_t seed = 0;
};

/// One cough submission, original or augmented child.
struct Record {
  std::string id;
  std::string audio_path;
  double cough_certainty = 0.0;
  Status status = Status::unknown;
  /// Only fields with a value in the manifest are present.
  std::map<std::string, bool> symptoms;
  std::optional<int> age;
  std::optional<Gender> gender;
  std::optional<std::string> parent_id;
  std::optional<Split> split;
  std::optional<ClassLabel> label;
  std::optional<AugmentSpec> augmentation;

  bool is_original() const { return !parent_id.has_value(); }
};

using RecordSet = std::vector<Record>;

/// Throws Error(schema) naming the first violated record invariant.
void validate_record_set(const RecordSet& records);

}  // namespace coughnet

#endif  // COUGHNET_TYPES_HPP_
