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

#ifndef COUGHNET_AUGMENT_HPP_
#define COUGHNET_AUGMENT_HPP_

#include <cstdint>
#include <limits>
#include <string>
#include <utility>

#include "coughnet/audio.hpp"
#include "coughnet/types.hpp"

namespace coughnet {

/// Pass as snr_db to disable noise.
inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

/// Adds seeded white Gaussian noise scaled so the empirical SNR is exactly
/// snr_db. Throws Error(degenerate) on a zero-RMS input.
Signal add_gaussian_noise(const Signal& signal, double snr_db, std::uint64_t seed);

/// Phase-vocoder time-scale modification with no range check; output length
/// is round(n / rate).
Signal phase_vocoder(const Signal& signal, double rate);

/// Moves every partial by 2^(semitones/12) and keeps the length exactly.
/// |semitones| <= 12.
Signal pitch_shift(const Signal& signal, double semitones);

/// Circular rotation by round(shift_fraction * n) samples. |shift_fraction| <= 0.25.
Signal time_shift(const Signal& signal, double shift_fraction);

/// Pitch-preserving stretch; rate in [0.8, 1.25], rate > 1 shortens.
Signal time_stretch(const Signal& signal, double rate);

Signal apply_augment(const Signal& signal, const AugmentSpec& spec);

/// Uniform draw ranges for the balancing procedure.
struct AugmentRanges {
  std::pair<double, double> snr_db{15.0, 30.0};
  std::pair<double, double> semitones{-2.0, 2.0};
  std::pair<double, double> shift_fraction{-0.2, 0.2};
  std::pair<double, double> stretch_rate{0.85, 1.15};
};

/// Throws Error(parameter) when the magnitude is outside the operation's
/// legal range.
void validate_augment_spec(const AugmentSpec& spec);

/// Per class: if originals >= target, samples `target` originals without
/// replacement; otherwise keeps all originals and appends children until the
/// class holds exactly `target` records. Children get parent_id, the
/// parent's split, label and metadata, an AugmentSpec drawn from `ranges`,
/// and id "<parent>_aug<k>". Parents are assigned round-robin.
/// Output is grouped by class in label order.
RecordSet balance_with_augmentation(const RecordSet& split_records, int target_per_class,
                                    std::uint64_t seed,
                                    const AugmentRanges& ranges = {});

}  // namespace coughnet

#endif  // COUGHNET_AUGMENT_HPP_
