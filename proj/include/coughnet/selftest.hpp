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

#ifndef COUGHNET_SELFTEST_HPP_
#define COUGHNET_SELFTEST_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace coughnet::selftest {

struct CheckResult {
  std::string name;
  bool pass = false;
  /// Worst observed error and what it was compared against.
  std::string detail;
};

/// Central differences at eps 1e-5 for every layer kind (tolerance 1e-4)
/// and for a tiny full model (50 random parameters, tolerance 1e-3).
std::vector<CheckResult> gradient_checks(std::uint64_t seed);

/// Production MFCCs against the naive DFT / triangle / DCT composition on
/// `signals` seeded random signals, tolerance 1e-8.
CheckResult mfcc_oracle_check(std::uint64_t seed, int signals = 10);

/// Trapezoid AUC against the pair-count statistic on random tied scores
/// (tolerance 1e-9), and micro-average AUC against the pooled pair count.
std::vector<CheckResult> auc_oracle_checks(std::uint64_t seed, int instances = 10000);

/// All of the above.
std::vector<CheckResult> run_all(std::uint64_t seed);

}  // namespace coughnet::selftest

#endif  // COUGHNET_SELFTEST_HPP_
