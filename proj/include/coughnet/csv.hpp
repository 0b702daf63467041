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

#ifndef COUGHNET_CSV_HPP_
#define COUGHNET_CSV_HPP_

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace coughnet::csv {

/// A parsed comma-separated table; the first row is the header.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based source line of each row, for diagnostics.
  std::vector<std::size_t> lines;

  std::optional<std::size_t> column(std::string_view name) const;
};

/// RFC 4180 style: quoted fields may contain commas, quotes ("") and newlines.
Table parse(std::string_view text);
Table read_file(const std::string& path);

/// Quotes the field only when it needs quoting.
std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest text that reads back to the same double.
std::string number(double value);

}  // namespace coughnet::csv

#endif  // COUGHNET_CSV_HPP_
