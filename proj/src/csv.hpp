// Copyright 2026 The Authors.
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

#ifndef DKPP_APP_CSV_HPP
#define DKPP_APP_CSV_HPP

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace dkpp::app {

/// Lines written as "# key: value" before the header row.
struct RunMetadata {
  std::string command_line;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> extra;
};

/// Shortest round-trip decimal form; "inf", "-inf" and "nan" for non-finite
/// values.
std::string format_number(double value);

/// Quotes a field when it contains a comma, quote or newline.
std::string csv_field(const std::string& text);

class CsvWriter {
 public:
  CsvWriter(std::ostream& os, const RunMetadata& meta);

  void header(const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& os_;
  std::size_t columns_ = 0;
};

}  // namespace dkpp::app

#endif  // DKPP_APP_CSV_HPP
