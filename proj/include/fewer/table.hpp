// Copyright (c) 2026 The fewer authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

namespace fewer {

/// printf-style formatting into a std::string.
template <typename... Args>
std::string format(const char* fmt, Args... args) {
  const int n = std::snprintf(nullptr, 0, fmt, args...);
  std::string out(static_cast<std::size_t>(n), '\0');
  std::snprintf(out.data(), out.size() + 1, fmt, args...);
  return out;
}

inline std::string percent(double fraction, int decimals = 2) {
  return format("%.*f%%", decimals, fraction * 100.0);
}

// Plain text table; first column left-aligned, the rest right-aligned.
class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> row) {
    row.resize(header_.size());
    rows_.push_back(std::move(row));
  }

  void add_separator() { rows_.emplace_back(); }

  std::string render() const {
    std::vector<std::size_t> width(header_.size(), 0);
    auto measure = [&](const std::vector<std::string>& row) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        width[c] = std::max(width[c], row[c].size());
      }
    };
    measure(header_);
    for (const auto& r : rows_) measure(r);

    std::size_t total = 0;
    for (std::size_t w : width) total += w + 3;
    const std::string rule(total > 3 ? total - 3 : 0, '-');

    std::string out;
    auto emit = [&](const std::vector<std::string>& row) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        const std::string& cell = row[c];
        const std::string pad(width[c] - cell.size(), ' ');
        if (c > 0) out += " | ";
        out += c == 0 ? cell + pad : pad + cell;
      }
      out += '\n';
    };
    emit(header_);
    out += rule + '\n';
    for (const auto& r : rows_) {
      if (r.empty()) {
        out += rule + '\n';
      } else {
        emit(r);
      }
    }
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace fewer
