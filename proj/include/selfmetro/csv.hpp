/*
 * Copyright 2026 The selfmetro Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"

namespace selfmetro {

/// 64-bit FNV-1a hash, rendered as 16 hex digits.
inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Shortest round-trip decimal representation of a double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// CSV output: a `# key=value` comment line, the header row, then data rows.
class CsvWriter {
 public:
  using Cell = std::variant<double, long long, std::string>;

  CsvWriter(const std::filesystem::path& path, const std::string& comment, std::vector<std::string> columns)
      : columns_(std::move(columns)) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path);
    if (!out_) throw ConfigError("cannot open " + path.string() + " for writing");
    out_ << "# " << comment << '\n';
    for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
    out_ << '\n';
  }

  void row(const std::vector<Cell>& cells) {
    if (cells.size() != columns_.size()) throw ConfigError("CsvWriter: row width does not match header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) out_ << format_double(v);
            else out_ << v;
          },
          cells[i]);
    }
    out_ << '\n';
  }

 private:
  std::vector<std::string> columns_;
  std::ofstream out_;
};

/// Parsed CSV: comment lines, header, numeric rows (non-numeric cells become NaN).
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    throw ConfigError("CSV has no column '" + name + "'");
  }
  double number(std::size_t r, int c) const { return std::stod(rows[r][static_cast<std::size_t>(c)]); }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.comments.push_back(line.substr(line.find_first_not_of("# ")));
      continue;
    }
    if (t.columns.empty()) t.columns = split_csv_line(line);
    else t.rows.push_back(split_csv_line(line));
  }
  return t;
}

}  // namespace selfmetro
