// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace epbench::csv {

/// A parsed CSV file: one header row plus data rows. Fields are RFC 4180
/// quoted on output only when they contain a comma, quote, or newline.
class Table {
 public:
  Table() = default;
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

  void add_row(std::vector<std::string> row);

  /// Column index by name; throws ParseError naming `source` when absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;

  /// Field by row and column name.
  const std::string& at(std::size_t row, std::string_view name) const;

  /// Throws ParseError if the header differs from `expected` (order-sensitive).
  void expect_header(const std::vector<std::string>& expected) const;

  std::string to_string() const;

  std::string source;  // file name for error messages

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

Table parse(std::string_view text, std::string source = "<memory>");
Table read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const Table& table);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace epbench::csv
