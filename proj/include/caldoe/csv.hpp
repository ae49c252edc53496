#pragma once

#include "caldoe/common.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace caldoe {

/// Numeric delimited table with a header row.
struct Table {
  std::vector<std::string> header;
  Matrix data;

  /// Index of the named column, or -1.
  int find(const std::string& name) const;
  /// The named column; throws ValidationError naming it when missing.
  Vector column(const std::string& name) const;
};

/// Parses comma-separated text: a header row, then numeric rows of the same
/// width. Blank lines are skipped. `source` prefixes error messages.
Table parse_table(std::string_view text, const std::string& source);

Table read_table(const std::string& path);

/// Shortest decimal text that reads back to the same double.
std::string format_number(double value);

/// Writes a header plus rows of already formatted cells.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace caldoe
