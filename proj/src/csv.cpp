#include "caldoe/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace caldoe {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

int Table::find(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

Vector Table::column(const std::string& name) const {
  const int j = find(name);
  if (j < 0) throw ValidationError("missing column '" + name + "'");
  return data.col(j);
}

Table parse_table(std::string_view text, const std::string& source) {
  Table table;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = trim(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto cells = split(line);
    if (table.header.empty()) {
      for (const auto c : cells) {
        if (c.empty()) throw ParseError(source + ": empty column name in header", line_no, 1);
        table.header.emplace_back(c);
      }
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw ParseError(source + ": expected " + std::to_string(table.header.size()) + " columns, found " +
                           std::to_string(cells.size()),
                       line_no, 1);
    }
    std::vector<double> row;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      double v = 0.0;
      const auto c = cells[j];
      const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (c.empty() || ec != std::errc() || ptr != c.data() + c.size() || !std::isfinite(v)) {
        throw ParseError(source + ": column '" + table.header[j] + "' has non-numeric value '" + std::string(c) + "'",
                         line_no, 1);
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
    if (end == text.size()) break;
  }
  if (table.header.empty()) throw ValidationError(source + ": file is empty (header row expected)");
  if (rows.empty()) throw ValidationError(source + ": no data rows");
  table.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      table.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return table;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << contents;
  if (!out) throw ValidationError("error while writing '" + path + "'");
}

Table read_table(const std::string& path) { return parse_table(read_file(path), path); }

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (j > 0) out += ',';
      out += cells[j];
    }
    out += '\n';
  };
  emit(header);
  for (const auto& r : rows) emit(r);
  write_file(path, out);
}

}  // namespace caldoe
