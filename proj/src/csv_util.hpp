#pragma once

// Minimal CSV reading shared by the dataset and matrix loaders.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crembo/error.hpp"

namespace crembo::detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos)
    return {};
  auto e = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(b, e - b + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"')
    out = out.substr(1, out.size() - 2);
  return out;
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string_view rest(line);
  while (true) {
    auto pos = rest.find(',');
    cells.push_back(trim(rest.substr(0, pos)));
    if (pos == std::string_view::npos)
      break;
    rest.remove_prefix(pos + 1);
  }
  return cells;
}

inline std::optional<double> parse_real(const std::string& s) {
  if (s.empty())
    return std::nullopt;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+')
    ++first;
  double v = 0;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    return std::nullopt;
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::Io, "cannot open " + path.string());
  CsvTable t;
  std::string line;
  bool first = true;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (trim(line).empty())
      continue;
    auto cells = split_line(line);
    if (first) {
      if (!cells.empty() && cells[0].size() >= 3 && static_cast<unsigned char>(cells[0][0]) == 0xEF)
        cells[0] = cells[0].substr(3); // UTF-8 BOM
      t.header = std::move(cells);
      first = false;
      continue;
    }
    if (cells.size() != t.header.size())
      throw Error(ErrorCode::ShapeMismatch, path.string() + ":" + std::to_string(lineNo) + ": expected " +
                                                std::to_string(t.header.size()) + " cells, got " +
                                                std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
  }
  return t;
}


/// Reads every non-blank line as cells, without treating any row as a header.
inline std::vector<std::vector<std::string>> read_cells(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line))
    if (!trim(line).empty())
      rows.push_back(split_line(line));
  return rows;
}

} // namespace crembo::detail
