#pragma once

// Plain-text numeric tables. Numbers are written in the shortest form that
// parses back to the identical double.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "suspopt/errors.hpp"

namespace suspopt::io {

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view token) {
  if (token == "nan" || token == "NaN") return std::nan("");
  if (token == "inf") return INFINITY;
  if (token == "-inf") return -INFINITY;
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw IoError("not a number: '" + std::string(token) + "'");
  }
  return v;
}

/// Column-oriented numeric table with optional "# key = value" header lines.
struct Table {
  std::vector<std::string> header;           // column names, may be empty
  std::vector<std::vector<double>> columns;  // columns[c][row]
  std::vector<std::pair<std::string, std::string>> attributes;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

  const std::string* attribute(std::string_view key) const {
    for (const auto& [k, v] : attributes) {
      if (k == key) return &v;
    }
    return nullptr;
  }
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == ',' ||
                               line[i] == '\r')) {
      ++i;
    }
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != ',' &&
           line[j] != '\r') {
      ++j;
    }
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

/// Reads whitespace- or comma-separated numeric columns. Lines starting with
/// '#' are comments; "# key = value" comments become attributes. A first
/// non-comment line that is not numeric is taken as the column header.
inline Table read_table(const std::filesystem::path& path, std::size_t min_columns = 1) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Table table;
  std::string line;
  std::size_t ncols = 0;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const auto eq = t.find('=');
      if (eq != std::string::npos) {
        table.attributes.emplace_back(detail::trim(std::string_view(t).substr(1, eq - 1)),
                                      detail::trim(std::string_view(t).substr(eq + 1)));
      }
      continue;
    }
    const auto fields = detail::split_fields(t);
    if (ncols == 0 && table.header.empty()) {
      double dummy;
      const auto res = std::from_chars(fields.front().data(),
                                       fields.front().data() + fields.front().size(), dummy);
      if (res.ec != std::errc() && fields.front() != "nan" && fields.front() != "inf" &&
          fields.front() != "-inf") {
        for (auto f : fields) table.header.emplace_back(f);
        continue;
      }
    }
    if (ncols == 0) {
      ncols = fields.size();
      if (ncols < min_columns) {
        throw IoError(path.string() + ": expected at least " + std::to_string(min_columns) +
                      " columns");
      }
      table.columns.resize(ncols);
    }
    if (fields.size() != ncols) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": ragged row");
    }
    for (std::size_t c = 0; c < ncols; ++c) {
      try {
        table.columns[c].push_back(parse_number(fields[c]));
      } catch (const IoError& e) {
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  if (ncols == 0) throw IoError(path.string() + ": no numeric rows");
  return table;
}

inline void write_table(const std::filesystem::path& path, const Table& table,
                        char separator = ' ') {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& [k, v] : table.attributes) out << "# " << k << " = " << v << '\n';
  if (!table.header.empty()) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (c) out << separator;
      out << table.header[c];
    }
    out << '\n';
  }
  const std::size_t rows = table.rows();
  for (const auto& col : table.columns) {
    if (col.size() != rows) throw IoError("table columns differ in length");
  }
  std::string row;
  for (std::size_t r = 0; r < rows; ++r) {
    row.clear();
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (c) row += separator;
      row += format_number(table.columns[c][r]);
    }
    row += '\n';
    out << row;
  }
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace suspopt::io
