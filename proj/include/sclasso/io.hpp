#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sclasso/dataset.hpp"
#include "sclasso/errors.hpp"

namespace sclasso {

namespace detail {

inline bool parse_double(const std::string& cell, double& out) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  while (last != first && (*(last - 1) == ' ' || *(last - 1) == '\t')) --last;
  if (first == last) return false;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

}  // namespace detail

/// Read a rectangular numeric CSV whose first column is the response and
/// remaining columns the design. A non-numeric first row is treated as a
/// header. Ragged or non-numeric rows fail with the offending location.
inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");

  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  std::size_t width = 0;
  bool first_content_row = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    std::vector<double> values(cells.size());
    bool numeric = true;
    std::size_t bad_col = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!detail::parse_double(cells[c], values[c])) {
        numeric = false;
        bad_col = c;
        break;
      }
    }
    if (!numeric) {
      if (first_content_row) {  // header row
        first_content_row = false;
        width = cells.size();
        continue;
      }
      throw ParseError("row " + std::to_string(line_no) + ", column " +
                       std::to_string(bad_col + 1) + ": not a number");
    }
    if (first_content_row) {
      first_content_row = false;
      width = cells.size();
    } else if (cells.size() != width) {
      throw ParseError("row " + std::to_string(line_no) + ": expected " +
                       std::to_string(width) + " fields, got " + std::to_string(cells.size()));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError("'" + path + "' holds no data rows");
  if (width < 2) throw ParseError("'" + path + "' needs a response column and at least one feature");

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = static_cast<Eigen::Index>(width - 1);
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = rows[static_cast<std::size_t>(i)][0];
    for (Eigen::Index j = 0; j < p; ++j)
      X(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j + 1)];
  }
  return make_dataset(std::move(X), std::move(y));
}

/// Write y as the first column and X after it, 17 significant digits so a
/// round trip reproduces every double exactly.
inline void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << "y";
  for (Eigen::Index j = 0; j < ds.p(); ++j) out << ",x" << (j + 1);
  out << "\n";
  char buf[40];
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", ds.y[i]);
    out << buf;
    for (Eigen::Index j = 0; j < ds.p(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.X(i, j));
      out << ',' << buf;
    }
    out << "\n";
  }
  if (!out) throw ParseError("failed writing '" + path + "'");
}

/// JSON-lines writer: one record per line, streaming friendly.
inline void save_results_json(const std::vector<nlohmann::json>& records,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  for (const auto& rec : records) out << rec.dump() << "\n";
  if (!out) throw ParseError("failed writing '" + path + "'");
}

}  // namespace sclasso
