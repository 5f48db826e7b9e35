#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "covmt/types.hpp"

namespace covmt {

// Tab-separated matrix with a header row and a subject-id first column.
// "NA" marks missing entries.
struct Table {
  std::string id_header = "subject_id";
  std::vector<std::string> row_ids;
  std::vector<std::string> col_names;
  Matrix values;      // masked entries hold 0 and must not be read
  BoolMask observed;  // false where the cell was NA
};

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline Table read_tsv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line))
    throw DataError("'" + path + "' is empty (header row required)");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = detail::split_tabs(line);
  if (header.size() < 2)
    throw DataError("'" + path + "': header must name at least one column");

  Table table;
  table.id_header = header[0];
  table.col_names.assign(header.begin() + 1, header.end());
  const std::size_t ncol = table.col_names.size();

  std::vector<std::vector<double>> rows;
  std::vector<std::vector<bool>> obs;
  std::unordered_set<std::string> seen;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = detail::split_tabs(line);
    if (cells.size() != ncol + 1)
      throw DataError("'" + path + "' line " + std::to_string(line_no) +
                      ": expected " + std::to_string(ncol + 1) +
                      " fields, found " + std::to_string(cells.size()));
    if (!seen.insert(cells[0]).second)
      throw DataError("'" + path + "': duplicate subject id '" + cells[0] +
                      "'");
    table.row_ids.push_back(cells[0]);
    std::vector<double> vals(ncol, 0.0);
    std::vector<bool> ob(ncol, true);
    for (std::size_t c = 0; c < ncol; ++c) {
      const std::string& cell = cells[c + 1];
      if (cell == "NA") {
        ob[c] = false;
        continue;
      }
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0')
        throw DataError("'" + path + "' line " + std::to_string(line_no) +
                        ": non-numeric cell '" + cell + "' in column '" +
                        table.col_names[c] + "'");
      vals[c] = v;
    }
    rows.push_back(std::move(vals));
    obs.push_back(std::move(ob));
  }
  if (rows.empty()) throw DataError("'" + path + "' has no data rows");

  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(ncol));
  table.observed.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(ncol));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < ncol; ++c) {
      table.values(static_cast<Eigen::Index>(r),
                   static_cast<Eigen::Index>(c)) = rows[r][c];
      table.observed(static_cast<Eigen::Index>(r),
                     static_cast<Eigen::Index>(c)) = obs[r][c];
    }
  return table;
}

inline void write_tsv_table(const std::string& path, const Table& table) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << table.id_header;
  for (const auto& name : table.col_names) out << '\t' << name;
  out << '\n';
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    out << table.row_ids[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
      out << '\t';
      if (table.observed.size() != 0 && !table.observed(r, c))
        out << "NA";
      else
        out << detail::format_double(table.values(r, c));
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing '" + path + "'");
}

inline Table make_table(std::string id_header,
                        std::vector<std::string> row_ids,
                        std::vector<std::string> col_names, Matrix values) {
  Table t;
  t.id_header = std::move(id_header);
  t.row_ids = std::move(row_ids);
  t.col_names = std::move(col_names);
  t.observed = BoolMask::Constant(values.rows(), values.cols(), true);
  t.values = std::move(values);
  return t;
}

}  // namespace covmt
