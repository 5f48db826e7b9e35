#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "covmt/standardize.hpp"
#include "covmt/tsv.hpp"
#include "covmt/types.hpp"

namespace covmt {

namespace detail {

inline std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string file_hash(const std::vector<std::string>& paths) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& path : paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "' for hashing");
    std::ostringstream ss;
    ss << in.rdbuf();
    h = fnv1a(ss.str(), h);
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a:%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace detail

// Genotype and expression tables matched on the subject-id column. Subjects
// missing from either file are dropped (and reported); the kept order follows
// the genotype file.
struct MatchedTables {
  std::vector<std::string> subjects;
  std::vector<std::string> predictors;
  std::vector<std::string> responses;
  Matrix x;
  Matrix y;
  BoolMask observed;
  std::vector<std::string> unmatched;  // ids present in only one file
  std::string dataset_hash;
};

inline MatchedTables match_tables(const std::string& genotype_path,
                                  const std::string& expression_path) {
  const Table geno = read_tsv_table(genotype_path);
  const Table expr = read_tsv_table(expression_path);
  if (!geno.observed.all())
    throw DataError("'" + genotype_path + "': genotypes may not contain NA");

  std::unordered_map<std::string, int> expr_row;
  for (std::size_t r = 0; r < expr.row_ids.size(); ++r)
    expr_row[expr.row_ids[r]] = static_cast<int>(r);

  MatchedTables out;
  out.predictors = geno.col_names;
  out.responses = expr.col_names;
  out.dataset_hash = detail::file_hash({genotype_path, expression_path});

  std::vector<int> gi, ei;
  for (std::size_t r = 0; r < geno.row_ids.size(); ++r) {
    const auto it = expr_row.find(geno.row_ids[r]);
    if (it == expr_row.end()) {
      out.unmatched.push_back(geno.row_ids[r]);
      continue;
    }
    out.subjects.push_back(geno.row_ids[r]);
    gi.push_back(static_cast<int>(r));
    ei.push_back(it->second);
  }
  for (const auto& id : expr.row_ids)
    if (std::find(out.subjects.begin(), out.subjects.end(), id) ==
        out.subjects.end())
      out.unmatched.push_back(id);
  if (out.subjects.empty())
    throw DataError("no subjects shared between '" + genotype_path +
                    "' and '" + expression_path + "'");

  const Eigen::Index n = static_cast<Eigen::Index>(out.subjects.size());
  out.x.resize(n, geno.values.cols());
  out.y.resize(n, expr.values.cols());
  out.observed.resize(n, expr.values.cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    out.x.row(r) = geno.values.row(gi[static_cast<std::size_t>(r)]);
    out.y.row(r) = expr.values.row(ei[static_cast<std::size_t>(r)]);
    out.observed.row(r) =
        expr.observed.row(ei[static_cast<std::size_t>(r)]);
  }

  for (Eigen::Index r = 0; r < n; ++r)
    if (!out.observed.row(r).any())
      throw DataError("subject '" + out.subjects[static_cast<std::size_t>(r)] +
                      "' has no observed expression");
  return out;
}

struct StandardizedData {
  DataSet data;
  ColumnStats x_stats;
  ColumnStats y_stats;
};

// Centers and scales columns using statistics from `stat_rows` (typically the
// training rows); Y statistics use observed entries only. Constant columns
// are rejected by name.
inline StandardizedData standardize_dataset(
    const MatchedTables& tables, const std::vector<int>& stat_rows,
    const std::vector<int>& keep_rows) {
  Matrix xs(static_cast<Eigen::Index>(stat_rows.size()), tables.x.cols());
  Matrix ys(static_cast<Eigen::Index>(stat_rows.size()), tables.y.cols());
  BoolMask ms(static_cast<Eigen::Index>(stat_rows.size()), tables.y.cols());
  for (std::size_t r = 0; r < stat_rows.size(); ++r) {
    xs.row(static_cast<Eigen::Index>(r)) = tables.x.row(stat_rows[r]);
    ys.row(static_cast<Eigen::Index>(r)) = tables.y.row(stat_rows[r]);
    ms.row(static_cast<Eigen::Index>(r)) = tables.observed.row(stat_rows[r]);
  }
  ColumnStats x_stats = column_stats(xs);
  ColumnStats y_stats = observed_column_stats(ys, ms);
  for (Eigen::Index j = 0; j < x_stats.scale.size(); ++j)
    if (x_stats.scale(j) == 0.0)
      throw DataError("constant genotype column '" +
                      tables.predictors[static_cast<std::size_t>(j)] + "'");
  for (Eigen::Index k = 0; k < y_stats.scale.size(); ++k)
    if (y_stats.scale(k) == 0.0)
      throw DataError("constant expression column '" +
                      tables.responses[static_cast<std::size_t>(k)] + "'");

  Matrix x(static_cast<Eigen::Index>(keep_rows.size()), tables.x.cols());
  Matrix y(static_cast<Eigen::Index>(keep_rows.size()), tables.y.cols());
  BoolMask observed(static_cast<Eigen::Index>(keep_rows.size()),
                    tables.y.cols());
  for (std::size_t r = 0; r < keep_rows.size(); ++r) {
    x.row(static_cast<Eigen::Index>(r)) = tables.x.row(keep_rows[r]);
    y.row(static_cast<Eigen::Index>(r)) = tables.y.row(keep_rows[r]);
    observed.row(static_cast<Eigen::Index>(r)) =
        tables.observed.row(keep_rows[r]);
  }
  x = standardize_columns(x, x_stats);
  for (Eigen::Index k = 0; k < y.cols(); ++k)
    for (Eigen::Index r = 0; r < y.rows(); ++r)
      y(r, k) = observed(r, k)
                    ? (y(r, k) - y_stats.mean(k)) / y_stats.scale(k)
                    : 0.0;

  return StandardizedData{DataSet(std::move(x), std::move(y),
                                  std::move(observed)),
                          std::move(x_stats), std::move(y_stats)};
}

struct LoadedDataSet {
  DataSet data;
  std::vector<std::string> subjects;
  std::vector<std::string> predictors;
  std::vector<std::string> responses;
  ColumnStats x_stats;
  ColumnStats y_stats;
  std::string dataset_hash;
};

// Loads, matches and standardizes a genotype/expression pair; statistics are
// taken over all matched rows.
inline LoadedDataSet load_dataset(const std::string& genotype_path,
                                  const std::string& expression_path) {
  MatchedTables tables = match_tables(genotype_path, expression_path);
  std::vector<int> all(tables.subjects.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  StandardizedData std_data = standardize_dataset(tables, all, all);
  return LoadedDataSet{std::move(std_data.data), std::move(tables.subjects),
                       std::move(tables.predictors),
                       std::move(tables.responses),
                       std::move(std_data.x_stats),
                       std::move(std_data.y_stats),
                       std::move(tables.dataset_hash)};
}

// splits.tsv: subject_id <tab> split, values train/validation/test.
inline std::map<std::string, std::string> read_split_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path + "' is empty");
  std::map<std::string, std::string> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_tabs(line);
    if (cells.size() != 2)
      throw DataError("'" + path + "' line " + std::to_string(line_no) +
                      ": expected 2 fields");
    if (cells[1] != "train" && cells[1] != "validation" && cells[1] != "test")
      throw DataError("'" + path + "' line " + std::to_string(line_no) +
                      ": unknown split '" + cells[1] + "'");
    if (!out.emplace(cells[0], cells[1]).second)
      throw DataError("'" + path + "': duplicate subject '" + cells[0] + "'");
  }
  return out;
}

inline void write_split_file(const std::string& path,
                             const std::vector<std::string>& subjects,
                             const std::vector<std::string>& roles) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "subject_id\tsplit\n";
  for (std::size_t i = 0; i < subjects.size(); ++i)
    out << subjects[i] << '\t' << roles[i] << '\n';
}

// Flat key=value configuration file; '#' starts a comment line.
inline std::map<std::string, std::string> read_config_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t begin = line.find_first_not_of(" \t");
    if (begin == std::string::npos || line[begin] == '#') continue;
    const std::size_t eq = line.find('=', begin);
    if (eq == std::string::npos)
      throw DataError("'" + path + "' line " + std::to_string(line_no) +
                      ": expected key=value");
    auto trim = [](std::string s) {
      const std::size_t b = s.find_first_not_of(" \t");
      const std::size_t e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string()
                                    : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(begin, eq - begin));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw DataError("'" + path + "' line " + std::to_string(line_no) +
                      ": empty key");
    out[key] = value;
  }
  return out;
}

}  // namespace covmt
