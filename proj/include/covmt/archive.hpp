#pragma once

#include <Eigen/Cholesky>
#include <fstream>
#include <string>
#include <vector>
#include <zlib.h>

#include <nlohmann/json.hpp>

#include "covmt/standardize.hpp"
#include "covmt/types.hpp"
#include "covmt/version.hpp"

namespace covmt {

// Persisted weight set: sparse beta triplets, dense lower-triangular Omega,
// column names, normalization constants and fit metadata. One JSON document,
// gzip-compressed when the path ends in ".gz". load(save(a)) round-trips
// bit-exactly (shortest-round-trip double serialization).
struct ArchiveTraceSummary {
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int iterations = 0;
  bool converged = true;
};

struct WeightSetArchive {
  std::string method;  // covmt | mt | en
  std::string tool_version = kVersion;
  PenaltyConfig penalty;
  SolverConfig solver;
  std::vector<std::string> predictors;
  std::vector<std::string> responses;
  Matrix beta;   // in standardized-design units
  Matrix omega;  // identity for methods that assume uncorrelated errors
  ColumnStats x_stats;
  ColumnStats y_stats;
  std::string dataset_hash;
  ArchiveTraceSummary trace;
};

namespace detail {

inline nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline Vector vector_from_json(const nlohmann::json& arr) {
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  return v;
}

inline bool is_gzip_path(const std::string& path) {
  return path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
}

inline void write_file_maybe_gz(const std::string& path,
                                const std::string& content) {
  if (is_gzip_path(path)) {
    gzFile gz = gzopen(path.c_str(), "wb");
    if (gz == nullptr) throw DataError("cannot write '" + path + "'");
    const int written = gzwrite(gz, content.data(),
                                static_cast<unsigned>(content.size()));
    gzclose(gz);
    if (written != static_cast<int>(content.size()))
      throw DataError("failed writing '" + path + "'");
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << content;
  if (!out) throw DataError("failed writing '" + path + "'");
}

inline std::string read_file_maybe_gz(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw DataError("cannot open '" + path + "'");
  char magic[2] = {0, 0};
  probe.read(magic, 2);
  probe.close();
  if (magic[0] == '\x1f' && magic[1] == '\x8b') {
    gzFile gz = gzopen(path.c_str(), "rb");
    if (gz == nullptr) throw DataError("cannot open '" + path + "'");
    std::string content;
    char buf[1 << 16];
    int got;
    while ((got = gzread(gz, buf, sizeof(buf))) > 0)
      content.append(buf, static_cast<std::size_t>(got));
    gzclose(gz);
    return content;
  }
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

inline void save_archive(const std::string& path,
                         const WeightSetArchive& a) {
  if (a.beta.rows() != static_cast<Eigen::Index>(a.predictors.size()) ||
      a.beta.cols() != static_cast<Eigen::Index>(a.responses.size()))
    throw DimensionError("archive: beta shape does not match names");
  if (a.omega.rows() != a.beta.cols() || a.omega.cols() != a.beta.cols())
    throw DimensionError("archive: omega shape mismatch");

  nlohmann::json j;
  j["format"] = "covmt-weights";
  j["tool_version"] = a.tool_version;
  j["method"] = a.method;
  j["penalty"] = {{"alpha", a.penalty.alpha},
                  {"lambda_beta", a.penalty.lambda_beta},
                  {"lambda_omega", a.penalty.lambda_omega}};
  j["solver"] = {
      {"max_ecm_iters", a.solver.max_ecm_iters},
      {"ecm_tol", a.solver.ecm_tol},
      {"max_prox_iters", a.solver.max_prox_iters},
      {"prox_tol", a.solver.prox_tol},
      {"step_size_rule",
       a.solver.step_size_rule == StepSizeRule::kFixedLipschitz
           ? "fixed-lipschitz"
           : "backtracking"},
      {"backtracking_shrink", a.solver.backtracking_shrink},
      {"glasso_tol", a.solver.glasso_tol},
      {"max_glasso_iters", a.solver.max_glasso_iters},
      {"penalize_omega_diagonal", a.solver.penalize_omega_diagonal},
      {"seed", a.solver.seed}};
  j["predictors"] = a.predictors;
  j["responses"] = a.responses;

  nlohmann::json triplets = nlohmann::json::array();
  for (Eigen::Index jj = 0; jj < a.beta.rows(); ++jj)
    for (Eigen::Index k = 0; k < a.beta.cols(); ++k)
      if (a.beta(jj, k) != 0.0)
        triplets.push_back({jj, k, a.beta(jj, k)});
  j["beta"] = {{"rows", a.beta.rows()},
               {"cols", a.beta.cols()},
               {"triplets", std::move(triplets)}};

  nlohmann::json lower = nlohmann::json::array();
  for (Eigen::Index r = 0; r < a.omega.rows(); ++r)
    for (Eigen::Index c = 0; c <= r; ++c) lower.push_back(a.omega(r, c));
  j["omega_lower"] = std::move(lower);

  j["normalization"] = {{"x_mean", detail::vector_to_json(a.x_stats.mean)},
                        {"x_scale", detail::vector_to_json(a.x_stats.scale)},
                        {"y_mean", detail::vector_to_json(a.y_stats.mean)},
                        {"y_scale", detail::vector_to_json(a.y_stats.scale)}};
  j["dataset_hash"] = a.dataset_hash;
  j["trace"] = {{"initial_objective", a.trace.initial_objective},
                {"final_objective", a.trace.final_objective},
                {"iterations", a.trace.iterations},
                {"converged", a.trace.converged}};

  detail::write_file_maybe_gz(path, j.dump(2) + "\n");
}

inline WeightSetArchive load_archive(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file_maybe_gz(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("'" + path + "': invalid archive JSON: " + e.what());
  }
  if (j.value("format", "") != "covmt-weights")
    throw DataError("'" + path + "' is not a covmt weight archive");

  WeightSetArchive a;
  a.tool_version = j.at("tool_version").get<std::string>();
  a.method = j.at("method").get<std::string>();
  a.penalty.alpha = j.at("penalty").at("alpha").get<double>();
  a.penalty.lambda_beta = j.at("penalty").at("lambda_beta").get<double>();
  a.penalty.lambda_omega = j.at("penalty").at("lambda_omega").get<double>();
  const auto& s = j.at("solver");
  a.solver.max_ecm_iters = s.at("max_ecm_iters").get<int>();
  a.solver.ecm_tol = s.at("ecm_tol").get<double>();
  a.solver.max_prox_iters = s.at("max_prox_iters").get<int>();
  a.solver.prox_tol = s.at("prox_tol").get<double>();
  a.solver.step_size_rule =
      s.at("step_size_rule").get<std::string>() == "backtracking"
          ? StepSizeRule::kBacktracking
          : StepSizeRule::kFixedLipschitz;
  a.solver.backtracking_shrink = s.at("backtracking_shrink").get<double>();
  a.solver.glasso_tol = s.at("glasso_tol").get<double>();
  a.solver.max_glasso_iters = s.at("max_glasso_iters").get<int>();
  a.solver.penalize_omega_diagonal =
      s.at("penalize_omega_diagonal").get<bool>();
  a.solver.seed = s.at("seed").get<std::uint64_t>();

  a.predictors = j.at("predictors").get<std::vector<std::string>>();
  a.responses = j.at("responses").get<std::vector<std::string>>();

  const auto& jb = j.at("beta");
  const auto rows = jb.at("rows").get<Eigen::Index>();
  const auto cols = jb.at("cols").get<Eigen::Index>();
  if (rows != static_cast<Eigen::Index>(a.predictors.size()) ||
      cols != static_cast<Eigen::Index>(a.responses.size()))
    throw DataError("'" + path + "': beta shape does not match names");
  a.beta = Matrix::Zero(rows, cols);
  for (const auto& t : jb.at("triplets")) {
    const auto r = t.at(0).get<Eigen::Index>();
    const auto c = t.at(1).get<Eigen::Index>();
    if (r < 0 || r >= rows || c < 0 || c >= cols)
      throw DataError("'" + path + "': beta triplet out of range");
    a.beta(r, c) = t.at(2).get<double>();
  }

  a.omega = Matrix::Zero(cols, cols);
  const auto& lower = j.at("omega_lower");
  std::size_t at = 0;
  for (Eigen::Index r = 0; r < cols; ++r)
    for (Eigen::Index c = 0; c <= r; ++c) {
      if (at >= lower.size())
        throw DataError("'" + path + "': omega_lower too short");
      a.omega(r, c) = lower[at++].get<double>();
      a.omega(c, r) = a.omega(r, c);
    }
  if (Eigen::LLT<Matrix>(a.omega).info() != Eigen::Success)
    throw DegenerateCovarianceError("'" + path +
                                    "': archived omega is not PD");

  const auto& norm = j.at("normalization");
  a.x_stats.mean = detail::vector_from_json(norm.at("x_mean"));
  a.x_stats.scale = detail::vector_from_json(norm.at("x_scale"));
  a.y_stats.mean = detail::vector_from_json(norm.at("y_mean"));
  a.y_stats.scale = detail::vector_from_json(norm.at("y_scale"));
  if (a.x_stats.mean.size() != rows || a.y_stats.mean.size() != cols)
    throw DataError("'" + path + "': normalization length mismatch");

  a.dataset_hash = j.at("dataset_hash").get<std::string>();
  const auto& tr = j.at("trace");
  a.trace.initial_objective = tr.at("initial_objective").get<double>();
  a.trace.final_objective = tr.at("final_objective").get<double>();
  a.trace.iterations = tr.at("iterations").get<int>();
  a.trace.converged = tr.at("converged").get<bool>();
  return a;
}

}  // namespace covmt
