#pragma once

#include <cstdlib>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "covmt/simgen.hpp"
#include "covmt/tuning.hpp"
#include "covmt/types.hpp"

namespace covmt {

namespace detail {

inline double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError("config key '" + key + "': bad number '" + v + "'");
  return x;
}

inline long parse_long(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long x = std::strtol(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError("config key '" + key + "': bad integer '" + v + "'");
  return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': bad boolean '" + v + "'");
}

inline std::vector<double> parse_double_list(const std::string& key,
                                             const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_double(key, item));
  if (out.empty())
    throw ConfigError("config key '" + key + "': empty list");
  return out;
}

}  // namespace detail

// Applies flat key=value settings onto the solver, grid and simulation
// configurations; keys mirror the struct field names. Returns keys it did
// not recognize so the caller can reject typos.
inline std::vector<std::string> apply_config(
    const std::map<std::string, std::string>& kv, SolverConfig* solver,
    TuningGrid* grid, SimConfig* sim) {
  std::vector<std::string> unknown;
  for (const auto& [key, value] : kv) {
    if (solver != nullptr) {
      if (key == "max_ecm_iters") {
        solver->max_ecm_iters = static_cast<int>(detail::parse_long(key, value));
        continue;
      }
      if (key == "ecm_tol") {
        solver->ecm_tol = detail::parse_double(key, value);
        continue;
      }
      if (key == "max_prox_iters") {
        solver->max_prox_iters =
            static_cast<int>(detail::parse_long(key, value));
        continue;
      }
      if (key == "prox_tol") {
        solver->prox_tol = detail::parse_double(key, value);
        continue;
      }
      if (key == "step_size_rule") {
        if (value == "fixed-lipschitz")
          solver->step_size_rule = StepSizeRule::kFixedLipschitz;
        else if (value == "backtracking")
          solver->step_size_rule = StepSizeRule::kBacktracking;
        else
          throw ConfigError("config key 'step_size_rule': unknown value '" +
                            value + "'");
        continue;
      }
      if (key == "backtracking_shrink") {
        solver->backtracking_shrink = detail::parse_double(key, value);
        continue;
      }
      if (key == "glasso_tol") {
        solver->glasso_tol = detail::parse_double(key, value);
        continue;
      }
      if (key == "max_glasso_iters") {
        solver->max_glasso_iters =
            static_cast<int>(detail::parse_long(key, value));
        continue;
      }
      if (key == "penalize_omega_diagonal") {
        solver->penalize_omega_diagonal = detail::parse_bool(key, value);
        continue;
      }
      if (key == "seed") {
        solver->seed =
            static_cast<std::uint64_t>(detail::parse_long(key, value));
        if (sim != nullptr) sim->seed = solver->seed;
        continue;
      }
    }
    if (grid != nullptr) {
      if (key == "alphas") {
        grid->alphas = detail::parse_double_list(key, value);
        continue;
      }
      if (key == "lambda_betas") {
        grid->lambda_betas = detail::parse_double_list(key, value);
        continue;
      }
      if (key == "n_lambda_beta") {
        grid->n_lambda_beta = static_cast<int>(detail::parse_long(key, value));
        continue;
      }
      if (key == "lambda_beta_min_ratio") {
        grid->lambda_beta_min_ratio = detail::parse_double(key, value);
        continue;
      }
      if (key == "lambda_omegas") {
        grid->lambda_omegas = detail::parse_double_list(key, value);
        continue;
      }
    }
    if (sim != nullptr) {
      if (key == "n") {
        sim->n = static_cast<int>(detail::parse_long(key, value));
        continue;
      }
      if (key == "p") {
        sim->p = static_cast<int>(detail::parse_long(key, value));
        continue;
      }
      if (key == "q") {
        sim->q = static_cast<int>(detail::parse_long(key, value));
        continue;
      }
      if (key == "n_train") {
        sim->n_train = static_cast<int>(detail::parse_long(key, value));
        continue;
      }
      if (key == "n_val") {
        sim->n_val = static_cast<int>(detail::parse_long(key, value));
        continue;
      }
      if (key == "n_test") {
        sim->n_test = static_cast<int>(detail::parse_long(key, value));
        continue;
      }
      if (key == "s") {
        sim->s = static_cast<int>(detail::parse_long(key, value));
        continue;
      }
      if (key == "per_tissue_eqtls") {
        sim->per_tissue_eqtls =
            static_cast<int>(detail::parse_long(key, value));
        continue;
      }
      if (key == "rho") {
        sim->rho = detail::parse_double(key, value);
        continue;
      }
      if (key == "r2") {
        sim->r2 = detail::parse_double(key, value);
        continue;
      }
      if (key == "miss_prob") {
        sim->miss_prob = detail::parse_double(key, value);
        continue;
      }
      if (key == "x_file") {
        sim->x_file = value;
        continue;
      }
      if (key == "seed" && solver == nullptr) {
        sim->seed =
            static_cast<std::uint64_t>(detail::parse_long(key, value));
        continue;
      }
    }
    unknown.push_back(key);
  }
  return unknown;
}

}  // namespace covmt
