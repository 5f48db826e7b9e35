#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "covmt/beta_prox.hpp"
#include "covmt/estep.hpp"
#include "covmt/glasso.hpp"
#include "covmt/objective.hpp"
#include "covmt/types.hpp"

namespace covmt {

struct EcmIterRecord {
  double objective = 0.0;       // penalized objective after the iteration
  double beta_change = 0.0;     // Frobenius norm of the beta update
  double omega_change = 0.0;
  double estep_seconds = 0.0;
  double glasso_seconds = 0.0;
  double beta_seconds = 0.0;
};

struct EcmTrace {
  double initial_objective = 0.0;
  std::vector<EcmIterRecord> iterations;
  bool converged = false;
  // Set when an inner solver hit its iteration cap and its last iterate was
  // used; the objective trace remains valid either way.
  bool subsolver_capped = false;

  double final_objective() const {
    return iterations.empty() ? initial_objective
                              : iterations.back().objective;
  }
};

struct EcmResult {
  ModelFit fit;
  EcmTrace trace;
};

namespace detail {

inline double seconds_since(
    const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

// Default start: beta = 0, Omega diagonal with entries
// 1 / max(observed residual variance, 1e-4).
inline ModelFit initial_fit(const DataSet& data) {
  const int q = data.q();
  const Matrix beta = Matrix::Zero(data.p(), q);
  Vector var = Vector::Zero(q);
  for (int k = 0; k < q; ++k) {
    double sum = 0.0, sumsq = 0.0;
    int cnt = 0;
    for (int i = 0; i < data.n(); ++i) {
      if (!data.observed()(i, k)) continue;
      const double v = data.y()(i, k);
      sum += v;
      sumsq += v * v;
      ++cnt;
    }
    const double mean = sum / cnt;
    var(k) = cnt > 1 ? (sumsq - cnt * mean * mean) / (cnt - 1) : 0.0;
  }
  Matrix omega = Matrix::Zero(q, q);
  for (int k = 0; k < q; ++k) omega(k, k) = 1.0 / std::max(var(k), 1e-4);
  return ModelFit(beta, omega);
}

}  // namespace detail

// Penalized ECM: alternate the E-step with one graphical-lasso update of
// Omega and one proximal-gradient update of beta until the penalized
// observed-data objective stabilizes. The objective is non-increasing across
// iterations (generalized ECM guarantee).
inline EcmResult fit_covmt(const DataSet& data, const PenaltyConfig& pen,
                           const SolverConfig& cfg,
                           const std::optional<ModelFit>& init = std::nullopt) {
  pen.validate();
  cfg.validate();

  ModelFit fit = init.has_value() ? *init : detail::initial_fit(data);
  if (fit.p() != data.p() || fit.q() != data.q())
    throw DimensionError("fit_covmt: init dimensions do not match data");

  EcmTrace trace;
  trace.initial_objective =
      penalized_objective(fit, data, pen, cfg.penalize_omega_diagonal);
  double prev_objective = trace.initial_objective;

  BetaProblem beta_prob;
  beta_prob.x = data.x();
  beta_prob.pen = pen;
  beta_prob.cfg = cfg;

  for (int k = 1; k <= cfg.max_ecm_iters; ++k) {
    EcmIterRecord rec;
    auto t0 = std::chrono::steady_clock::now();
    const EStepStats stats = build_estep_stats(fit, data);
    rec.estep_seconds = detail::seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    GlassoProblem gp;
    gp.s = stats.s;
    gp.lambda = pen.lambda_omega;
    gp.penalize_diagonal = cfg.penalize_omega_diagonal;
    gp.tol = cfg.glasso_tol;
    gp.max_iters = cfg.max_glasso_iters;
    Matrix omega_next;
    try {
      omega_next = solve_glasso(gp).omega;
    } catch (const NonConvergenceError& e) {
      omega_next = e.last_iterate;
      trace.subsolver_capped = true;
    }
    rec.glasso_seconds = detail::seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    beta_prob.ybar = stats.ybar;
    beta_prob.omega = omega_next;
    Matrix beta_next;
    try {
      beta_next = solve_beta(beta_prob, fit.beta());
    } catch (const NonConvergenceError& e) {
      beta_next = e.last_iterate;
      trace.subsolver_capped = true;
    }
    rec.beta_seconds = detail::seconds_since(t0);

    rec.beta_change = (beta_next - fit.beta()).norm();
    rec.omega_change = (omega_next - fit.omega()).norm();
    fit = ModelFit(std::move(beta_next), std::move(omega_next));

    rec.objective =
        penalized_objective(fit, data, pen, cfg.penalize_omega_diagonal);
    trace.iterations.push_back(rec);

    const double rel_change = std::abs(prev_objective - rec.objective) /
                              std::max(1.0, std::abs(prev_objective));
    prev_objective = rec.objective;
    if (rel_change <= cfg.ecm_tol) {
      trace.converged = true;
      break;
    }
  }

  return EcmResult{std::move(fit), std::move(trace)};
}

// Predicted responses for new genotypes: X_new * beta.
inline Matrix predict(const ModelFit& fit, const Matrix& x_new) {
  if (x_new.cols() != fit.beta().rows())
    throw DimensionError("predict: X_new column count must equal p");
  return x_new * fit.beta();
}

struct ImputeResult {
  Matrix completed;  // observed entries passed through, missing -> mu
  // Conditional covariance of the missing block, one per missingness
  // pattern, for prediction-interval construction.
  std::vector<Matrix> pattern_covariances;
  std::vector<int> pattern_of_subject;
};

inline ImputeResult impute(const ModelFit& fit, const DataSet& data) {
  const EStepStats stats = build_estep_stats(fit, data);
  ImputeResult out;
  out.completed = stats.ybar;
  out.pattern_covariances = stats.v_by_pattern;
  out.pattern_of_subject = stats.pattern_of_subject;
  return out;
}

}  // namespace covmt
