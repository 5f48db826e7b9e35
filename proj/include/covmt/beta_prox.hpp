#pragma once

#include <Eigen/Cholesky>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>

#include "covmt/objective.hpp"
#include "covmt/types.hpp"

namespace covmt {

// Penalized weighted residual sum of squares problem:
//   min_beta (1/n) tr{(Ybar - X beta) Omega (Ybar - X beta)'}
//            + lambda_beta * P_beta^(alpha)(beta)
struct BetaProblem {
  Matrix x;
  Matrix ybar;
  Matrix omega;
  PenaltyConfig pen;
  SolverConfig cfg;
};

struct BetaSolveInfo {
  int iters = 0;
  double fixed_point_residual = std::numeric_limits<double>::infinity();
  bool converged = false;
  double step_size = 0.0;
};

// Per accepted step, for tests asserting the majorization inequality.
struct BetaStepRecord {
  Matrix base;      // point the step was taken from (extrapolated or not)
  Matrix beta_new;
  Matrix grad_base;
  double gamma = 0.0;
  double h_base = 0.0;
  double h_new = 0.0;
};
using BetaStepObserver = std::function<void(const BetaStepRecord&)>;

inline Matrix sparse_group_prox(const Matrix& delta, double t_l1,
                                double t_group);

namespace detail {

// Largest eigenvalue of a symmetric PSD operator by power iteration.
template <class MatVec>
double power_iteration_max_eig(const MatVec& apply, Eigen::Index dim,
                               int iters = 50, double tol = 1e-8) {
  if (dim == 0) return 0.0;
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    v(i) = 1.0 + static_cast<double>(i) / static_cast<double>(dim);
  v.normalize();
  double eig = 0.0;
  for (int it = 0; it < iters; ++it) {
    Vector w = apply(v);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double eig_new = v.dot(w);
    w /= norm;
    v.swap(w);
    if (it > 0 && std::abs(eig_new - eig) <= tol * std::abs(eig_new)) {
      eig = eig_new;
      break;
    }
    eig = eig_new;
  }
  return std::max(eig, 0.0);
}

struct SmoothEval {
  double value;
  Matrix grad;
};

// Monotone accelerated proximal gradient on h(beta) + penalty, with restart
// whenever extrapolation would increase the objective and step-size
// backtracking whenever the quadratic majorization fails.
template <class EvalFn>
Matrix fista_sparse_group(const EvalFn& eval, double lipschitz,
                          double t_l1, double t_group,
                          const Matrix& beta_init, const SolverConfig& cfg,
                          BetaSolveInfo* info,
                          const BetaStepObserver& observer) {
  double gamma = lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;
  if (cfg.step_size_rule == StepSizeRule::kBacktracking) gamma *= 10.0;

  auto penalty = [&](const Matrix& b) {
    double l1 = 0.0, group = 0.0;
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      l1 += b.row(j).cwiseAbs().sum();
      group += b.row(j).norm();
    }
    return t_l1 * l1 + t_group * group;
  };

  Matrix beta = beta_init;
  Matrix beta_prev = beta;
  double theta = 1.0, theta_prev = 1.0;
  SmoothEval cur = eval(beta);
  double objective = cur.value + penalty(beta);

  BetaSolveInfo local;
  local.step_size = gamma;

  // One prox-gradient step from `base`, backtracking until the majorization
  // h(new) <= h(base) + <grad, new-base> + ||new-base||^2/(2 gamma) holds.
  auto step_from = [&](const Matrix& base, const SmoothEval& at_base,
                       Matrix& out, double& h_out) {
    for (;;) {
      out = sparse_group_prox(base - gamma * at_base.grad, gamma * t_l1,
                              gamma * t_group);
      const Matrix diff = out - base;
      h_out = eval(out).value;
      const double bound = at_base.value +
                           (at_base.grad.array() * diff.array()).sum() +
                           diff.squaredNorm() / (2.0 * gamma);
      if (h_out <= bound + 1e-12 * (1.0 + std::abs(at_base.value))) break;
      gamma *= cfg.backtracking_shrink;
      if (gamma < 1e-300)
        throw NonConvergenceError("proximal step size underflow", out, 0.0);
    }
    if (observer) {
      BetaStepRecord rec;
      rec.base = base;
      rec.beta_new = out;
      rec.grad_base = at_base.grad;
      rec.gamma = gamma;
      rec.h_base = at_base.value;
      rec.h_new = h_out;
      observer(rec);
    }
  };

  for (int r = 1; r <= cfg.max_prox_iters; ++r) {
    local.iters = r;
    const double extr = (theta_prev - 1.0) / theta;
    Matrix next;
    double h_next;
    if (extr > 0.0) {
      const Matrix z = beta + extr * (beta - beta_prev);
      step_from(z, eval(z), next, h_next);
      double obj_next = h_next + penalty(next);
      if (obj_next > objective + 1e-12 * (1.0 + std::abs(objective))) {
        // Extrapolation overshot; restart momentum and step from beta.
        theta = 1.0;
        theta_prev = 1.0;
        step_from(beta, cur, next, h_next);
        obj_next = h_next + penalty(next);
      }
      objective = obj_next;
    } else {
      step_from(beta, cur, next, h_next);
      objective = h_next + penalty(next);
    }

    beta_prev.swap(beta);
    beta = std::move(next);
    theta_prev = theta;
    theta = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    cur = eval(beta);

    const double scale = std::max(1.0, beta.norm());
    if ((beta - beta_prev).norm() <= cfg.prox_tol * scale) {
      const Matrix mapped = sparse_group_prox(beta - gamma * cur.grad,
                                              gamma * t_l1, gamma * t_group);
      local.fixed_point_residual = (beta - mapped).norm() / scale;
      if (local.fixed_point_residual <= cfg.prox_tol) {
        local.converged = true;
        break;
      }
    }
  }

  local.step_size = gamma;
  if (!local.converged) {
    const double scale = std::max(1.0, beta.norm());
    const Matrix mapped = sparse_group_prox(beta - gamma * cur.grad,
                                            gamma * t_l1, gamma * t_group);
    local.fixed_point_residual = (beta - mapped).norm() / scale;
    local.converged = local.fixed_point_residual <= cfg.prox_tol;
  }
  if (info) *info = local;
  if (!local.converged)
    throw NonConvergenceError(
        "proximal gradient did not converge in " +
            std::to_string(cfg.max_prox_iters) + " iterations",
        beta, local.fixed_point_residual);
  return beta;
}

}  // namespace detail

// Exact minimizer of 1/2 ||b - delta||_F^2 + t_l1 ||b||_1 + t_group * sum_j
// ||b_j.||_2: entrywise soft-threshold, then per-row group shrink.
inline Matrix sparse_group_prox(const Matrix& delta, double t_l1,
                                double t_group) {
  Matrix out(delta.rows(), delta.cols());
  for (Eigen::Index j = 0; j < delta.rows(); ++j) {
    for (Eigen::Index k = 0; k < delta.cols(); ++k)
      out(j, k) = detail::soft_threshold(delta(j, k), t_l1);
    if (t_group > 0.0) {
      const double norm = out.row(j).norm();
      if (norm <= t_group)
        out.row(j).setZero();
      else
        out.row(j) *= 1.0 - t_group / norm;
    }
  }
  return out;
}

// Gradient of the unpenalized objective: -(2/n) X' (Ybar - X beta) Omega.
inline Matrix grad_h(const Matrix& beta, const BetaProblem& prob) {
  const double n = static_cast<double>(prob.x.rows());
  const Matrix resid = prob.ybar - prob.x * beta;
  return (-2.0 / n) * (prob.x.transpose() * (resid * prob.omega));
}

inline double beta_objective(const Matrix& beta, const BetaProblem& prob) {
  const double n = static_cast<double>(prob.x.rows());
  const Matrix resid = prob.ybar - prob.x * beta;
  const double h = (resid.array() * (resid * prob.omega).array()).sum() / n;
  return h + prob.pen.lambda_beta * penalty_beta(beta, prob.pen.alpha);
}

// Lipschitz constant of grad h: (2/n) lambda_max(X'X) lambda_max(Omega).
inline double beta_lipschitz(const BetaProblem& prob) {
  const double n = static_cast<double>(prob.x.rows());
  const double xtx_max = detail::power_iteration_max_eig(
      [&](const Vector& v) {
        return Vector(prob.x.transpose() * (prob.x * v));
      },
      prob.x.cols());
  const double omega_max = detail::power_iteration_max_eig(
      [&](const Vector& v) { return Vector(prob.omega * v); },
      prob.omega.rows());
  return (2.0 / n) * xtx_max * omega_max;
}

inline Matrix solve_beta(const BetaProblem& prob, const Matrix& beta_init,
                         BetaSolveInfo* info = nullptr,
                         const BetaStepObserver& observer = {}) {
  prob.pen.validate();
  prob.cfg.validate();
  if (prob.ybar.rows() != prob.x.rows())
    throw DimensionError("solve_beta: X and Ybar row mismatch");
  if (prob.omega.rows() != prob.ybar.cols() ||
      prob.omega.cols() != prob.ybar.cols())
    throw DimensionError("solve_beta: Omega dimension mismatch");
  if (beta_init.rows() != prob.x.cols() ||
      beta_init.cols() != prob.ybar.cols())
    throw DimensionError("solve_beta: beta_init dimension mismatch");
  if (Eigen::LLT<Matrix>(prob.omega).info() != Eigen::Success)
    throw DegenerateCovarianceError("solve_beta: Omega is not PD");

  const double n = static_cast<double>(prob.x.rows());
  auto eval = [&](const Matrix& beta) {
    detail::SmoothEval ev;
    const Matrix resid = prob.ybar - prob.x * beta;
    const Matrix resid_w = resid * prob.omega;
    ev.value = (resid.array() * resid_w.array()).sum() / n;
    ev.grad = (-2.0 / n) * (prob.x.transpose() * resid_w);
    return ev;
  };

  return detail::fista_sparse_group(
      eval, beta_lipschitz(prob), prob.pen.lambda_beta * prob.pen.alpha,
      prob.pen.lambda_beta * (1.0 - prob.pen.alpha), beta_init, prob.cfg,
      info, observer);
}

}  // namespace covmt
