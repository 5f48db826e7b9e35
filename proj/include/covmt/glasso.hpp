#pragma once

#include <Eigen/Cholesky>
#include <cmath>
#include <vector>

#include "covmt/types.hpp"

namespace covmt {

// l1-penalized normal-likelihood precision estimation:
//   min_{Omega PD} tr(S Omega) - log det Omega + lambda * sum |omega_jk|
// with the diagonal included in the penalty when penalize_diagonal is set.
struct GlassoProblem {
  Matrix s;
  double lambda = 0.0;
  bool penalize_diagonal = true;
  double tol = 1e-6;
  int max_iters = 500;
};

struct GlassoResult {
  Matrix omega;
  Matrix sigma;  // exact inverse of omega (recomputed, not the working dual)
  int iters = 0;
  double max_change = 0.0;
};

inline double glasso_objective(const Matrix& omega, const Matrix& s,
                               double lambda, bool penalize_diagonal) {
  Eigen::LLT<Matrix> llt(omega);
  if (llt.info() != Eigen::Success)
    throw DegenerateCovarianceError("glasso objective: omega not PD");
  double logdet = 0.0;
  for (Eigen::Index d = 0; d < omega.rows(); ++d)
    logdet += 2.0 * std::log(llt.matrixLLT()(d, d));
  double pen = omega.cwiseAbs().sum();
  if (!penalize_diagonal) pen -= omega.diagonal().cwiseAbs().sum();
  return (s * omega).trace() - logdet + lambda * pen;
}

namespace detail {

// Recovers Omega from the dual covariance W and the per-column lasso
// coefficients B: omega_jj = 1/(w_jj - w_12' b_j), omega_{.j} = -b_j omega_jj.
inline Matrix glasso_recover_omega(const Matrix& w, const Matrix& b) {
  const Eigen::Index q = w.rows();
  Matrix omega(q, q);
  for (Eigen::Index j = 0; j < q; ++j) {
    double dot = 0.0;
    for (Eigen::Index u = 0; u < q; ++u)
      if (u != j) dot += w(u, j) * b(u, j);
    const double denom = w(j, j) - dot;
    if (!(denom > 0.0))
      throw DegenerateCovarianceError("glasso: nonpositive Schur complement");
    const double ojj = 1.0 / denom;
    omega(j, j) = ojj;
    for (Eigen::Index u = 0; u < q; ++u)
      if (u != j) omega(u, j) = -b(u, j) * ojj;
  }
  return 0.5 * (omega + omega.transpose().eval());
}

}  // namespace detail

inline GlassoResult solve_glasso(const GlassoProblem& prob) {
  const Eigen::Index q = prob.s.rows();
  if (prob.s.cols() != q) throw DimensionError("glasso: S must be square");
  if ((prob.s - prob.s.transpose()).cwiseAbs().maxCoeff() > 1e-8)
    throw DataError("glasso: S must be symmetric");
  if (prob.lambda < 0.0) throw ConfigError("glasso: lambda must be >= 0");

  GlassoResult res;
  const double diag_pen = prob.penalize_diagonal ? prob.lambda : 0.0;

  if (q == 1) {
    const double denom = prob.s(0, 0) + diag_pen;
    if (!(denom > 0.0))
      throw UnboundedProblemError("glasso: scalar problem unbounded");
    res.omega = Matrix::Constant(1, 1, 1.0 / denom);
    res.sigma = Matrix::Constant(1, 1, denom);
    return res;
  }

  if (prob.lambda == 0.0) {
    Eigen::LLT<Matrix> llt(prob.s);
    if (llt.info() != Eigen::Success)
      throw UnboundedProblemError(
          "glasso: lambda = 0 requires positive definite S");
    res.omega = llt.solve(Matrix::Identity(q, q));
    res.omega = 0.5 * (res.omega + res.omega.transpose().eval());
    res.sigma = prob.s;
    return res;
  }

  // Dual covariance start W = S + diag-penalty ridge; column lasso coefs B
  // start at zero, i.e. Omega^0 diagonal.
  Matrix w = prob.s + diag_pen * Matrix::Identity(q, q);
  if (w.diagonal().minCoeff() <= 0.0)
    throw UnboundedProblemError("glasso: nonpositive diagonal in S");
  Matrix b = Matrix::Zero(q, q);
  Matrix omega = detail::glasso_recover_omega(w, b);

  const double inner_tol = prob.tol * 0.1;
  const int max_inner = 1000;

  Vector beta(q - 1), s12(q - 1), wb(q - 1);
  Matrix w11(q - 1, q - 1);
  std::vector<Eigen::Index> rest(static_cast<std::size_t>(q - 1));

  for (int sweep = 1; sweep <= prob.max_iters; ++sweep) {
    for (Eigen::Index j = 0; j < q; ++j) {
      Eigen::Index at = 0;
      for (Eigen::Index u = 0; u < q; ++u)
        if (u != j) rest[static_cast<std::size_t>(at++)] = u;
      for (Eigen::Index a = 0; a < q - 1; ++a) {
        const Eigen::Index ra = rest[static_cast<std::size_t>(a)];
        s12(a) = prob.s(ra, j);
        beta(a) = b(ra, j);
        for (Eigen::Index c = 0; c < q - 1; ++c)
          w11(a, c) = w(ra, rest[static_cast<std::size_t>(c)]);
      }

      // Lasso subproblem: min 1/2 b'W11 b - s12'b + lambda ||b||_1,
      // coordinate descent warm-started from the previous sweep.
      wb.noalias() = w11 * beta;
      for (int it = 0; it < max_inner; ++it) {
        double max_delta = 0.0;
        for (Eigen::Index u = 0; u < q - 1; ++u) {
          const double resid = s12(u) - wb(u) + w11(u, u) * beta(u);
          const double bu =
              detail::soft_threshold(resid, prob.lambda) / w11(u, u);
          const double delta = bu - beta(u);
          if (delta != 0.0) {
            wb += delta * w11.col(u);
            beta(u) = bu;
            max_delta = std::max(max_delta, std::abs(delta));
          }
        }
        if (max_delta <= inner_tol) break;
      }

      for (Eigen::Index a = 0; a < q - 1; ++a) {
        const Eigen::Index ra = rest[static_cast<std::size_t>(a)];
        b(ra, j) = beta(a);
        w(ra, j) = wb(a);  // w_12 = W11 * beta
        w(j, ra) = wb(a);
      }
    }

    Matrix omega_new = detail::glasso_recover_omega(w, b);
    res.max_change = (omega_new - omega).cwiseAbs().maxCoeff();
    omega.swap(omega_new);
    res.iters = sweep;
    if (res.max_change <= prob.tol) break;
  }

  if (res.max_change > prob.tol)
    throw NonConvergenceError("glasso did not converge in " +
                                  std::to_string(prob.max_iters) + " sweeps",
                              omega, res.max_change);

  Eigen::LLT<Matrix> llt(omega);
  if (llt.info() != Eigen::Success)
    throw DegenerateCovarianceError("glasso: returned precision not PD");
  res.omega = omega;
  res.sigma = llt.solve(Matrix::Identity(q, q));
  res.sigma = 0.5 * (res.sigma + res.sigma.transpose().eval());
  return res;
}

}  // namespace covmt
