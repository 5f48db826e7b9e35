#pragma once

#include <Eigen/Cholesky>
#include <cmath>
#include <vector>

#include "covmt/parallel.hpp"
#include "covmt/types.hpp"

namespace covmt {

// Sparse-group penalty on beta: sum_j { alpha * ||beta_j.||_1 +
// (1-alpha) * ||beta_j.||_2 }.
inline double penalty_beta(const Matrix& beta, double alpha) {
  double l1 = 0.0, group = 0.0;
  for (Eigen::Index j = 0; j < beta.rows(); ++j) {
    l1 += beta.row(j).cwiseAbs().sum();
    group += beta.row(j).norm();
  }
  return alpha * l1 + (1.0 - alpha) * group;
}

// Entrywise l1 norm of the precision matrix, diagonal optional.
inline double penalty_omega(const Matrix& omega, bool penalize_diagonal) {
  double total = omega.cwiseAbs().sum();
  if (!penalize_diagonal) total -= omega.diagonal().cwiseAbs().sum();
  return total;
}

// Observed-data negative log-likelihood, constants dropped:
//   (1/n) sum_i [ r_i' Sigma_{o_i}^{-1} r_i + log det Sigma_{o_i} ],
// r_i the observed-column residual of subject i. One Cholesky factorization
// per missingness pattern.
inline double observed_nll(const ModelFit& fit, const DataSet& data) {
  const Matrix pred = data.x() * fit.beta();
  const Matrix& sigma = fit.sigma();
  const auto& groups = data.patterns();

  auto group_term = [&](std::size_t b, std::size_t e) {
    double acc = 0.0;
    for (std::size_t g = b; g < e; ++g) {
      const PatternGroup& grp = groups[g];
      const auto& o = grp.observed;
      const Matrix sigma_o = detail::submatrix(sigma, o, o);
      Eigen::LLT<Matrix> llt(sigma_o);
      if (llt.info() != Eigen::Success)
        throw DegenerateCovarianceError(
            "observed-covariance submatrix is not positive definite");
      double logdet = 0.0;
      const auto& lmat = llt.matrixLLT();
      for (Eigen::Index d = 0; d < lmat.rows(); ++d)
        logdet += 2.0 * std::log(lmat(d, d));

      Vector r(static_cast<Eigen::Index>(o.size()));
      for (int i : grp.subjects) {
        for (std::size_t c = 0; c < o.size(); ++c)
          r(static_cast<Eigen::Index>(c)) = data.y()(i, o[c]) - pred(i, o[c]);
        llt.matrixL().solveInPlace(r);
        acc += r.squaredNorm() + logdet;
      }
    }
    return acc;
  };

  const double total = parallel_reduce_ordered<double>(
      groups.size(), 8, 0.0, group_term,
      [](double a, double b) { return a + b; });
  return total / static_cast<double>(data.n());
}

// Full penalized objective: observed_nll + lambda_beta * P_beta +
// lambda_omega * P_omega.
inline double penalized_objective(const ModelFit& fit, const DataSet& data,
                                  const PenaltyConfig& pen,
                                  bool penalize_omega_diagonal = true) {
  pen.validate();
  return observed_nll(fit, data) +
         pen.lambda_beta * penalty_beta(fit.beta(), pen.alpha) +
         pen.lambda_omega * penalty_omega(fit.omega(), penalize_omega_diagonal);
}

}  // namespace covmt
