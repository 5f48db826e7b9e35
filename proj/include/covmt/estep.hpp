#pragma once

#include <Eigen/Cholesky>
#include <utility>
#include <vector>

#include "covmt/parallel.hpp"
#include "covmt/types.hpp"

namespace covmt {

// Conditional moments of the missing responses and the surrogate statistics
// consumed by the two conditional-maximization steps.
struct EStepStats {
  // Conditional mean of subject i's missing coordinates, in missing_idx(i)
  // order; empty for fully observed subjects.
  std::vector<Vector> mu;
  // Conditional covariance per missingness pattern (it does not depend on
  // x_i or y_i, so one copy per pattern suffices).
  std::vector<Matrix> v_by_pattern;
  std::vector<int> pattern_of_subject;
  Matrix ybar;  // n x q, observed values where observed, mu elsewhere
  Matrix s;     // q x q surrogate covariance, symmetric PSD
};

namespace detail {

struct PatternSolve {
  Eigen::LLT<Matrix> llt_o;  // factor of Sigma_{o,o}
  Matrix coef;               // Sigma_{m,o} Sigma_{o}^{-1}  (#m x #o)
  Matrix v;                  // Sigma_m - Sigma_{m,o} Sigma_o^{-1} Sigma_{o,m}
};

inline PatternSolve factor_pattern(const Matrix& sigma,
                                   const std::vector<int>& o,
                                   const std::vector<int>& m) {
  PatternSolve ps;
  ps.llt_o.compute(submatrix(sigma, o, o));
  if (ps.llt_o.info() != Eigen::Success)
    throw DegenerateCovarianceError(
        "observed-covariance submatrix is not positive definite");
  if (!m.empty()) {
    const Matrix sigma_om = submatrix(sigma, o, m);
    ps.coef = ps.llt_o.solve(sigma_om).transpose();
    ps.v = submatrix(sigma, m, m) - ps.coef * sigma_om;
    ps.v = 0.5 * (ps.v + ps.v.transpose().eval());
  } else {
    ps.coef.resize(0, static_cast<Eigen::Index>(o.size()));
    ps.v.resize(0, 0);
  }
  return ps;
}

}  // namespace detail

// Mean and covariance of the missing coordinates given the observed ones:
//   mu = beta_{.,m}' x + Sigma_{m,o} Sigma_o^{-1} (y_o - beta_{.,o}' x)
//   V  = Sigma_m - Sigma_{m,o} Sigma_o^{-1} Sigma_{o,m}
inline std::pair<Vector, Matrix> conditional_moments(
    const ModelFit& fit, const Vector& x_i, const Vector& y_obs,
    const std::vector<int>& o, const std::vector<int>& m) {
  if (o.empty()) throw DataError("subject has no observed responses");
  if (m.empty()) return {Vector(0), Matrix(0, 0)};

  const detail::PatternSolve ps = detail::factor_pattern(fit.sigma(), o, m);
  const Vector pred = fit.beta().transpose() * x_i;  // length q
  Vector r_obs(static_cast<Eigen::Index>(o.size()));
  for (std::size_t c = 0; c < o.size(); ++c)
    r_obs(static_cast<Eigen::Index>(c)) =
        y_obs(static_cast<Eigen::Index>(c)) - pred(o[c]);
  Vector mu = ps.coef * r_obs;
  for (std::size_t c = 0; c < m.size(); ++c)
    mu(static_cast<Eigen::Index>(c)) += pred(m[c]);
  return {std::move(mu), ps.v};
}

// Builds Ybar and S(beta, Sigma) = n^{-1} sum_i Gamma_i, where Gamma_i places
// the observed-residual outer product, imputed-residual outer product plus V,
// and their cross products back in original column order.
inline EStepStats build_estep_stats(const ModelFit& fit, const DataSet& data) {
  const int n = data.n();
  const int q = data.q();
  const auto& groups = data.patterns();

  EStepStats stats;
  stats.mu.resize(static_cast<std::size_t>(n));
  stats.v_by_pattern.resize(groups.size());
  stats.pattern_of_subject.assign(static_cast<std::size_t>(n), -1);
  stats.ybar.resize(n, q);

  const Matrix pred = data.x() * fit.beta();
  const Matrix& sigma = fit.sigma();

  auto group_gamma = [&](std::size_t b, std::size_t e) {
    Matrix partial = Matrix::Zero(q, q);
    for (std::size_t g = b; g < e; ++g) {
      const PatternGroup& grp = groups[g];
      const auto& o = grp.observed;
      const auto& m = grp.missing;
      const detail::PatternSolve ps = detail::factor_pattern(sigma, o, m);
      stats.v_by_pattern[g] = ps.v;

      Vector r_o(static_cast<Eigen::Index>(o.size()));
      for (int i : grp.subjects) {
        stats.pattern_of_subject[static_cast<std::size_t>(i)] =
            static_cast<int>(g);
        for (std::size_t c = 0; c < o.size(); ++c)
          r_o(static_cast<Eigen::Index>(c)) =
              data.y()(i, o[c]) - pred(i, o[c]);

        for (std::size_t a = 0; a < o.size(); ++a) {
          stats.ybar(i, o[a]) = data.y()(i, o[a]);
          for (std::size_t c = 0; c < o.size(); ++c)
            partial(o[a], o[c]) += r_o(static_cast<Eigen::Index>(a)) *
                                   r_o(static_cast<Eigen::Index>(c));
        }
        if (!m.empty()) {
          const Vector r_m = ps.coef * r_o;  // mu - beta_{.,m}' x
          Vector mu = r_m;
          for (std::size_t c = 0; c < m.size(); ++c)
            mu(static_cast<Eigen::Index>(c)) += pred(i, m[c]);
          for (std::size_t c = 0; c < m.size(); ++c)
            stats.ybar(i, m[c]) = mu(static_cast<Eigen::Index>(c));

          for (std::size_t a = 0; a < m.size(); ++a)
            for (std::size_t c = 0; c < m.size(); ++c)
              partial(m[a], m[c]) +=
                  r_m(static_cast<Eigen::Index>(a)) *
                      r_m(static_cast<Eigen::Index>(c)) +
                  ps.v(static_cast<Eigen::Index>(a),
                       static_cast<Eigen::Index>(c));
          for (std::size_t a = 0; a < o.size(); ++a)
            for (std::size_t c = 0; c < m.size(); ++c) {
              const double cross = r_o(static_cast<Eigen::Index>(a)) *
                                   r_m(static_cast<Eigen::Index>(c));
              partial(o[a], m[c]) += cross;
              partial(m[c], o[a]) += cross;
            }
          stats.mu[static_cast<std::size_t>(i)] = std::move(mu);
        }
      }
    }
    return partial;
  };

  Matrix total = parallel_reduce_ordered<Matrix>(
      groups.size(), 8, Matrix::Zero(q, q).eval(), group_gamma,
      [](Matrix a, const Matrix& b) { return (a + b).eval(); });
  stats.s = (total / static_cast<double>(n)).eval();
  stats.s = 0.5 * (stats.s + stats.s.transpose().eval());
  return stats;
}

}  // namespace covmt
