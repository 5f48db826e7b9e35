#include "covmt/glasso.hpp"

#include <gtest/gtest.h>

#include <limits>

#include "test_util.hpp"

using namespace covmt;
using covmt::testing::random_covariance;
using covmt::testing::random_spd;

namespace {

// Largest KKT violation for tr(S O) - log det O + lambda P(O):
// nonzero entries need S - O^{-1} + lambda sign(O) = 0, zero entries need
// |S - O^{-1}| <= lambda.
double kkt_residual(const Matrix& omega, const Matrix& sigma, const Matrix& s,
                    double lambda, bool penalize_diagonal) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < s.rows(); ++j)
    for (Eigen::Index k = 0; k < s.cols(); ++k) {
      const double lam =
          (j == k && !penalize_diagonal) ? 0.0 : lambda;
      const double base = s(j, k) - sigma(j, k);
      const double w = omega(j, k);
      double viol;
      if (w != 0.0)
        viol = std::abs(base + lam * (w > 0 ? 1.0 : -1.0));
      else
        viol = std::max(0.0, std::abs(base) - lam);
      worst = std::max(worst, viol);
    }
  return worst;
}

GlassoProblem make_problem(const Matrix& s, double lambda,
                           bool diag = true) {
  GlassoProblem p;
  p.s = s;
  p.lambda = lambda;
  p.penalize_diagonal = diag;
  p.tol = 1e-7;
  p.max_iters = 500;
  return p;
}

}  // namespace

TEST(Glasso, IdentityInputZeroPenalty) {
  const GlassoResult res = solve_glasso(make_problem(Matrix::Identity(3, 3), 0.0));
  EXPECT_LT((res.omega - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Glasso, ZeroPenaltyIsDirectInverse) {
  Rng rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix s = random_spd(rng, 4 + rep % 4);
    const GlassoResult res = solve_glasso(make_problem(s, 0.0));
    EXPECT_LT((res.omega - s.inverse()).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Glasso, DiagonalInputClosedForm) {
  Matrix s = Matrix::Zero(2, 2);
  s(0, 0) = 2.0;
  s(1, 1) = 1.0;
  const GlassoResult res = solve_glasso(make_problem(s, 0.1, true));
  EXPECT_NEAR(res.omega(0, 0), 1.0 / 2.1, 1e-8);
  EXPECT_NEAR(res.omega(1, 1), 1.0 / 1.1, 1e-8);
  EXPECT_EQ(res.omega(0, 1), 0.0);
  EXPECT_EQ(res.omega(1, 0), 0.0);
}

TEST(Glasso, KktSatisfiedAcrossLambdas) {
  Rng rng(11);
  for (int rep = 0; rep < 12; ++rep) {
    const int q = 3 + rep % 8;
    const Matrix s = random_covariance(rng, q);
    for (double lambda : {0.0, 0.05, 0.2, 0.5}) {
      const GlassoResult res = solve_glasso(make_problem(s, lambda));
      EXPECT_LT(kkt_residual(res.omega, res.sigma, s, lambda, true), 1e-4)
          << "q=" << q << " lambda=" << lambda;
    }
  }
}

TEST(Glasso, UnpenalizedDiagonalKkt) {
  Rng rng(13);
  for (int rep = 0; rep < 6; ++rep) {
    const Matrix s = random_covariance(rng, 4 + rep);
    const GlassoResult res = solve_glasso(make_problem(s, 0.15, false));
    EXPECT_LT(kkt_residual(res.omega, res.sigma, s, 0.15, false), 1e-4);
    // With an unpenalized diagonal the dual fixes diag(Sigma) = diag(S).
    EXPECT_LT((res.sigma.diagonal() - s.diagonal()).cwiseAbs().maxCoeff(),
              1e-4);
  }
}

TEST(Glasso, ObjectiveBeatsCanonicalStarts) {
  Rng rng(17);
  for (int rep = 0; rep < 8; ++rep) {
    const int q = 3 + rep % 5;
    const Matrix s = random_covariance(rng, q);
    const double lambda = 0.1 + 0.1 * (rep % 3);
    const GlassoResult res = solve_glasso(make_problem(s, lambda));
    const double at_solution = glasso_objective(res.omega, s, lambda, true);

    const Matrix shrunk_inverse =
        (s + lambda * Matrix::Identity(q, q)).inverse();
    Matrix diag_start = Matrix::Zero(q, q);
    for (int j = 0; j < q; ++j) diag_start(j, j) = 1.0 / s(j, j);

    EXPECT_LE(at_solution,
              glasso_objective(shrunk_inverse, s, lambda, true) + 1e-9);
    EXPECT_LE(at_solution,
              glasso_objective(diag_start, s, lambda, true) + 1e-9);
  }
}

TEST(Glasso, NonzeroCountMonotoneInLambda) {
  Rng rng(19);
  for (int rep = 0; rep < 5; ++rep) {
    const Matrix s = random_covariance(rng, 6);
    int prev = std::numeric_limits<int>::max();
    for (double lambda : {0.01, 0.05, 0.1, 0.2, 0.4, 0.8}) {
      const GlassoResult res = solve_glasso(make_problem(s, lambda));
      int nonzeros = 0;
      for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b)
          if (a != b && res.omega(a, b) != 0.0) ++nonzeros;
      EXPECT_LE(nonzeros, prev);
      prev = nonzeros;
    }
  }
}

TEST(Glasso, LargeLambdaGivesDiagonal) {
  Rng rng(23);
  const Matrix s = random_covariance(rng, 5);
  double max_offdiag = 0.0;
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b)
      if (a != b) max_offdiag = std::max(max_offdiag, std::abs(s(a, b)));

  const GlassoResult res = solve_glasso(make_problem(s, max_offdiag + 0.01));
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b) {
      if (a == b)
        EXPECT_NEAR(res.omega(a, a), 1.0 / (s(a, a) + max_offdiag + 0.01),
                    1e-7);
      else
        EXPECT_EQ(res.omega(a, b), 0.0);
    }
}

TEST(Glasso, SingularInputZeroLambdaThrows) {
  Matrix s(2, 2);
  s << 1.0, 1.0, 1.0, 1.0;
  EXPECT_THROW(solve_glasso(make_problem(s, 0.0)), UnboundedProblemError);
}

TEST(Glasso, SingularPsdInputWithPenaltySolves) {
  // Rank-one PSD input; the penalty regularizes the problem.
  Vector u(3);
  u << 1.0, -0.5, 0.25;
  const Matrix s = u * u.transpose();
  const GlassoResult res = solve_glasso(make_problem(s, 0.3));
  Eigen::LLT<Matrix> llt(res.omega);
  EXPECT_EQ(llt.info(), Eigen::Success);
  EXPECT_LT(kkt_residual(res.omega, res.sigma, s, 0.3, true), 1e-4);
}

TEST(Glasso, ScalarProblem) {
  Matrix s(1, 1);
  s << 2.0;
  const GlassoResult res = solve_glasso(make_problem(s, 0.5));
  EXPECT_NEAR(res.omega(0, 0), 1.0 / 2.5, 1e-12);
  const GlassoResult unpen = solve_glasso(make_problem(s, 0.5, false));
  EXPECT_NEAR(unpen.omega(0, 0), 0.5, 1e-12);
}

TEST(Glasso, IterationCapCarriesLastIterate) {
  Rng rng(29);
  const Matrix s = random_covariance(rng, 8);
  GlassoProblem p = make_problem(s, 0.05);
  p.max_iters = 1;
  p.tol = 1e-14;
  try {
    solve_glasso(p);
    FAIL() << "expected NonConvergenceError";
  } catch (const NonConvergenceError& e) {
    EXPECT_EQ(e.last_iterate.rows(), 8);
    EXPECT_GT(e.residual, 0.0);
  }
}
