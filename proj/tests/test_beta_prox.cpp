#include "covmt/beta_prox.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "test_util.hpp"

using namespace covmt;
using covmt::testing::random_matrix;
using covmt::testing::random_spd;

namespace {

BetaProblem make_problem(Rng& rng, int n, int p, int q, double lambda,
                         double alpha, bool identity_omega = false) {
  BetaProblem prob;
  prob.x = random_matrix(rng, n, p);
  prob.ybar = random_matrix(rng, n, q);
  prob.omega = identity_omega ? Matrix::Identity(q, q) : random_spd(rng, q);
  prob.pen.alpha = alpha;
  prob.pen.lambda_beta = lambda;
  prob.cfg.prox_tol = 1e-8;
  prob.cfg.max_prox_iters = 20000;
  return prob;
}

}  // namespace

TEST(SparseGroupProx, ZeroInput) {
  const Matrix out = sparse_group_prox(Matrix::Zero(3, 2), 0.5, 0.5);
  EXPECT_EQ(out.cwiseAbs().maxCoeff(), 0.0);
}

TEST(SparseGroupProx, PureSoftThreshold) {
  Matrix delta(1, 2);
  delta << 3.0, -0.5;
  const Matrix out = sparse_group_prox(delta, 1.0, 0.0);
  EXPECT_NEAR(out(0, 0), 2.0, 1e-15);
  EXPECT_EQ(out(0, 1), 0.0);
}

TEST(SparseGroupProx, WorkedExampleRow34) {
  Matrix delta(1, 2);
  delta << 3.0, 4.0;
  const Matrix out = sparse_group_prox(delta, 0.5, 0.5);
  EXPECT_NEAR(out(0, 0), 2.2094, 1e-4);
  EXPECT_NEAR(out(0, 1), 3.0931, 1e-4);
}

TEST(SparseGroupProx, MatchesDouglasRachfordOracle) {
  Rng rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    const int q = 1 + rep % 5;
    Vector delta(q);
    for (int k = 0; k < q; ++k) delta(k) = 3.0 * rng.normal();
    const double t1 = rng.uniform();
    const double t2 = rng.uniform();

    Matrix row(1, q);
    row.row(0) = delta.transpose();
    const Vector ours = sparse_group_prox(row, t1, t2).row(0).transpose();
    const Vector ref = oracle::sparse_group_prox_dr(delta, t1, t2);

    const double f_ours = oracle::sparse_group_objective(ours, delta, t1, t2);
    const double f_ref = oracle::sparse_group_objective(ref, delta, t1, t2);
    EXPECT_LE(f_ours, f_ref + 1e-8);
    EXPECT_LT((ours - ref).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(GradH, ZeroResidualGivesZero) {
  Rng rng(7);
  BetaProblem prob = make_problem(rng, 10, 3, 2, 0.0, 1.0);
  const Matrix beta = random_matrix(rng, 3, 2);
  prob.ybar = prob.x * beta;
  EXPECT_LT(grad_h(beta, prob).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GradH, IdentityOmegaIsLeastSquaresGradient) {
  Rng rng(11);
  BetaProblem prob = make_problem(rng, 12, 4, 3, 0.0, 1.0, true);
  const Matrix beta = random_matrix(rng, 4, 3);
  const Matrix expect = (-2.0 / 12) * prob.x.transpose() *
                        (prob.ybar - prob.x * beta);
  EXPECT_LT((grad_h(beta, prob) - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GradH, MatchesFiniteDifferences) {
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    BetaProblem prob = make_problem(rng, 8, 3, 2, 0.0, 1.0);
    const Matrix beta = random_matrix(rng, 3, 2);
    const auto h = [&](const Matrix& b) {
      const Matrix r = prob.ybar - prob.x * b;
      return (r.array() * (r * prob.omega).array()).sum() / 8.0;
    };
    const Matrix g = grad_h(beta, prob);
    const Matrix fd = oracle::finite_difference_grad(h, beta, 1e-6);
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 2; ++k) {
        const double denom = std::max(1.0, std::abs(g(j, k)));
        EXPECT_LT(std::abs(g(j, k) - fd(j, k)) / denom, 1e-5);
      }
  }
}

TEST(SolveBeta, UnpenalizedMatchesNormalEquations) {
  Rng rng(17);
  for (int rep = 0; rep < 5; ++rep) {
    BetaProblem prob = make_problem(rng, 30, 4, 3, 0.0, 1.0);
    const Matrix sol = solve_beta(prob, Matrix::Zero(4, 3));
    const Matrix ref = oracle::least_squares(prob.x, prob.ybar);
    EXPECT_LT((sol - ref).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(SolveBeta, NullThresholdZeroSolution) {
  Rng rng(19);
  BetaProblem prob = make_problem(rng, 25, 5, 3, 0.0, 1.0);
  const Matrix g0 = (2.0 / 25) * prob.x.transpose() * prob.ybar * prob.omega;
  prob.pen.lambda_beta = g0.cwiseAbs().maxCoeff() * 1.001;
  const Matrix sol = solve_beta(prob, Matrix::Zero(5, 3));
  EXPECT_EQ(sol.cwiseAbs().maxCoeff(), 0.0);
}

TEST(SolveBeta, MatchesAdmmOracleObjective) {
  Rng rng(23);
  BetaProblem prob = make_problem(rng, 20, 3, 2, 0.15, 0.5);
  const Matrix sol = solve_beta(prob, Matrix::Zero(3, 2));
  const Matrix ref = oracle::beta_admm_oracle(prob.x, prob.ybar, prob.omega,
                                              0.15, 0.5, 6000);
  EXPECT_NEAR(beta_objective(sol, prob), beta_objective(ref, prob), 1e-6);
}

TEST(SolveBeta, FixedPointResidualSatisfied) {
  Rng rng(29);
  BetaProblem prob = make_problem(rng, 30, 6, 3, 0.2, 0.4);
  BetaSolveInfo info;
  const Matrix sol = solve_beta(prob, Matrix::Zero(6, 3), &info);
  EXPECT_TRUE(info.converged);
  EXPECT_LE(info.fixed_point_residual, prob.cfg.prox_tol);
  (void)sol;
}

TEST(SolveBeta, MajorizationHoldsOnEveryAcceptedStep) {
  Rng rng(31);
  BetaProblem prob = make_problem(rng, 25, 4, 3, 0.1, 0.6);
  int steps = 0;
  const BetaStepObserver obs = [&](const BetaStepRecord& rec) {
    const Matrix diff = rec.beta_new - rec.base;
    const double bound = rec.h_base +
                         (rec.grad_base.array() * diff.array()).sum() +
                         diff.squaredNorm() / (2.0 * rec.gamma);
    EXPECT_LE(rec.h_new, bound + 1e-9 * (1.0 + std::abs(rec.h_base)));
    ++steps;
  };
  solve_beta(prob, Matrix::Zero(4, 3), nullptr, obs);
  EXPECT_GT(steps, 0);
}

TEST(SolveBeta, KktAtConvergence) {
  Rng rng(37);
  BetaProblem prob = make_problem(rng, 40, 5, 3, 0.3, 0.5);
  prob.cfg.prox_tol = 1e-9;
  const Matrix sol = solve_beta(prob, Matrix::Zero(5, 3));
  const Matrix g = grad_h(sol, prob);
  const double lam = prob.pen.lambda_beta;
  const double alpha = prob.pen.alpha;
  const double tol = 10 * prob.cfg.prox_tol * 100;

  for (int j = 0; j < 5; ++j) {
    const double row_norm = sol.row(j).norm();
    if (row_norm == 0.0) {
      // Zero row: || soft(-g_j, lam*alpha) ||_2 <= lam*(1-alpha).
      double norm_sq = 0.0;
      for (int k = 0; k < 3; ++k) {
        const double s = detail::soft_threshold(-g(j, k), lam * alpha);
        norm_sq += s * s;
      }
      EXPECT_LE(std::sqrt(norm_sq), lam * (1.0 - alpha) + tol);
    } else {
      for (int k = 0; k < 3; ++k) {
        if (sol(j, k) == 0.0) {
          const double fixed = g(j, k);
          EXPECT_LE(std::abs(fixed), lam * alpha + tol);
        } else {
          const double stat = g(j, k) +
                              lam * alpha * (sol(j, k) > 0 ? 1.0 : -1.0) +
                              lam * (1.0 - alpha) * sol(j, k) / row_norm;
          EXPECT_LE(std::abs(stat), tol);
        }
      }
    }
  }
}

TEST(SolveBeta, ScalingInvariance) {
  // Scaling Omega by c > 0 and lambda_beta by c leaves the argmin unchanged.
  Rng rng(41);
  BetaProblem prob = make_problem(rng, 30, 4, 2, 0.2, 0.5);
  prob.cfg.prox_tol = 1e-10;
  const Matrix sol1 = solve_beta(prob, Matrix::Zero(4, 2));

  BetaProblem scaled = prob;
  const double c = 3.7;
  scaled.omega *= c;
  scaled.pen.lambda_beta *= c;
  const Matrix sol2 = solve_beta(scaled, Matrix::Zero(4, 2));
  EXPECT_LT((sol1 - sol2).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(SolveBeta, BacktrackingRuleConverges) {
  Rng rng(43);
  BetaProblem prob = make_problem(rng, 20, 4, 2, 0.1, 0.5);
  prob.cfg.step_size_rule = StepSizeRule::kBacktracking;
  BetaSolveInfo info;
  const Matrix sol = solve_beta(prob, Matrix::Zero(4, 2), &info);
  EXPECT_TRUE(info.converged);
  const Matrix ref = solve_beta(
      [&] {
        BetaProblem p = prob;
        p.cfg.step_size_rule = StepSizeRule::kFixedLipschitz;
        return p;
      }(),
      Matrix::Zero(4, 2));
  EXPECT_NEAR(beta_objective(sol, prob), beta_objective(ref, prob), 1e-7);
}

TEST(SolveBeta, IterationCapThrowsWithIterate) {
  Rng rng(47);
  BetaProblem prob = make_problem(rng, 30, 5, 3, 0.05, 0.5);
  prob.cfg.max_prox_iters = 2;
  prob.cfg.prox_tol = 1e-14;
  EXPECT_THROW(solve_beta(prob, Matrix::Zero(5, 3)), NonConvergenceError);
}
