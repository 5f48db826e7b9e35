#include "covmt/ecm.hpp"

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_util.hpp"

using namespace covmt;
using covmt::testing::random_dataset;
using covmt::testing::random_matrix;

namespace {

SolverConfig tight_config() {
  SolverConfig cfg;
  cfg.ecm_tol = 1e-9;
  cfg.max_ecm_iters = 300;
  cfg.prox_tol = 1e-9;
  cfg.max_prox_iters = 20000;
  cfg.glasso_tol = 1e-8;
  return cfg;
}

}  // namespace

TEST(FitCovmt, CompleteDataHugeOmegaPenaltyGivesOls) {
  Rng rng(3);
  const int n = 40, p = 5, q = 3;
  const Matrix x = random_matrix(rng, n, p);
  const Matrix beta_true = random_matrix(rng, p, q);
  const Matrix y = x * beta_true + 0.3 * random_matrix(rng, n, q);
  const DataSet data(x, y, BoolMask::Constant(n, q, true));

  PenaltyConfig pen;
  pen.lambda_beta = 0.0;
  pen.lambda_omega = 50.0;  // zeroes every off-diagonal
  const EcmResult res = fit_covmt(data, pen, tight_config());

  const Matrix ols = oracle::least_squares(x, y);
  EXPECT_LT((res.fit.beta() - ols).cwiseAbs().maxCoeff(), 1e-6);
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b)
      if (a != b) EXPECT_EQ(res.fit.omega()(a, b), 0.0);
}

TEST(FitCovmt, ObjectiveMonotoneOnRandomInstances) {
  Rng rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    const DataSet data = random_dataset(rng, 25, 4, 3, 0.3);
    PenaltyConfig pen;
    pen.alpha = rng.uniform();
    pen.lambda_beta = 0.3 * rng.uniform();
    pen.lambda_omega = 0.3 * rng.uniform();
    SolverConfig cfg = tight_config();
    cfg.max_ecm_iters = 40;
    cfg.ecm_tol = 1e-10;

    const EcmResult res = fit_covmt(data, pen, cfg);
    double prev = res.trace.initial_objective;
    for (const auto& it : res.trace.iterations) {
      EXPECT_LE(it.objective, prev + 1e-9);
      prev = it.objective;
    }
    EXPECT_GT(res.trace.iterations.size(), 0u);
  }
}

TEST(FitCovmt, SingleResponseMatchesStandaloneBetaSolver) {
  Rng rng(11);
  const int n = 30, p = 4;
  const Matrix x = random_matrix(rng, n, p);
  const Matrix y = random_matrix(rng, n, 1);
  const DataSet data(x, y, BoolMask::Constant(n, 1, true));

  PenaltyConfig pen;
  pen.alpha = 0.7;
  pen.lambda_beta = 0.05;
  pen.lambda_omega = 0.1;
  const SolverConfig cfg = tight_config();
  const EcmResult res = fit_covmt(data, pen, cfg);

  // At the fixed point, re-solving the weighted problem with the converged
  // scalar precision must reproduce beta.
  BetaProblem prob;
  prob.x = x;
  prob.ybar = y;
  prob.omega = res.fit.omega();
  prob.pen = pen;
  prob.cfg = cfg;
  const Matrix standalone = solve_beta(prob, Matrix::Zero(p, 1));
  EXPECT_LT((standalone - res.fit.beta()).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(FitCovmt, CompleteDataMatchesDirectAlternation) {
  Rng rng(13);
  const int n = 30, p = 3, q = 3;
  const Matrix x = random_matrix(rng, n, p);
  const Matrix y = random_matrix(rng, n, q);
  const DataSet data(x, y, BoolMask::Constant(n, q, true));

  PenaltyConfig pen;
  pen.alpha = 0.5;
  pen.lambda_beta = 0.1;
  pen.lambda_omega = 0.1;
  SolverConfig cfg = tight_config();
  cfg.max_ecm_iters = 15;
  cfg.ecm_tol = 1e-12;
  const EcmResult res = fit_covmt(data, pen, cfg);

  // Direct biconvex alternation on raw data, same starts and tolerances.
  ModelFit fit = [&] {
    Matrix omega = Matrix::Zero(q, q);
    for (int k = 0; k < q; ++k) {
      const double var =
          (y.col(k).array() - y.col(k).mean()).square().sum() / (n - 1);
      omega(k, k) = 1.0 / std::max(var, 1e-4);
    }
    return ModelFit(Matrix::Zero(p, q), omega);
  }();
  for (std::size_t it = 0; it < res.trace.iterations.size(); ++it) {
    const Matrix resid = y - x * fit.beta();
    GlassoProblem gp;
    gp.s = resid.transpose() * resid / n;
    gp.lambda = pen.lambda_omega;
    gp.tol = cfg.glasso_tol;
    gp.max_iters = cfg.max_glasso_iters;
    const Matrix omega = solve_glasso(gp).omega;
    BetaProblem bp;
    bp.x = x;
    bp.ybar = y;
    bp.omega = omega;
    bp.pen = pen;
    bp.cfg = cfg;
    const Matrix beta = solve_beta(bp, fit.beta());
    fit = ModelFit(beta, omega);
  }

  EXPECT_LT((fit.beta() - res.fit.beta()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((fit.omega() - res.fit.omega()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FitCovmt, RestartFromConvergedFitTerminatesImmediately) {
  Rng rng(17);
  const DataSet data = random_dataset(rng, 25, 3, 3, 0.25);
  PenaltyConfig pen;
  pen.alpha = 0.5;
  pen.lambda_beta = 0.1;
  pen.lambda_omega = 0.1;
  SolverConfig cfg = tight_config();
  cfg.ecm_tol = 1e-8;

  const EcmResult first = fit_covmt(data, pen, cfg);
  ASSERT_TRUE(first.trace.converged);
  const EcmResult second = fit_covmt(data, pen, cfg, first.fit);
  EXPECT_TRUE(second.trace.converged);
  EXPECT_LE(second.trace.iterations.size(), 2u);
  const double change = std::abs(second.trace.final_objective() -
                                 first.trace.final_objective());
  EXPECT_LE(change, cfg.ecm_tol * std::max(1.0, std::abs(
                                      first.trace.final_objective())));
}

TEST(FitCovmt, NonConvergenceIsFlaggedNotThrown) {
  Rng rng(19);
  const DataSet data = random_dataset(rng, 20, 3, 3, 0.3);
  PenaltyConfig pen;
  pen.lambda_beta = 0.05;
  pen.lambda_omega = 0.05;
  SolverConfig cfg = tight_config();
  cfg.max_ecm_iters = 1;
  cfg.ecm_tol = 1e-14;
  const EcmResult res = fit_covmt(data, pen, cfg);
  EXPECT_FALSE(res.trace.converged);
  EXPECT_EQ(res.trace.iterations.size(), 1u);
}

TEST(FitCovmt, MaskedEntriesNeverRead) {
  Rng rng(21);
  const DataSet base = random_dataset(rng, 20, 3, 3, 0.3);
  Matrix poisoned = base.y();
  for (int i = 0; i < 20; ++i)
    for (int k = 0; k < 3; ++k)
      if (!base.observed()(i, k)) poisoned(i, k) = 1e9;
  const DataSet fuzzed(base.x(), poisoned, base.observed());

  PenaltyConfig pen;
  pen.alpha = 0.5;
  pen.lambda_beta = 0.05;
  pen.lambda_omega = 0.1;
  SolverConfig cfg = tight_config();
  cfg.max_ecm_iters = 10;
  cfg.ecm_tol = 1e-10;
  const EcmResult a = fit_covmt(base, pen, cfg);
  const EcmResult b = fit_covmt(fuzzed, pen, cfg);
  EXPECT_EQ((a.fit.beta() - b.fit.beta()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((a.fit.omega() - b.fit.omega()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(a.trace.final_objective(), b.trace.final_objective());
}

TEST(Predict, Examples) {
  Rng rng(23);
  const ModelFit zero(Matrix::Zero(3, 2), Matrix::Identity(2, 2));
  const Matrix x_new = random_matrix(rng, 4, 3);
  EXPECT_EQ(predict(zero, x_new).cwiseAbs().maxCoeff(), 0.0);

  const ModelFit fit = covmt::testing::random_fit(rng, 3, 2);
  EXPECT_LT((predict(fit, Matrix::Identity(3, 3)) - fit.beta())
                .cwiseAbs()
                .maxCoeff(),
            1e-15);

  // Naive triple-loop product oracle.
  const Matrix pred = predict(fit, x_new);
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 2; ++k) {
      double acc = 0.0;
      for (int j = 0; j < 3; ++j) acc += x_new(i, j) * fit.beta()(j, k);
      EXPECT_NEAR(pred(i, k), acc, 1e-12);
    }

  EXPECT_THROW(predict(fit, Matrix::Zero(2, 5)), DimensionError);
}

TEST(Impute, Examples) {
  Rng rng(29);
  // No missing entries: output equals input.
  {
    const int n = 6, p = 2, q = 3;
    const Matrix x = random_matrix(rng, n, p);
    const Matrix y = random_matrix(rng, n, q);
    const DataSet data(x, y, BoolMask::Constant(n, q, true));
    const ModelFit fit = covmt::testing::random_fit(rng, p, q);
    EXPECT_EQ((impute(fit, data).completed - y).cwiseAbs().maxCoeff(), 0.0);
  }

  // Identity covariance: imputed values equal X*beta at missing positions.
  {
    const int n = 5, p = 2, q = 3;
    const Matrix x = random_matrix(rng, n, p);
    Matrix y = random_matrix(rng, n, q);
    BoolMask mask = BoolMask::Constant(n, q, true);
    mask(1, 2) = false;
    mask(3, 0) = false;
    const DataSet data(x, y, mask);
    const Matrix beta = random_matrix(rng, p, q);
    const ModelFit fit(beta, Matrix::Identity(q, q));
    const Matrix completed = impute(fit, data).completed;
    const Matrix pred = x * beta;
    EXPECT_NEAR(completed(1, 2), pred(1, 2), 1e-12);
    EXPECT_NEAR(completed(3, 0), pred(3, 0), 1e-12);
  }

  // Bivariate conditional case: missing entry imputed to 0.5.
  {
    Matrix sigma(2, 2);
    sigma << 1.0, 0.5, 0.5, 1.0;
    Matrix omega = sigma.inverse();
    const ModelFit fit(Matrix::Zero(1, 2),
                       0.5 * (omega + omega.transpose().eval()));
    Matrix x(2, 1);
    x << 0.0, 0.0;
    Matrix y(2, 2);
    y << 1.0, 99.0, 0.0, 0.0;  // masked value is arbitrary
    BoolMask mask(2, 2);
    mask << true, false, true, true;
    const DataSet data(x, y, mask);
    const ImputeResult res = impute(fit, data);
    EXPECT_NEAR(res.completed(0, 1), 0.5, 1e-12);
    const int pat = res.pattern_of_subject[0];
    EXPECT_NEAR(res.pattern_covariances[static_cast<std::size_t>(pat)](0, 0),
                0.75, 1e-12);
  }
}
