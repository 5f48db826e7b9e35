#pragma once

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "covmt/rng.hpp"
#include "covmt/standardize.hpp"
#include "covmt/types.hpp"

namespace covmt {

// Generator settings for the synthetic multi-tissue regression benchmark:
// shared/tissue-specific eQTL construction, block-correlated errors scaled to
// a target per-tissue R^2, Bernoulli missingness on training and validation
// responses.
struct SimConfig {
  int n = 620;
  int p = 1178;
  int q = 29;
  int n_train = 400;
  int n_val = 110;
  int n_test = 110;
  int s = 15;                 // rows shared across every tissue
  int per_tissue_eqtls = 20;  // total true eQTLs per tissue
  double rho = 0.5;
  double r2 = 0.1;
  double miss_prob = 0.55;
  std::uint64_t seed = 1;
  std::string x_file;  // empty -> synthetic correlated dosages

  void validate() const {
    if (n < 2 || p < 1 || q < 1) throw ConfigError("sim: bad dimensions");
    if (n_train + n_val + n_test != n)
      throw ConfigError("sim: splits must sum to n");
    if (n_train < 1 || n_val < 0 || n_test < 0)
      throw ConfigError("sim: bad split sizes");
    if (!(s >= 0 && s <= per_tissue_eqtls && per_tissue_eqtls <= p))
      throw ConfigError("sim: need 0 <= s <= per_tissue_eqtls <= p");
    if (!(rho >= 0.0 && rho < 0.8))
      throw ConfigError("sim: rho must lie in [0, 0.8)");
    if (!(r2 > 0.0 && r2 < 1.0)) throw ConfigError("sim: r2 must be in (0,1)");
    if (!(miss_prob >= 0.0 && miss_prob < 1.0))
      throw ConfigError("sim: miss_prob must be in [0,1)");
    if (static_cast<long>(q) * (per_tissue_eqtls - s) > p - s)
      throw ConfigError(
          "sim: infeasible support layout, q*(per_tissue_eqtls - s) > p - s");
  }
};

struct SimTruth {
  Matrix beta_star;  // p x q
  BoolMask support;  // nonzero pattern of beta_star
  Matrix sigma_e;    // q x q correlation matrix
  Vector d_e;        // per-tissue noise scales
};

struct SimData {
  Matrix x_raw;  // dosage values as written to disk
  Matrix x;      // column-standardized design used to generate Y
  Matrix y;      // complete response matrix
  BoolMask observed;
  std::vector<int> train_idx, val_idx, test_idx;
};

struct Simulation {
  SimTruth truth;
  SimData data;
};

// Correlated three-level dosage design: latent AR(1) normal chain
// (correlation 0.7) thresholded at the standard-normal quartiles, mimicking
// linkage disequilibrium among predictors.
inline Matrix gen_design(const SimConfig& cfg, Rng& rng) {
  constexpr double kQuartile = 0.674489750196082;
  const double carry = 0.7;
  const double fresh = std::sqrt(1.0 - carry * carry);
  Matrix x(cfg.n, cfg.p);
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (int i = 0; i < cfg.n; ++i) {
      double z = rng.normal();
      for (int j = 0; j < cfg.p; ++j) {
        if (j > 0) z = carry * z + fresh * rng.normal();
        x(i, j) = z < -kQuartile ? 0.0 : (z > kQuartile ? 2.0 : 1.0);
      }
    }
    bool constant = false;
    for (int j = 0; j < cfg.p && !constant; ++j)
      constant = (x.col(j).array() == x(0, j)).all();
    if (!constant) return x;
  }
  throw ConfigError("gen_design: could not avoid constant columns");
}

// beta* = B o S + B o U: s rows shared across all tissues, each column given
// per_tissue_eqtls - s private rows drawn disjointly from the remaining pool.
inline SimTruth gen_beta_star(const SimConfig& cfg, Rng& rng) {
  cfg.validate();
  const int extra = cfg.per_tissue_eqtls - cfg.s;

  SimTruth truth;
  truth.beta_star = Matrix::Zero(cfg.p, cfg.q);
  truth.support = BoolMask::Constant(cfg.p, cfg.q, false);

  Matrix b(cfg.p, cfg.q);
  for (int j = 0; j < cfg.p; ++j)
    for (int k = 0; k < cfg.q; ++k) b(j, k) = rng.normal();

  const std::vector<int> shared = rng.sample_without_replacement(cfg.p, cfg.s);
  std::vector<bool> is_shared(static_cast<std::size_t>(cfg.p), false);
  for (int j : shared) is_shared[static_cast<std::size_t>(j)] = true;
  for (int j : shared)
    for (int k = 0; k < cfg.q; ++k) {
      truth.support(j, k) = true;
      truth.beta_star(j, k) = b(j, k);
    }

  if (extra > 0) {
    std::vector<int> pool;
    for (int j = 0; j < cfg.p; ++j)
      if (!is_shared[static_cast<std::size_t>(j)]) pool.push_back(j);
    rng.shuffle(pool);
    std::size_t next = 0;
    for (int k = 0; k < cfg.q; ++k)
      for (int t = 0; t < extra; ++t) {
        const int j = pool[next++];
        truth.support(j, k) = true;
        truth.beta_star(j, k) = b(j, k);
      }
  }
  return truth;
}

// Block-correlated error correlation matrix: one block at rho + 0.2, one at
// rho, 1 on the diagonal, 0 elsewhere. With q >= 20 the blocks are columns
// 1-10 and 11-20; smaller q uses proportionally scaled block sizes (a
// non-paper layout for reduced test instances).
inline Matrix gen_sigma_e(double rho, int q) {
  if (q < 1) throw ConfigError("gen_sigma_e: q must be >= 1");
  if (!(rho >= 0.0 && rho < 0.8))
    throw ConfigError("gen_sigma_e: rho must lie in [0, 0.8)");
  int b1 = 10, b2 = 10;
  if (q < 20) {
    b1 = std::max(1, static_cast<int>(std::lround(10.0 * q / 29.0)));
    b2 = std::min(b1, q - b1);
    if (b2 < 0) b2 = 0;
  }
  Matrix sigma = Matrix::Identity(q, q);
  for (int j = 0; j < b1; ++j)
    for (int k = 0; k < b1; ++k)
      if (j != k) sigma(j, k) = rho + 0.2;
  for (int j = b1; j < b1 + b2; ++j)
    for (int k = b1; k < b1 + b2; ++k)
      if (j != k) sigma(j, k) = rho;
  return sigma;
}

// Noise scales hitting the target per-tissue R^2: d_k = sqrt(v_k (1-r2)/r2)
// with v_k the empirical variance of the signal column (X beta*)_k.
inline Vector gen_noise_scale(const Matrix& beta_star, const Matrix& x,
                              const Matrix& sigma_e, double r2) {
  if (!(r2 > 0.0 && r2 < 1.0))
    throw ConfigError("gen_noise_scale: r2 must be in (0,1)");
  if (sigma_e.rows() != beta_star.cols())
    throw DimensionError("gen_noise_scale: sigma_e dimension mismatch");
  const Matrix signal = x * beta_star;
  const ColumnStats st = column_stats(signal);
  Vector d(beta_star.cols());
  for (Eigen::Index k = 0; k < beta_star.cols(); ++k) {
    const double v = st.scale(k) * st.scale(k);
    if (v == 0.0)
      throw ConfigError("gen_noise_scale: zero signal variance in column " +
                        std::to_string(k));
    d(k) = std::sqrt(v * (1.0 - r2) / r2);
  }
  return d;
}

// Draws Y = X beta* + E with E ~ N(0, D Sigma_E D), splits subjects into
// train/validation/test, and masks training and validation responses with
// independent Bernoulli(miss_prob) missingness. Test responses stay complete.
// Degenerate masks (an all-missing subject row or an unobserved training
// column) are redrawn.
inline SimData gen_dataset(const SimConfig& cfg, const SimTruth& truth,
                           const Matrix& x_std, Rng& rng) {
  const int n = cfg.n;
  const int q = cfg.q;
  const Matrix cov = truth.d_e.asDiagonal() * truth.sigma_e *
                     truth.d_e.asDiagonal();
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success)
    throw DegenerateCovarianceError("gen_dataset: error covariance not PD");
  const Matrix chol_l = llt.matrixL();

  SimData out;
  out.x = x_std;
  out.y = x_std * truth.beta_star;
  Vector z(q);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < q; ++k) z(k) = rng.normal();
    out.y.row(i) += (chol_l * z).transpose();
  }

  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  rng.shuffle(perm);
  out.train_idx.assign(perm.begin(), perm.begin() + cfg.n_train);
  out.val_idx.assign(perm.begin() + cfg.n_train,
                     perm.begin() + cfg.n_train + cfg.n_val);
  out.test_idx.assign(perm.begin() + cfg.n_train + cfg.n_val, perm.end());

  out.observed = BoolMask::Constant(n, q, true);
  std::vector<bool> maskable(static_cast<std::size_t>(n), false);
  for (int i : out.train_idx) maskable[static_cast<std::size_t>(i)] = true;
  for (int i : out.val_idx) maskable[static_cast<std::size_t>(i)] = true;

  auto draw_row = [&](int i) {
    for (int k = 0; k < q; ++k)
      out.observed(i, k) = !rng.bernoulli(cfg.miss_prob);
  };
  for (int i = 0; i < n; ++i)
    if (maskable[static_cast<std::size_t>(i)]) draw_row(i);

  for (int attempt = 0; attempt < 100; ++attempt) {
    bool clean = true;
    // Subjects must keep at least one observed response.
    for (int i = 0; i < n; ++i) {
      if (!maskable[static_cast<std::size_t>(i)]) continue;
      while (!out.observed.row(i).any()) {
        draw_row(i);
        clean = false;
      }
    }
    // Training columns must keep at least one observation.
    for (int k = 0; k < q; ++k) {
      bool any = false;
      for (int i : out.train_idx) any = any || out.observed(i, k);
      if (!any) {
        for (int i : out.train_idx)
          out.observed(i, k) = !rng.bernoulli(cfg.miss_prob);
        clean = false;
      }
    }
    if (clean) return out;
  }
  throw ConfigError("gen_dataset: failed to draw a usable missingness mask");
}

// Full pipeline under one seed. An externally loaded design can replace the
// synthetic dosage draw (paper-scale genotypes are not redistributable).
inline Simulation simulate(const SimConfig& cfg,
                           const Matrix* x_external = nullptr) {
  cfg.validate();
  Rng rng(cfg.seed);

  Matrix x_raw;
  if (x_external != nullptr) {
    if (x_external->rows() != cfg.n || x_external->cols() != cfg.p)
      throw DimensionError("simulate: external design has wrong shape");
    x_raw = *x_external;
  } else {
    x_raw = gen_design(cfg, rng);
  }
  const ColumnStats st = column_stats(x_raw);
  for (Eigen::Index j = 0; j < x_raw.cols(); ++j)
    if (st.scale(j) == 0.0)
      throw DataError("simulate: constant design column " + std::to_string(j));
  const Matrix x_std = standardize_columns(x_raw, st);

  Simulation sim;
  sim.truth = gen_beta_star(cfg, rng);
  sim.truth.sigma_e = gen_sigma_e(cfg.rho, cfg.q);
  sim.truth.d_e = gen_noise_scale(sim.truth.beta_star, x_std,
                                  sim.truth.sigma_e, cfg.r2);
  sim.data = gen_dataset(cfg, sim.truth, x_std, rng);
  sim.data.x_raw = std::move(x_raw);
  return sim;
}

}  // namespace covmt
