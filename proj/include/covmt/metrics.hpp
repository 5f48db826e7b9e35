#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "covmt/types.hpp"

namespace covmt {

// Per-tissue test R^2 with the paper's convention: 1 - SSE / SST against the
// training-mean predictor; may be negative. Columns with zero SST are
// flagged and excluded from the average.
struct R2Result {
  Vector per_tissue;
  std::vector<bool> flagged;
  double average = 0.0;
};

inline Vector observed_column_means(const Matrix& y, const BoolMask& mask) {
  Vector means(y.cols());
  for (Eigen::Index k = 0; k < y.cols(); ++k) {
    double sum = 0.0;
    int cnt = 0;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      if (!mask(i, k)) continue;
      sum += y(i, k);
      ++cnt;
    }
    means(k) = cnt > 0 ? sum / cnt : 0.0;
  }
  return means;
}

// R^2 from precomputed predictions. When `mask` is given, only observed test
// entries enter the sums (used for masked validation/test folds).
inline R2Result test_r2_from_predictions(const Matrix& yhat,
                                         const Matrix& y_test,
                                         const Vector& train_col_means,
                                         const BoolMask* mask = nullptr) {
  if (yhat.rows() != y_test.rows() || yhat.cols() != y_test.cols())
    throw DimensionError("test_r2: prediction/test shape mismatch");
  if (train_col_means.size() != y_test.cols())
    throw DimensionError("test_r2: train mean length mismatch");

  const Eigen::Index q = y_test.cols();
  R2Result out;
  out.per_tissue = Vector::Zero(q);
  out.flagged.assign(static_cast<std::size_t>(q), false);
  double acc = 0.0;
  int used = 0;
  for (Eigen::Index k = 0; k < q; ++k) {
    double sse = 0.0, sst = 0.0;
    for (Eigen::Index i = 0; i < y_test.rows(); ++i) {
      if (mask != nullptr && !(*mask)(i, k)) continue;
      const double e = y_test(i, k) - yhat(i, k);
      const double b = y_test(i, k) - train_col_means(k);
      sse += e * e;
      sst += b * b;
    }
    if (sst == 0.0) {
      out.flagged[static_cast<std::size_t>(k)] = true;
      out.per_tissue(k) = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    out.per_tissue(k) = 1.0 - sse / sst;
    acc += out.per_tissue(k);
    ++used;
  }
  out.average = used > 0 ? acc / used
                         : std::numeric_limits<double>::quiet_NaN();
  return out;
}

inline R2Result test_r2(const Matrix& beta_hat, const Matrix& x_test,
                        const Matrix& y_test, const Vector& train_col_means,
                        const BoolMask* mask = nullptr) {
  if (x_test.cols() != beta_hat.rows())
    throw DimensionError("test_r2: X_test/beta shape mismatch");
  return test_r2_from_predictions(x_test * beta_hat, y_test, train_col_means,
                                  mask);
}

constexpr double kNonzeroTol = 1e-12;

// Proportion of nonzero entries of beta_hat; entries below kNonzeroTol in
// magnitude count as zero.
inline double model_size(const Matrix& beta_hat) {
  if (beta_hat.size() == 0) return 0.0;
  int nonzero = 0;
  for (Eigen::Index j = 0; j < beta_hat.rows(); ++j)
    for (Eigen::Index k = 0; k < beta_hat.cols(); ++k)
      if (std::abs(beta_hat(j, k)) >= kNonzeroTol) ++nonzero;
  return static_cast<double>(nonzero) / static_cast<double>(beta_hat.size());
}

// LD-adjusted true positive rate: a true eQTL (j,k) counts as discovered if
// any predictor l with |Cor(X_l, X_j)| > threshold has a nonzero estimated
// weight for response k (j itself qualifies through self-correlation).
inline double ld_adjusted_tpr(const Matrix& beta_hat, const BoolMask& support,
                              const Matrix& x, double cor_threshold = 0.60) {
  const Eigen::Index p = beta_hat.rows();
  const Eigen::Index q = beta_hat.cols();
  if (support.rows() != p || support.cols() != q)
    throw DimensionError("ld_adjusted_tpr: support shape mismatch");
  if (x.cols() != p)
    throw DimensionError("ld_adjusted_tpr: X column count mismatch");

  int total_true = 0;
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index k = 0; k < q; ++k)
      if (support(j, k)) ++total_true;
  if (total_true == 0)
    throw DataError("ld_adjusted_tpr: empty true support");

  // Column correlation matrix of X.
  const Matrix centered = x.rowwise() - x.colwise().mean();
  const Vector norms = centered.colwise().norm();
  Matrix cor = centered.transpose() * centered;
  for (Eigen::Index a = 0; a < p; ++a)
    for (Eigen::Index b = 0; b < p; ++b) {
      const double denom = norms(a) * norms(b);
      cor(a, b) = denom > 0.0 ? cor(a, b) / denom : (a == b ? 1.0 : 0.0);
    }

  std::vector<std::vector<Eigen::Index>> selected(
      static_cast<std::size_t>(q));
  for (Eigen::Index k = 0; k < q; ++k)
    for (Eigen::Index l = 0; l < p; ++l)
      if (std::abs(beta_hat(l, k)) >= kNonzeroTol)
        selected[static_cast<std::size_t>(k)].push_back(l);

  int discovered = 0;
  for (Eigen::Index k = 0; k < q; ++k)
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!support(j, k)) continue;
      for (Eigen::Index l : selected[static_cast<std::size_t>(k)]) {
        if (std::abs(cor(l, j)) > cor_threshold) {
          ++discovered;
          break;
        }
      }
    }
  return static_cast<double>(discovered) / static_cast<double>(total_true);
}

}  // namespace covmt
