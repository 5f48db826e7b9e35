#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "covmt/beta_prox.hpp"
#include "covmt/parallel.hpp"
#include "covmt/types.hpp"

namespace covmt {

// Missingness weight matrix: M_{ik} = n_k^{-1/2} where observed, else 0, so
// each fully observed column has unit sum of squared weights.
inline Matrix missingness_weights(const DataSet& data) {
  Matrix m = Matrix::Zero(data.n(), data.q());
  for (int k = 0; k < data.q(); ++k) {
    const double w = 1.0 / std::sqrt(static_cast<double>(data.observed_count(k)));
    for (int i = 0; i < data.n(); ++i)
      if (data.observed()(i, k)) m(i, k) = w;
  }
  return m;
}

// Complete-case multi-tissue estimator:
//   min_beta (1/2n) ||(Y - X beta) o M||_F^2 + lambda_beta P_beta^(alpha);
// lambda_omega in `pen` is ignored. Solved with the same accelerated
// proximal machinery as the weighted-RSS step; masked entries contribute
// nothing to gradient or objective.
inline Matrix fit_mt(const DataSet& data, const PenaltyConfig& pen,
                     const SolverConfig& cfg,
                     const Matrix* beta_init = nullptr,
                     BetaSolveInfo* info = nullptr) {
  pen.validate();
  cfg.validate();
  const double n = static_cast<double>(data.n());
  const Matrix m = missingness_weights(data);
  const Matrix m2 = m.array().square().matrix();
  Matrix y0 = data.y();
  for (int i = 0; i < data.n(); ++i)
    for (int k = 0; k < data.q(); ++k)
      if (!data.observed()(i, k)) y0(i, k) = 0.0;

  auto eval = [&](const Matrix& beta) {
    detail::SmoothEval ev;
    const Matrix resid = y0 - data.x() * beta;
    ev.value = (resid.array().square() * m2.array()).sum() / (2.0 * n);
    ev.grad = (-1.0 / n) *
              (data.x().transpose() * (resid.array() * m2.array()).matrix());
    return ev;
  };

  const double xtx_max = detail::power_iteration_max_eig(
      [&](const Vector& v) {
        return Vector(data.x().transpose() * (data.x() * v));
      },
      data.x().cols());
  double max_weight = 0.0;
  for (int k = 0; k < data.q(); ++k)
    max_weight =
        std::max(max_weight, 1.0 / static_cast<double>(data.observed_count(k)));
  const double lipschitz = xtx_max * max_weight / n;

  const Matrix start = beta_init != nullptr
                           ? *beta_init
                           : Matrix::Zero(data.p(), data.q());
  return detail::fista_sparse_group(
      eval, lipschitz, pen.lambda_beta * pen.alpha,
      pen.lambda_beta * (1.0 - pen.alpha), start, cfg, info, {});
}

// Per-column elastic-net grid. A shared lambda list may be given; otherwise a
// log-spaced path is built per (column, alpha) from the null threshold.
struct EnGrid {
  std::vector<double> alphas{0.25, 0.5, 0.75, 1.0};
  std::vector<double> lambdas;  // optional explicit grid
  int n_lambda = 20;
  double lambda_min_ratio = 1e-3;
  double cd_tol = 1e-8;
  int cd_max_iters = 10000;
};

struct EnColumnSelection {
  double lambda = 0.0;
  double alpha = 0.0;
  double val_r2 = 0.0;
  bool flagged = false;  // empty/degenerate validation column, weights zero
};

struct EnResult {
  Matrix beta;
  std::vector<EnColumnSelection> selection;
};

namespace detail {

// Coordinate descent for one column:
//   min (w/2) sum_{i in rows} (y_i - x_i'b)^2 + lambda alpha ||b||_1
//       + lambda (1-alpha) ||b||_2^2
inline void en_coordinate_descent(const Matrix& x_rows, const Vector& y_rows,
                                  double w, double lambda, double alpha,
                                  const Vector& col_sq, Vector& beta,
                                  Vector& resid, double tol, int max_iters) {
  const Eigen::Index p = x_rows.cols();
  for (int it = 0; it < max_iters; ++it) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double rho =
          w * (x_rows.col(j).dot(resid) + col_sq(j) * beta(j));
      const double denom = w * col_sq(j) + 2.0 * lambda * (1.0 - alpha);
      const double bj = soft_threshold(rho, lambda * alpha) / denom;
      const double change = bj - beta(j);
      if (change != 0.0) {
        resid -= change * x_rows.col(j);
        beta(j) = bj;
        max_change = std::max(max_change, std::abs(change));
      }
    }
    if (max_change <= tol) break;
  }
}

}  // namespace detail

// Tissue-by-tissue elastic net on observed entries. `data` holds the
// training and validation rows together; `validation_idx` names the
// validation rows, everything else trains. Per column, (lambda, alpha) is
// chosen to maximize validation R^2 for that column.
inline EnResult fit_en(const DataSet& data, const EnGrid& grid,
                       const std::vector<int>& validation_idx) {
  const int p = data.p();
  const int q = data.q();
  std::vector<bool> is_val(static_cast<std::size_t>(data.n()), false);
  for (int i : validation_idx) is_val[static_cast<std::size_t>(i)] = true;

  EnResult out;
  out.beta = Matrix::Zero(p, q);
  out.selection.resize(static_cast<std::size_t>(q));

  parallel_for_chunks(static_cast<std::size_t>(q), 1, [&](std::size_t kb,
                                                          std::size_t ke) {
    for (std::size_t kz = kb; kz < ke; ++kz) {
      const int k = static_cast<int>(kz);
      std::vector<int> train_rows, val_rows;
      for (int i = 0; i < data.n(); ++i) {
        if (!data.observed()(i, k)) continue;
        (is_val[static_cast<std::size_t>(i)] ? val_rows : train_rows)
            .push_back(i);
      }
      if (train_rows.size() < 2)
        throw DataError("elastic net: column " + std::to_string(k) +
                        " has fewer than 2 observed training values");

      EnColumnSelection& sel = out.selection[kz];
      if (val_rows.empty()) {
        sel.flagged = true;
        continue;
      }

      const Eigen::Index nt = static_cast<Eigen::Index>(train_rows.size());
      Matrix x_rows(nt, p);
      Vector y_rows(nt);
      for (Eigen::Index r = 0; r < nt; ++r) {
        x_rows.row(r) = data.x().row(train_rows[static_cast<std::size_t>(r)]);
        y_rows(r) = data.y()(train_rows[static_cast<std::size_t>(r)], k);
      }
      const Vector col_sq = x_rows.array().square().colwise().sum();
      const int n_train_total =
          data.n() - static_cast<int>(validation_idx.size());
      const double w =
          1.0 / (static_cast<double>(n_train_total) * static_cast<double>(nt));

      const double train_mean = y_rows.mean();
      double sst = 0.0;
      for (int i : val_rows) {
        const double d = data.y()(i, k) - train_mean;
        sst += d * d;
      }
      if (sst == 0.0) {
        sel.flagged = true;
        continue;
      }

      double best_r2 = -std::numeric_limits<double>::infinity();
      Vector best_beta = Vector::Zero(p);
      const double grad_max =
          (w * (x_rows.transpose() * y_rows)).cwiseAbs().maxCoeff();

      for (double alpha : grid.alphas) {
        std::vector<double> lambdas = grid.lambdas;
        if (lambdas.empty()) {
          const double lmax = grad_max / std::max(alpha, 1e-3);
          const double lmin = lmax * grid.lambda_min_ratio;
          for (int t = 0; t < grid.n_lambda; ++t) {
            const double f =
                grid.n_lambda == 1
                    ? 0.0
                    : static_cast<double>(t) / (grid.n_lambda - 1);
            lambdas.push_back(lmax * std::pow(lmin / lmax, f));
          }
        } else {
          std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
        }

        Vector beta = Vector::Zero(p);
        Vector resid = y_rows;
        for (double lambda : lambdas) {
          detail::en_coordinate_descent(x_rows, y_rows, w, lambda, alpha,
                                        col_sq, beta, resid, grid.cd_tol,
                                        grid.cd_max_iters);
          double sse = 0.0;
          for (int i : val_rows) {
            const double pred = data.x().row(i) * beta;
            const double d = data.y()(i, k) - pred;
            sse += d * d;
          }
          const double r2 = 1.0 - sse / sst;
          const bool better =
              r2 > best_r2 ||
              (r2 == best_r2 &&
               (lambda > sel.lambda ||
                (lambda == sel.lambda && alpha > sel.alpha)));
          if (better) {
            best_r2 = r2;
            best_beta = beta;
            sel.lambda = lambda;
            sel.alpha = alpha;
            sel.val_r2 = r2;
          }
        }
      }
      out.beta.col(k) = best_beta;
    }
  });
  return out;
}

// K-nearest-neighbor imputation: distances over commonly observed columns
// (root mean square difference), inverse-distance weighted mean of the k
// nearest subjects observing the target column. Ties break by subject index.
inline Matrix knn_impute(const DataSet& data, int k) {
  if (k < 1) throw ConfigError("knn_impute: k must be >= 1");
  const int n = data.n();
  const int q = data.q();
  Matrix completed = data.y();
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < q; ++c)
      if (!data.observed()(i, c)) completed(i, c) = 0.0;

  Vector col_means(q);
  for (int c = 0; c < q; ++c) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
      if (data.observed()(i, c)) sum += data.y()(i, c);
    col_means(c) = sum / data.observed_count(c);
  }

  parallel_for_chunks(static_cast<std::size_t>(n), 16, [&](std::size_t ib,
                                                           std::size_t ie) {
    std::vector<std::pair<double, int>> cand;
    for (std::size_t iz = ib; iz < ie; ++iz) {
      const int i = static_cast<int>(iz);
      const auto& missing = data.missing_idx(i);
      for (int j : missing) {
        cand.clear();
        for (int t = 0; t < n; ++t) {
          if (t == i || !data.observed()(t, j)) continue;
          double sq = 0.0;
          int shared = 0;
          for (int c : data.observed_idx(i)) {
            if (!data.observed()(t, c)) continue;
            const double d = data.y()(i, c) - data.y()(t, c);
            sq += d * d;
            ++shared;
          }
          if (shared == 0) continue;
          cand.emplace_back(std::sqrt(sq / shared), t);
        }
        if (cand.empty()) {
          completed(i, j) = col_means(j);
          continue;
        }
        std::sort(cand.begin(), cand.end());
        const std::size_t take =
            std::min<std::size_t>(static_cast<std::size_t>(k), cand.size());

        double wsum = 0.0, acc = 0.0;
        int exact = 0;
        double exact_acc = 0.0;
        for (std::size_t t = 0; t < take; ++t) {
          const double d = cand[t].first;
          const double val = data.y()(cand[t].second, j);
          if (d <= 1e-12) {
            ++exact;
            exact_acc += val;
          } else {
            wsum += 1.0 / d;
            acc += val / d;
          }
        }
        completed(i, j) = exact > 0 ? exact_acc / exact : acc / wsum;
      }
    }
  });
  return completed;
}

}  // namespace covmt
