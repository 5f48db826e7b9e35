#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "covmt/errors.hpp"

namespace covmt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Tuning triple (alpha, lambda_beta, lambda_omega).
struct PenaltyConfig {
  double alpha = 1.0;
  double lambda_beta = 0.0;
  double lambda_omega = 0.0;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0))
      throw ConfigError("alpha must be in [0,1]");
    if (!(lambda_beta >= 0.0))
      throw ConfigError("lambda_beta must be nonnegative");
    if (!(lambda_omega >= 0.0))
      throw ConfigError("lambda_omega must be nonnegative");
  }
};

enum class StepSizeRule { kFixedLipschitz, kBacktracking };

struct SolverConfig {
  int max_ecm_iters = 200;
  double ecm_tol = 1e-6;        // relative objective-change tolerance
  int max_prox_iters = 2000;
  double prox_tol = 1e-6;       // fixed-point residual tolerance
  StepSizeRule step_size_rule = StepSizeRule::kFixedLipschitz;
  double backtracking_shrink = 0.5;
  double glasso_tol = 1e-6;     // max abs change of precision entries per sweep
  int max_glasso_iters = 500;
  bool penalize_omega_diagonal = true;
  std::uint64_t seed = 0;

  void validate() const {
    if (max_ecm_iters < 1 || max_prox_iters < 1 || max_glasso_iters < 1)
      throw ConfigError("iteration caps must be >= 1");
    if (!(ecm_tol > 0.0 && prox_tol > 0.0 && glasso_tol > 0.0))
      throw ConfigError("tolerances must be positive");
    if (!(backtracking_shrink > 0.0 && backtracking_shrink < 1.0))
      throw ConfigError("backtracking_shrink must be in (0,1)");
  }
};

// Subjects sharing one missingness pattern; likelihood and E-step code factor
// the corresponding covariance submatrix once per group.
struct PatternGroup {
  std::vector<int> observed;  // response columns observed under this pattern
  std::vector<int> missing;
  std::vector<int> subjects;  // rows sharing the pattern, ascending
};

// Genotype/response pair with a per-entry observation mask. Masked response
// entries are never read by any likelihood computation; their stored values
// are arbitrary. Column centering/scaling is the loader's job, not enforced
// here (solvers do not require it).
class DataSet {
 public:
  DataSet(Matrix x, Matrix y, BoolMask observed)
      : x_(std::move(x)), y_(std::move(y)), observed_(std::move(observed)) {
    if (y_.rows() != x_.rows())
      throw DimensionError("X and Y must have the same number of rows");
    if (observed_.rows() != y_.rows() || observed_.cols() != y_.cols())
      throw DimensionError("mask shape must equal Y shape");

    const int n = static_cast<int>(y_.rows());
    const int q = static_cast<int>(y_.cols());
    observed_idx_.resize(static_cast<std::size_t>(n));
    missing_idx_.resize(static_cast<std::size_t>(n));
    observed_count_.assign(static_cast<std::size_t>(q), 0);

    std::vector<std::string> keys(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      std::string key(static_cast<std::size_t>(q), '0');
      for (int k = 0; k < q; ++k) {
        if (observed_(i, k)) {
          observed_idx_[static_cast<std::size_t>(i)].push_back(k);
          ++observed_count_[static_cast<std::size_t>(k)];
          key[static_cast<std::size_t>(k)] = '1';
        } else {
          missing_idx_[static_cast<std::size_t>(i)].push_back(k);
        }
      }
      if (observed_idx_[static_cast<std::size_t>(i)].empty())
        throw DataError("subject " + std::to_string(i) +
                        " has no observed responses");
      keys[static_cast<std::size_t>(i)] = std::move(key);
    }
    for (int k = 0; k < q; ++k) {
      if (observed_count_[static_cast<std::size_t>(k)] == 0)
        throw DataError("response column " + std::to_string(k) +
                        " has no observed entries");
    }

    // Group subjects by pattern, first-seen order.
    std::vector<std::pair<std::string, int>> seen;  // key -> pattern index
    for (int i = 0; i < n; ++i) {
      int idx = -1;
      for (const auto& [key, at] : seen) {
        if (key == keys[static_cast<std::size_t>(i)]) {
          idx = at;
          break;
        }
      }
      if (idx < 0) {
        idx = static_cast<int>(patterns_.size());
        seen.emplace_back(keys[static_cast<std::size_t>(i)], idx);
        PatternGroup g;
        g.observed = observed_idx_[static_cast<std::size_t>(i)];
        g.missing = missing_idx_[static_cast<std::size_t>(i)];
        patterns_.push_back(std::move(g));
      }
      patterns_[static_cast<std::size_t>(idx)].subjects.push_back(i);
    }
  }

  int n() const { return static_cast<int>(x_.rows()); }
  int p() const { return static_cast<int>(x_.cols()); }
  int q() const { return static_cast<int>(y_.cols()); }

  const Matrix& x() const { return x_; }
  const Matrix& y() const { return y_; }
  const BoolMask& observed() const { return observed_; }

  const std::vector<int>& observed_idx(int i) const {
    return observed_idx_[static_cast<std::size_t>(i)];
  }
  const std::vector<int>& missing_idx(int i) const {
    return missing_idx_[static_cast<std::size_t>(i)];
  }
  int observed_count(int k) const {
    return observed_count_[static_cast<std::size_t>(k)];
  }
  const std::vector<PatternGroup>& patterns() const { return patterns_; }

  bool fully_observed() const {
    return patterns_.size() == 1 && patterns_[0].missing.empty();
  }

  // Row-subset copy (e.g. train/validation/test splits).
  DataSet rows(const std::vector<int>& idx) const {
    Matrix xs(static_cast<Eigen::Index>(idx.size()), x_.cols());
    Matrix ys(static_cast<Eigen::Index>(idx.size()), y_.cols());
    BoolMask ms(static_cast<Eigen::Index>(idx.size()), y_.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      xs.row(static_cast<Eigen::Index>(r)) = x_.row(idx[r]);
      ys.row(static_cast<Eigen::Index>(r)) = y_.row(idx[r]);
      ms.row(static_cast<Eigen::Index>(r)) = observed_.row(idx[r]);
    }
    return DataSet(std::move(xs), std::move(ys), std::move(ms));
  }

 private:
  Matrix x_;
  Matrix y_;
  BoolMask observed_;
  std::vector<std::vector<int>> observed_idx_;
  std::vector<std::vector<int>> missing_idx_;
  std::vector<int> observed_count_;
  std::vector<PatternGroup> patterns_;
};

// Coefficient matrix beta (p x q) together with the error precision omega
// (q x q, symmetric positive definite) and its cached inverse sigma.
class ModelFit {
 public:
  ModelFit(Matrix beta, Matrix omega)
      : beta_(std::move(beta)), omega_(std::move(omega)) {
    if (omega_.rows() != omega_.cols())
      throw DimensionError("omega must be square");
    if (beta_.cols() != omega_.rows())
      throw DimensionError("beta column count must match omega dimension");
    const double asym = (omega_ - omega_.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10)
      throw DegenerateCovarianceError("omega is not symmetric (max asymmetry " +
                                      std::to_string(asym) + ")");
    Eigen::LLT<Matrix> llt(omega_);
    if (llt.info() != Eigen::Success)
      throw DegenerateCovarianceError("omega is not positive definite");
    sigma_ = llt.solve(Matrix::Identity(omega_.rows(), omega_.cols()));
    sigma_ = 0.5 * (sigma_ + sigma_.transpose().eval());
  }

  static ModelFit identity_precision(int p, int q) {
    return ModelFit(Matrix::Zero(p, q), Matrix::Identity(q, q));
  }

  const Matrix& beta() const { return beta_; }
  const Matrix& omega() const { return omega_; }
  const Matrix& sigma() const { return sigma_; }
  int p() const { return static_cast<int>(beta_.rows()); }
  int q() const { return static_cast<int>(beta_.cols()); }

 private:
  Matrix beta_;
  Matrix omega_;
  Matrix sigma_;
};

namespace detail {

inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// Gathers the (rows, cols) submatrix of a square matrix.
inline Matrix submatrix(const Matrix& a, const std::vector<int>& rows,
                        const std::vector<int>& cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          a(rows[r], cols[c]);
  return out;
}

inline Vector subvector(const Vector& v, const std::vector<int>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r)
    out(static_cast<Eigen::Index>(r)) = v(idx[r]);
  return out;
}

}  // namespace detail

}  // namespace covmt
