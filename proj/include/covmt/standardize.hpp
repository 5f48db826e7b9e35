#pragma once

#include <cmath>

#include "covmt/types.hpp"

namespace covmt {

// Column centering/scaling constants (sample standard deviation, n-1).
struct ColumnStats {
  Vector mean;
  Vector scale;
};

inline ColumnStats column_stats(const Matrix& x) {
  ColumnStats st;
  st.mean = x.colwise().mean();
  st.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double ss = (x.col(j).array() - st.mean(j)).square().sum();
    st.scale(j) = x.rows() > 1 ? std::sqrt(ss / (x.rows() - 1)) : 0.0;
  }
  return st;
}

// Stats over observed entries only; unobserved entries are ignored.
inline ColumnStats observed_column_stats(const Matrix& y,
                                         const BoolMask& mask) {
  ColumnStats st;
  st.mean = Vector::Zero(y.cols());
  st.scale = Vector::Zero(y.cols());
  for (Eigen::Index k = 0; k < y.cols(); ++k) {
    double sum = 0.0;
    int cnt = 0;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      if (!mask(i, k)) continue;
      sum += y(i, k);
      ++cnt;
    }
    const double mean = cnt > 0 ? sum / cnt : 0.0;
    double ss = 0.0;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      if (!mask(i, k)) continue;
      const double d = y(i, k) - mean;
      ss += d * d;
    }
    st.mean(k) = mean;
    st.scale(k) = cnt > 1 ? std::sqrt(ss / (cnt - 1)) : 0.0;
  }
  return st;
}

// (x - mean) / scale per column. Zero scales must be rejected by the caller
// beforehand (constant columns carry no signal and break the convention).
inline Matrix standardize_columns(const Matrix& x, const ColumnStats& st) {
  Matrix out = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    out.col(j) = (x.col(j).array() - st.mean(j)) / st.scale(j);
  return out;
}

}  // namespace covmt
