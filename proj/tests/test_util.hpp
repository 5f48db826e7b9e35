#pragma once

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "covmt/rng.hpp"
#include "covmt/types.hpp"

namespace covmt::testing {

// Compares two long-format TSV reports cell by cell: non-numeric cells must
// match exactly, numeric cells within `tol`. Returns the largest numeric
// deviation; throws on structural mismatch.
inline double compare_long_tsv(const std::string& path_a,
                               const std::string& path_b, double tol) {
  std::ifstream a(path_a), b(path_b);
  if (!a || !b) throw DataError("compare_long_tsv: cannot open inputs");
  std::string la, lb;
  double worst = 0.0;
  int line = 0;
  for (;;) {
    const bool got_a = static_cast<bool>(std::getline(a, la));
    const bool got_b = static_cast<bool>(std::getline(b, lb));
    if (got_a != got_b)
      throw DataError("compare_long_tsv: line count mismatch");
    if (!got_a) return worst;
    ++line;
    std::stringstream sa(la), sb(lb);
    std::string ca, cb;
    for (;;) {
      const bool more_a = static_cast<bool>(std::getline(sa, ca, '\t'));
      const bool more_b = static_cast<bool>(std::getline(sb, cb, '\t'));
      if (more_a != more_b)
        throw DataError("compare_long_tsv: field count mismatch at line " +
                        std::to_string(line));
      if (!more_a) break;
      char* end_a = nullptr;
      char* end_b = nullptr;
      const double va = std::strtod(ca.c_str(), &end_a);
      const double vb = std::strtod(cb.c_str(), &end_b);
      const bool num_a = end_a != ca.c_str() && *end_a == '\0';
      const bool num_b = end_b != cb.c_str() && *end_b == '\0';
      if (num_a && num_b) {
        const double diff = std::abs(va - vb);
        if (diff > tol)
          throw DataError("compare_long_tsv: numeric gap " +
                          std::to_string(diff) + " at line " +
                          std::to_string(line));
        worst = std::max(worst, diff);
      } else if (ca != cb) {
        throw DataError("compare_long_tsv: cell mismatch at line " +
                        std::to_string(line));
      }
    }
  }
}

inline Matrix random_matrix(Rng& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

// Random well-conditioned SPD matrix: A A' + ridge I.
inline Matrix random_spd(Rng& rng, int q, double ridge = 0.5) {
  const Matrix a = random_matrix(rng, q, q);
  Matrix s = a * a.transpose() / static_cast<double>(q) +
             ridge * Matrix::Identity(q, q);
  return 0.5 * (s + s.transpose().eval());
}

// Random correlation-like SPD matrix with unit-ish diagonal.
inline Matrix random_covariance(Rng& rng, int q) {
  Matrix s = random_spd(rng, q, 0.4);
  Vector d = s.diagonal().cwiseSqrt();
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) s(i, j) /= d(i) * d(j);
  return 0.5 * (s + s.transpose().eval());
}

// Random dataset with Bernoulli missingness; every subject keeps at least one
// observed response and every column at least one observation.
inline DataSet random_dataset(Rng& rng, int n, int p, int q,
                              double miss_prob) {
  const Matrix x = random_matrix(rng, n, p);
  const Matrix y = random_matrix(rng, n, q);
  BoolMask mask(n, q);
  for (;;) {
    for (int i = 0; i < n; ++i) {
      for (;;) {
        bool any = false;
        for (int k = 0; k < q; ++k) {
          const bool obs = !rng.bernoulli(miss_prob);
          mask(i, k) = obs;
          any = any || obs;
        }
        if (any) break;
      }
    }
    bool cols_ok = true;
    for (int k = 0; k < q; ++k) {
      bool any = false;
      for (int i = 0; i < n; ++i) any = any || mask(i, k);
      cols_ok = cols_ok && any;
    }
    if (cols_ok) break;
  }
  return DataSet(x, y, mask);
}

inline ModelFit random_fit(Rng& rng, int p, int q) {
  return ModelFit(random_matrix(rng, p, q), random_spd(rng, q));
}

}  // namespace covmt::testing
