#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "covmt/baselines.hpp"
#include "covmt/ecm.hpp"
#include "covmt/metrics.hpp"
#include "covmt/parallel.hpp"
#include "covmt/rng.hpp"

namespace covmt {

enum class Method { kCovMT, kMT, kEN };

inline Method method_from_string(const std::string& s) {
  if (s == "covmt") return Method::kCovMT;
  if (s == "mt") return Method::kMT;
  if (s == "en") return Method::kEN;
  throw ConfigError("unknown method '" + s + "' (expected covmt, mt or en)");
}

inline std::string method_to_string(Method m) {
  switch (m) {
    case Method::kCovMT: return "covmt";
    case Method::kMT: return "mt";
    case Method::kEN: return "en";
  }
  return "?";
}

struct TuningGrid {
  std::vector<double> alphas{0.25, 0.5, 0.75, 1.0};
  std::vector<double> lambda_betas;  // empty -> log path from null threshold
  int n_lambda_beta = 20;
  double lambda_beta_min_ratio = 1e-3;
  std::vector<double> lambda_omegas{0.01, 0.05, 0.1, 0.2, 0.4};

  void validate() const {
    if (alphas.empty()) throw ConfigError("tuning grid: alphas empty");
    if (lambda_betas.empty() &&
        (n_lambda_beta < 1 || !(lambda_beta_min_ratio > 0.0 &&
                                lambda_beta_min_ratio <= 1.0)))
      throw ConfigError("tuning grid: invalid lambda_beta path spec");
    if (lambda_omegas.empty())
      throw ConfigError("tuning grid: lambda_omegas empty");
    for (double a : alphas)
      if (!(a >= 0.0 && a <= 1.0))
        throw ConfigError("tuning grid: alpha out of [0,1]");
  }
};

// Smallest lambda at which beta = 0 satisfies the sparse-group stationarity
// condition given the negative gradient g at zero:
//   || soft(g_j, lambda*alpha) ||_2 <= lambda*(1-alpha)  for every row j.
inline double lambda_beta_max(const Matrix& g, double alpha) {
  const double max_abs = g.cwiseAbs().maxCoeff();
  if (max_abs == 0.0) return 0.0;
  if (alpha >= 1.0) return max_abs;

  double max_row_norm = 0.0;
  for (Eigen::Index j = 0; j < g.rows(); ++j)
    max_row_norm = std::max(max_row_norm, g.row(j).norm());
  if (alpha <= 0.0) return max_row_norm;

  auto violated = [&](double lambda) {
    for (Eigen::Index j = 0; j < g.rows(); ++j) {
      double sq = 0.0;
      for (Eigen::Index k = 0; k < g.cols(); ++k) {
        const double s = detail::soft_threshold(g(j, k), lambda * alpha);
        sq += s * s;
      }
      if (std::sqrt(sq) > lambda * (1.0 - alpha)) return true;
    }
    return false;
  };

  double lo = 0.0;
  double hi = std::max(max_abs / alpha, max_row_norm / (1.0 - alpha));
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (violated(mid) ? lo : hi) = mid;
  }
  return hi;
}

inline std::vector<double> log_spaced_path(double lambda_max, int count,
                                           double min_ratio) {
  std::vector<double> path;
  if (lambda_max <= 0.0) return {0.0};
  for (int t = 0; t < count; ++t) {
    const double f =
        count == 1 ? 0.0 : static_cast<double>(t) / (count - 1);
    path.push_back(lambda_max * std::pow(min_ratio, f));
  }
  return path;
}

struct SelectionEntry {
  double alpha = 0.0;
  double lambda_beta = 0.0;
  double lambda_omega = 0.0;
  double val_r2 = 0.0;
  bool failed = false;
  std::string message;
};

struct FitTraceSummary {
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int iterations = 0;
  bool converged = true;
};

struct GridSearchResult {
  Matrix beta;
  Matrix omega;  // identity for MT and EN
  PenaltyConfig selected;
  double best_val_r2 = 0.0;
  FitTraceSummary trace;  // of the winning fit
  std::vector<SelectionEntry> table;
  std::vector<EnColumnSelection> en_columns;  // EN only
};

namespace detail {

// Ties in validation R^2 break toward the sparser model (larger
// lambda_beta), then larger lambda_omega, then larger alpha; the winner is
// therefore independent of grid enumeration order.
inline bool selection_better(double r2, const PenaltyConfig& pen, double best,
                             const PenaltyConfig& chosen, bool have_best) {
  if (!have_best) return true;
  if (r2 != best) return r2 > best;
  if (pen.lambda_beta != chosen.lambda_beta)
    return pen.lambda_beta > chosen.lambda_beta;
  if (pen.lambda_omega != chosen.lambda_omega)
    return pen.lambda_omega > chosen.lambda_omega;
  return pen.alpha > chosen.alpha;
}

}  // namespace detail

// Fits every grid point on the training rows, scores validation R^2 averaged
// over tissues (observed validation entries only), and returns the winning
// fit with the full selection table. lambda_beta paths are descended with
// warm starts within each (alpha, lambda_omega) chain.
inline GridSearchResult grid_search(const DataSet& data,
                                    const std::vector<int>& train_idx,
                                    const std::vector<int>& val_idx,
                                    Method method, const TuningGrid& grid,
                                    const SolverConfig& cfg) {
  grid.validate();
  cfg.validate();
  for (int i : train_idx)
    for (int j : val_idx)
      if (i == j)
        throw ConfigError("grid_search: train/validation indices overlap");

  const DataSet train = data.rows(train_idx);
  const int p = data.p();
  const int q = data.q();

  Matrix x_val(static_cast<Eigen::Index>(val_idx.size()), p);
  Matrix y_val(static_cast<Eigen::Index>(val_idx.size()), q);
  BoolMask m_val(static_cast<Eigen::Index>(val_idx.size()), q);
  for (std::size_t r = 0; r < val_idx.size(); ++r) {
    x_val.row(static_cast<Eigen::Index>(r)) = data.x().row(val_idx[r]);
    y_val.row(static_cast<Eigen::Index>(r)) = data.y().row(val_idx[r]);
    m_val.row(static_cast<Eigen::Index>(r)) = data.observed().row(val_idx[r]);
  }
  const Vector train_means = observed_column_means(train.y(), train.observed());

  GridSearchResult out;

  if (method == Method::kEN) {
    // Per-column selection happens inside the elastic net itself.
    EnGrid en_grid;
    en_grid.alphas = grid.alphas;
    en_grid.lambdas = grid.lambda_betas;
    en_grid.n_lambda = grid.n_lambda_beta;
    en_grid.lambda_min_ratio = grid.lambda_beta_min_ratio;
    std::vector<int> all_rows(train_idx);
    all_rows.insert(all_rows.end(), val_idx.begin(), val_idx.end());
    std::sort(all_rows.begin(), all_rows.end());
    const DataSet joint = data.rows(all_rows);
    std::vector<int> val_pos;
    for (std::size_t r = 0; r < all_rows.size(); ++r)
      for (int v : val_idx)
        if (all_rows[r] == v) val_pos.push_back(static_cast<int>(r));
    EnResult en = fit_en(joint, en_grid, val_pos);
    out.beta = std::move(en.beta);
    out.omega = Matrix::Identity(q, q);
    out.en_columns = std::move(en.selection);
    out.best_val_r2 =
        test_r2_from_predictions(x_val * out.beta, y_val, train_means, &m_val)
            .average;
    return out;
  }

  // Null-threshold gradient at beta = 0 for the lambda path: the completed
  // response from one E-step at the diagonal start for Cov-MT, the weighted
  // residual for MT.
  const ModelFit start_fit = detail::initial_fit(train);
  Matrix g0;
  if (method == Method::kCovMT) {
    const EStepStats stats = build_estep_stats(start_fit, train);
    g0 = (2.0 / train.n()) *
         (train.x().transpose() * stats.ybar * start_fit.omega());
  } else {
    const Matrix m = missingness_weights(train);
    Matrix y0 = train.y();
    for (int i = 0; i < train.n(); ++i)
      for (int k = 0; k < q; ++k)
        if (!train.observed()(i, k)) y0(i, k) = 0.0;
    g0 = (1.0 / train.n()) *
         (train.x().transpose() * (y0.array() * m.array().square()).matrix());
  }

  struct Chain {
    double alpha;
    double lambda_omega;  // unused for MT
    std::vector<double> path;
    std::vector<SelectionEntry> rows;
    std::optional<PenaltyConfig> best_pen;
    double best_r2 = 0.0;
    Matrix best_beta;
    Matrix best_omega;
    FitTraceSummary best_trace;
  };

  std::vector<Chain> chains;
  for (double alpha : grid.alphas) {
    std::vector<double> path = grid.lambda_betas;
    if (path.empty())
      path = log_spaced_path(lambda_beta_max(g0, alpha), grid.n_lambda_beta,
                             grid.lambda_beta_min_ratio);
    else
      std::sort(path.begin(), path.end(), std::greater<>());
    if (method == Method::kCovMT) {
      for (double lo : grid.lambda_omegas) {
        Chain c;
        c.alpha = alpha;
        c.lambda_omega = lo;
        c.path = path;
        chains.push_back(std::move(c));
      }
    } else {
      Chain c;
      c.alpha = alpha;
      c.lambda_omega = 0.0;
      c.path = path;
      chains.push_back(std::move(c));
    }
  }

  parallel_for_chunks(chains.size(), 1, [&](std::size_t cb, std::size_t ce) {
    for (std::size_t ci = cb; ci < ce; ++ci) {
      Chain& chain = chains[ci];
      std::optional<ModelFit> warm;
      Matrix warm_beta = Matrix::Zero(p, q);
      for (double lb : chain.path) {
        SelectionEntry row;
        row.alpha = chain.alpha;
        row.lambda_beta = lb;
        row.lambda_omega = chain.lambda_omega;
        PenaltyConfig pen;
        pen.alpha = chain.alpha;
        pen.lambda_beta = lb;
        pen.lambda_omega = chain.lambda_omega;
        try {
          Matrix beta_hat;
          Matrix omega_hat;
          FitTraceSummary trace;
          if (method == Method::kCovMT) {
            const EcmResult res = fit_covmt(train, pen, cfg, warm);
            warm = res.fit;
            beta_hat = res.fit.beta();
            omega_hat = res.fit.omega();
            trace.initial_objective = res.trace.initial_objective;
            trace.final_objective = res.trace.final_objective();
            trace.iterations = static_cast<int>(res.trace.iterations.size());
            trace.converged = res.trace.converged;
          } else {
            BetaSolveInfo info;
            try {
              beta_hat = fit_mt(train, pen, cfg, &warm_beta, &info);
            } catch (const NonConvergenceError& e) {
              beta_hat = e.last_iterate;  // still a valid descent iterate
              info.converged = false;
            }
            warm_beta = beta_hat;
            omega_hat = Matrix::Identity(q, q);
            trace.iterations = info.iters;
            trace.converged = info.converged;
          }
          row.val_r2 = test_r2_from_predictions(x_val * beta_hat, y_val,
                                                train_means, &m_val)
                           .average;
          const bool better = detail::selection_better(
              row.val_r2, pen, chain.best_r2,
              chain.best_pen.value_or(PenaltyConfig{}),
              chain.best_pen.has_value());
          if (better) {
            chain.best_pen = pen;
            chain.best_r2 = row.val_r2;
            chain.best_beta = beta_hat;
            chain.best_omega = omega_hat;
            chain.best_trace = trace;
          }
        } catch (const Error& e) {
          row.failed = true;
          row.message = e.what();
        }
        chain.rows.push_back(row);
      }
    }
  });

  bool have_best = false;
  for (const Chain& chain : chains) {
    out.table.insert(out.table.end(), chain.rows.begin(), chain.rows.end());
    if (!chain.best_pen.has_value()) continue;
    if (detail::selection_better(chain.best_r2, *chain.best_pen,
                                 out.best_val_r2, out.selected, have_best)) {
      out.best_val_r2 = chain.best_r2;
      out.selected = *chain.best_pen;
      out.beta = chain.best_beta;
      out.omega = chain.best_omega;
      out.trace = chain.best_trace;
      have_best = true;
    }
  }
  if (!have_best) {
    std::string detail_msg;
    for (const auto& row : out.table)
      if (row.failed)
        detail_msg += "\n  (alpha=" + std::to_string(row.alpha) +
                      ", lambda_beta=" + std::to_string(row.lambda_beta) +
                      ", lambda_omega=" + std::to_string(row.lambda_omega) +
                      "): " + row.message;
    throw Error("grid_search: every grid point failed" + detail_msg);
  }
  return out;
}

struct FoldReport {
  int test_fold = 0;
  int val_fold = 0;
  R2Result r2;
  double model_sz = 0.0;
  PenaltyConfig selected;
  std::vector<int> excluded_columns;
};

struct CvResult {
  std::vector<FoldReport> folds;
  std::vector<int> fold_of_subject;
  double mean_r2 = 0.0;
};

// Five-fold protocol: each fold serves once as the test fold; of the
// remaining folds, one (the next in rotation) is the validation fold and the
// rest train. Fold assignment is a seeded shuffle, dealt round-robin.
inline CvResult kfold_cv(const DataSet& data, Method method,
                         const TuningGrid& grid, int folds,
                         const SolverConfig& cfg) {
  if (folds < 3) throw ConfigError("kfold_cv: folds must be >= 3");
  if (folds > data.n()) throw ConfigError("kfold_cv: more folds than subjects");

  const int n = data.n();
  const int q = data.q();
  std::vector<int> shuffled(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) shuffled[static_cast<std::size_t>(i)] = i;
  Rng rng(cfg.seed);
  rng.shuffle(shuffled);

  CvResult out;
  out.fold_of_subject.assign(static_cast<std::size_t>(n), -1);
  for (int r = 0; r < n; ++r)
    out.fold_of_subject[static_cast<std::size_t>(shuffled[
        static_cast<std::size_t>(r)])] = r % folds;

  out.folds.resize(static_cast<std::size_t>(folds));
  parallel_for_chunks(static_cast<std::size_t>(folds), 1, [&](std::size_t fb,
                                                              std::size_t fe) {
    for (std::size_t fz = fb; fz < fe; ++fz) {
      const int t = static_cast<int>(fz);
      const int v = (t + 1) % folds;
      std::vector<int> train_rows, val_rows, test_rows;
      for (int i = 0; i < n; ++i) {
        const int f = out.fold_of_subject[static_cast<std::size_t>(i)];
        if (f == t)
          test_rows.push_back(i);
        else if (f == v)
          val_rows.push_back(i);
        else
          train_rows.push_back(i);
      }

      FoldReport rep;
      rep.test_fold = t;
      rep.val_fold = v;

      // Columns with no observed training entries cannot be fit this fold;
      // they are dropped here and flagged in the report.
      std::vector<int> kept_cols;
      for (int k = 0; k < q; ++k) {
        bool any = false;
        for (int i : train_rows) any = any || data.observed()(i, k);
        (any ? kept_cols : rep.excluded_columns).push_back(k);
      }

      std::vector<int> fit_rows(train_rows);
      fit_rows.insert(fit_rows.end(), val_rows.begin(), val_rows.end());
      Matrix xf(static_cast<Eigen::Index>(fit_rows.size()), data.p());
      Matrix yf(static_cast<Eigen::Index>(fit_rows.size()),
                static_cast<Eigen::Index>(kept_cols.size()));
      BoolMask mf(static_cast<Eigen::Index>(fit_rows.size()),
                  static_cast<Eigen::Index>(kept_cols.size()));
      std::vector<int> sub_train, sub_val;
      Eigen::Index at = 0;
      for (std::size_t r = 0; r < fit_rows.size(); ++r) {
        const int i = fit_rows[r];
        bool any = false;
        for (std::size_t c = 0; c < kept_cols.size(); ++c)
          any = any || data.observed()(i, kept_cols[c]);
        if (!any) continue;  // subject unusable after column exclusion
        xf.row(at) = data.x().row(i);
        for (std::size_t c = 0; c < kept_cols.size(); ++c) {
          yf(at, static_cast<Eigen::Index>(c)) = data.y()(i, kept_cols[c]);
          mf(at, static_cast<Eigen::Index>(c)) =
              data.observed()(i, kept_cols[c]);
        }
        (r < train_rows.size() ? sub_train : sub_val)
            .push_back(static_cast<int>(at));
        ++at;
      }
      const DataSet fold_data(xf.topRows(at), yf.topRows(at), mf.topRows(at));

      const GridSearchResult sel =
          grid_search(fold_data, sub_train, sub_val, method, grid, cfg);
      rep.selected = sel.selected;

      Matrix beta_full = Matrix::Zero(data.p(), q);
      for (std::size_t c = 0; c < kept_cols.size(); ++c)
        beta_full.col(kept_cols[c]) = sel.beta.col(static_cast<Eigen::Index>(c));
      rep.model_sz = model_size(beta_full);

      Matrix x_test(static_cast<Eigen::Index>(test_rows.size()), data.p());
      Matrix y_test(static_cast<Eigen::Index>(test_rows.size()), q);
      BoolMask m_test(static_cast<Eigen::Index>(test_rows.size()), q);
      for (std::size_t r = 0; r < test_rows.size(); ++r) {
        x_test.row(static_cast<Eigen::Index>(r)) = data.x().row(test_rows[r]);
        y_test.row(static_cast<Eigen::Index>(r)) = data.y().row(test_rows[r]);
        m_test.row(static_cast<Eigen::Index>(r)) =
            data.observed().row(test_rows[r]);
      }
      Matrix y_train(static_cast<Eigen::Index>(train_rows.size()), q);
      BoolMask m_train(static_cast<Eigen::Index>(train_rows.size()), q);
      for (std::size_t r = 0; r < train_rows.size(); ++r) {
        y_train.row(static_cast<Eigen::Index>(r)) =
            data.y().row(train_rows[r]);
        m_train.row(static_cast<Eigen::Index>(r)) =
            data.observed().row(train_rows[r]);
      }
      const Vector means = observed_column_means(y_train, m_train);

      rep.r2 = test_r2_from_predictions(x_test * beta_full, y_test, means,
                                        &m_test);
      if (!rep.excluded_columns.empty()) {
        double acc = 0.0;
        int used = 0;
        for (int k = 0; k < q; ++k) {
          const bool excl = std::find(rep.excluded_columns.begin(),
                                      rep.excluded_columns.end(),
                                      k) != rep.excluded_columns.end();
          if (excl) rep.r2.flagged[static_cast<std::size_t>(k)] = true;
          if (!rep.r2.flagged[static_cast<std::size_t>(k)]) {
            acc += rep.r2.per_tissue(k);
            ++used;
          }
        }
        rep.r2.average =
            used > 0 ? acc / used : std::numeric_limits<double>::quiet_NaN();
      }
      out.folds[fz] = std::move(rep);
    }
  });

  double acc = 0.0;
  for (const auto& rep : out.folds) acc += rep.r2.average;
  out.mean_r2 = acc / folds;
  return out;
}

}  // namespace covmt
