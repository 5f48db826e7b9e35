// Command-line driver: simulate / fit / predict / impute / evaluate / cv.

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "covmt/covmt.hpp"

namespace {

using covmt::BoolMask;
using covmt::Matrix;
using covmt::Vector;

struct GlobalOptions {
  std::optional<long> seed;
  int threads = 0;
  std::string config_path;
};

struct ParsedConfigs {
  covmt::SolverConfig solver;
  covmt::TuningGrid grid;
  covmt::SimConfig sim;
};

ParsedConfigs load_configs(const GlobalOptions& global) {
  ParsedConfigs cfg;
  if (!global.config_path.empty()) {
    const auto kv = covmt::read_config_file(global.config_path);
    const auto unknown =
        covmt::apply_config(kv, &cfg.solver, &cfg.grid, &cfg.sim);
    if (!unknown.empty()) {
      std::string msg = "unknown config keys:";
      for (const auto& k : unknown) msg += " " + k;
      throw covmt::ConfigError(msg);
    }
  }
  if (global.seed.has_value()) {
    cfg.solver.seed = static_cast<std::uint64_t>(*global.seed);
    cfg.sim.seed = cfg.solver.seed;
  }
  return cfg;
}

std::vector<std::string> numbered_names(const std::string& prefix, int count) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(count));
  for (int i = 1; i <= count; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

// Reorders genotype columns to the archive's predictor list.
Matrix gather_predictors(const covmt::Table& geno,
                         const std::vector<std::string>& predictors) {
  std::map<std::string, Eigen::Index> index;
  for (std::size_t c = 0; c < geno.col_names.size(); ++c)
    index[geno.col_names[c]] = static_cast<Eigen::Index>(c);
  Matrix x(geno.values.rows(), static_cast<Eigen::Index>(predictors.size()));
  for (std::size_t c = 0; c < predictors.size(); ++c) {
    const auto it = index.find(predictors[c]);
    if (it == index.end())
      throw covmt::DimensionError("genotype file lacks predictor '" +
                                  predictors[c] + "' required by the archive");
    x.col(static_cast<Eigen::Index>(c)) = geno.values.col(it->second);
  }
  return x;
}

Matrix standardize_with(const Matrix& x, const covmt::ColumnStats& st) {
  Matrix out = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (st.scale(j) == 0.0)
      throw covmt::DataError("archive records zero scale for predictor " +
                             std::to_string(j));
    out.col(j) = (x.col(j).array() - st.mean(j)) / st.scale(j);
  }
  return out;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string sim_config;
  std::string out_dir;
};

int run_simulate(const GlobalOptions& global, const SimulateArgs& args) {
  ParsedConfigs cfg = load_configs(global);
  if (!args.sim_config.empty()) {
    const auto kv = covmt::read_config_file(args.sim_config);
    const auto unknown = covmt::apply_config(kv, nullptr, nullptr, &cfg.sim);
    if (!unknown.empty()) {
      std::string msg = "unknown sim-config keys:";
      for (const auto& k : unknown) msg += " " + k;
      throw covmt::ConfigError(msg);
    }
  }
  if (global.seed.has_value())
    cfg.sim.seed = static_cast<std::uint64_t>(*global.seed);

  std::optional<covmt::Table> external;
  std::optional<Matrix> x_ext;
  if (!cfg.sim.x_file.empty()) {
    external = covmt::read_tsv_table(cfg.sim.x_file);
    if (!external->observed.all())
      throw covmt::DataError("external design may not contain NA");
    cfg.sim.n = static_cast<int>(external->values.rows());
    cfg.sim.p = static_cast<int>(external->values.cols());
    x_ext = external->values;
  }

  const covmt::Simulation sim =
      covmt::simulate(cfg.sim, x_ext ? &*x_ext : nullptr);

  std::filesystem::create_directories(args.out_dir);
  const auto path = [&](const char* name) {
    return (std::filesystem::path(args.out_dir) / name).string();
  };

  std::vector<std::string> subjects =
      external ? external->row_ids : numbered_names("S", cfg.sim.n);
  std::vector<std::string> snps =
      external ? external->col_names : numbered_names("SNP", cfg.sim.p);
  const std::vector<std::string> tissues = numbered_names("T", cfg.sim.q);

  covmt::write_tsv_table(
      path("genotypes.tsv"),
      covmt::make_table("subject_id", subjects, snps, sim.data.x_raw));

  covmt::Table expr =
      covmt::make_table("subject_id", subjects, tissues, sim.data.y);
  expr.observed = sim.data.observed;
  covmt::write_tsv_table(path("expression.tsv"), expr);

  std::vector<std::string> roles(static_cast<std::size_t>(cfg.sim.n));
  for (int i : sim.data.train_idx)
    roles[static_cast<std::size_t>(i)] = "train";
  for (int i : sim.data.val_idx)
    roles[static_cast<std::size_t>(i)] = "validation";
  for (int i : sim.data.test_idx)
    roles[static_cast<std::size_t>(i)] = "test";
  covmt::write_split_file(path("splits.tsv"), subjects, roles);

  covmt::write_tsv_table(
      path("truth_beta.tsv"),
      covmt::make_table("predictor", snps, tissues, sim.truth.beta_star));
  covmt::write_tsv_table(
      path("truth_support.tsv"),
      covmt::make_table("predictor", snps, tissues,
                        sim.truth.support.cast<double>().matrix()));
  covmt::write_tsv_table(
      path("truth_sigma_e.tsv"),
      covmt::make_table("response", tissues, tissues, sim.truth.sigma_e));
  covmt::write_tsv_table(
      path("truth_d_e.tsv"),
      covmt::make_table("response", tissues, {"d"},
                        Matrix(sim.truth.d_e)));

  std::cout << "simulated " << cfg.sim.n << " subjects, " << cfg.sim.p
            << " predictors, " << cfg.sim.q << " responses into "
            << args.out_dir << "\n";
  return 0;
}

// --------------------------------------------------------------------- fit

struct FitArgs {
  std::string method;
  std::string genotypes;
  std::string expression;
  std::string splits;
  std::string out;
  std::string selection_out;
  double val_fraction = 0.2;
};

int run_fit(const GlobalOptions& global, const FitArgs& args) {
  const ParsedConfigs cfg = load_configs(global);
  const covmt::Method method = covmt::method_from_string(args.method);

  covmt::MatchedTables tables =
      covmt::match_tables(args.genotypes, args.expression);
  for (const auto& id : tables.unmatched)
    std::cerr << "warning: subject '" << id
              << "' present in only one input, skipped\n";

  // Row roles: from the split file, or a seeded random holdout.
  std::vector<int> train_rows, val_rows;
  if (!args.splits.empty()) {
    const auto roles = covmt::read_split_file(args.splits);
    for (std::size_t i = 0; i < tables.subjects.size(); ++i) {
      const auto it = roles.find(tables.subjects[i]);
      if (it == roles.end()) {
        std::cerr << "warning: subject '" << tables.subjects[i]
                  << "' missing from split file, skipped\n";
        continue;
      }
      if (it->second == "train")
        train_rows.push_back(static_cast<int>(i));
      else if (it->second == "validation")
        val_rows.push_back(static_cast<int>(i));
    }
  } else {
    std::vector<int> order(tables.subjects.size());
    for (std::size_t i = 0; i < order.size(); ++i)
      order[i] = static_cast<int>(i);
    covmt::Rng rng(cfg.solver.seed);
    rng.shuffle(order);
    const std::size_t n_val = static_cast<std::size_t>(
        args.val_fraction * static_cast<double>(order.size()));
    for (std::size_t i = 0; i < order.size(); ++i)
      (i < n_val ? val_rows : train_rows).push_back(order[i]);
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(val_rows.begin(), val_rows.end());
  }
  if (train_rows.empty()) throw covmt::DataError("no training subjects");

  std::vector<int> keep(train_rows);
  keep.insert(keep.end(), val_rows.begin(), val_rows.end());
  std::sort(keep.begin(), keep.end());
  covmt::StandardizedData std_data =
      covmt::standardize_dataset(tables, train_rows, keep);

  std::vector<int> sub_train, sub_val;
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const bool is_train =
        std::binary_search(train_rows.begin(), train_rows.end(), keep[r]);
    (is_train ? sub_train : sub_val).push_back(static_cast<int>(r));
  }

  const covmt::GridSearchResult res =
      covmt::grid_search(std_data.data, sub_train, sub_val, method, cfg.grid,
                         cfg.solver);

  covmt::WeightSetArchive archive;
  archive.method = args.method;
  archive.penalty = res.selected;
  archive.solver = cfg.solver;
  archive.predictors = tables.predictors;
  archive.responses = tables.responses;
  archive.beta = res.beta;
  archive.omega = res.omega;
  archive.x_stats = std_data.x_stats;
  archive.y_stats = std_data.y_stats;
  archive.dataset_hash = tables.dataset_hash;
  archive.trace.initial_objective = res.trace.initial_objective;
  archive.trace.final_objective = res.trace.final_objective;
  archive.trace.iterations = res.trace.iterations;
  archive.trace.converged = res.trace.converged;
  covmt::save_archive(args.out, archive);

  if (!args.selection_out.empty()) {
    std::ofstream sel(args.selection_out);
    if (!sel)
      throw covmt::DataError("cannot write '" + args.selection_out + "'");
    sel << "method\tresponse\talpha\tlambda_beta\tlambda_omega\tval_r2\t"
           "status\n";
    for (const auto& row : res.table)
      sel << args.method << "\tall\t" << covmt::detail::format_double(row.alpha)
          << '\t' << covmt::detail::format_double(row.lambda_beta) << '\t'
          << covmt::detail::format_double(row.lambda_omega) << '\t'
          << covmt::detail::format_double(row.val_r2) << '\t'
          << (row.failed ? "failed" : "ok") << '\n';
    for (std::size_t k = 0; k < res.en_columns.size(); ++k) {
      const auto& c = res.en_columns[k];
      sel << args.method << '\t' << tables.responses[k] << '\t'
          << covmt::detail::format_double(c.alpha) << '\t'
          << covmt::detail::format_double(c.lambda) << "\t0\t"
          << covmt::detail::format_double(c.val_r2) << '\t'
          << (c.flagged ? "flagged" : "ok") << '\n';
    }
  }

  std::cout << "fitted " << args.method << " on " << sub_train.size()
            << " training subjects (validation " << sub_val.size()
            << "), archive written to " << args.out << "\n";
  return 0;
}

// ----------------------------------------------------------------- predict

struct PredictArgs {
  std::string weights;
  std::string genotypes;
  std::string out;
};

int run_predict(const GlobalOptions&, const PredictArgs& args) {
  const covmt::WeightSetArchive archive = covmt::load_archive(args.weights);
  const covmt::Table geno = covmt::read_tsv_table(args.genotypes);
  if (!geno.observed.all())
    throw covmt::DataError("genotypes may not contain NA");

  const Matrix x = gather_predictors(geno, archive.predictors);
  const Matrix x_std = standardize_with(x, archive.x_stats);
  Matrix pred = x_std * archive.beta;
  for (Eigen::Index k = 0; k < pred.cols(); ++k)
    pred.col(k) =
        (pred.col(k).array() * archive.y_stats.scale(k) +
         archive.y_stats.mean(k))
            .matrix();

  covmt::write_tsv_table(
      args.out, covmt::make_table("subject_id", geno.row_ids,
                                  archive.responses, pred));
  std::cout << "wrote predictions for " << geno.row_ids.size()
            << " subjects to " << args.out << "\n";
  return 0;
}

// ------------------------------------------------------------------ impute

struct ImputeArgs {
  std::string weights;
  std::string genotypes;
  std::string expression;
  std::string out;
};

int run_impute(const GlobalOptions&, const ImputeArgs& args) {
  const covmt::WeightSetArchive archive = covmt::load_archive(args.weights);
  covmt::MatchedTables tables =
      covmt::match_tables(args.genotypes, args.expression);
  for (const auto& id : tables.unmatched)
    std::cerr << "warning: subject '" << id
              << "' present in only one input, skipped\n";
  if (tables.responses != archive.responses)
    throw covmt::DataError(
        "expression columns do not match the archive's responses");

  std::map<std::string, Eigen::Index> col;
  for (std::size_t c = 0; c < tables.predictors.size(); ++c)
    col[tables.predictors[c]] = static_cast<Eigen::Index>(c);
  Matrix x(tables.x.rows(),
           static_cast<Eigen::Index>(archive.predictors.size()));
  for (std::size_t c = 0; c < archive.predictors.size(); ++c) {
    const auto it = col.find(archive.predictors[c]);
    if (it == col.end())
      throw covmt::DimensionError("genotype file lacks predictor '" +
                                  archive.predictors[c] + "'");
    x.col(static_cast<Eigen::Index>(c)) = tables.x.col(it->second);
  }

  const Matrix x_std = standardize_with(x, archive.x_stats);
  Matrix y_std = tables.y;
  for (Eigen::Index k = 0; k < y_std.cols(); ++k)
    for (Eigen::Index r = 0; r < y_std.rows(); ++r)
      y_std(r, k) = tables.observed(r, k)
                        ? (y_std(r, k) - archive.y_stats.mean(k)) /
                              archive.y_stats.scale(k)
                        : 0.0;

  const covmt::DataSet data(x_std, y_std, tables.observed);
  const covmt::ModelFit fit(archive.beta, archive.omega);
  const covmt::ImputeResult imp = covmt::impute(fit, data);

  Matrix completed = tables.y;  // observed entries pass through unchanged
  for (Eigen::Index r = 0; r < completed.rows(); ++r)
    for (Eigen::Index k = 0; k < completed.cols(); ++k)
      if (!tables.observed(r, k))
        completed(r, k) = imp.completed(r, k) * archive.y_stats.scale(k) +
                          archive.y_stats.mean(k);

  covmt::write_tsv_table(
      args.out, covmt::make_table("subject_id", tables.subjects,
                                  archive.responses, completed));
  std::cout << "wrote completed expression to " << args.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string predictions;
  std::string expression;
  std::string splits;
  std::string weights;
  std::string genotypes;
  std::string support;
  std::string out;
};

int run_evaluate(const GlobalOptions&, const EvaluateArgs& args) {
  const covmt::Table pred = covmt::read_tsv_table(args.predictions);
  const covmt::Table expr = covmt::read_tsv_table(args.expression);
  const auto roles = covmt::read_split_file(args.splits);
  if (pred.col_names != expr.col_names)
    throw covmt::DataError("prediction/expression column mismatch");

  std::map<std::string, Eigen::Index> pred_row;
  for (std::size_t r = 0; r < pred.row_ids.size(); ++r)
    pred_row[pred.row_ids[r]] = static_cast<Eigen::Index>(r);

  const Eigen::Index q = expr.values.cols();
  std::vector<Eigen::Index> test_e, test_p, train_e;
  for (std::size_t r = 0; r < expr.row_ids.size(); ++r) {
    const auto it = roles.find(expr.row_ids[r]);
    if (it == roles.end()) continue;
    if (it->second == "train") {
      train_e.push_back(static_cast<Eigen::Index>(r));
    } else if (it->second == "test") {
      const auto pit = pred_row.find(expr.row_ids[r]);
      if (pit == pred_row.end())
        throw covmt::DataError("test subject '" + expr.row_ids[r] +
                               "' missing from predictions");
      test_e.push_back(static_cast<Eigen::Index>(r));
      test_p.push_back(pit->second);
    }
  }
  if (test_e.empty()) throw covmt::DataError("no test subjects found");
  if (train_e.empty()) throw covmt::DataError("no training subjects found");

  Matrix y_train(static_cast<Eigen::Index>(train_e.size()), q);
  BoolMask m_train(static_cast<Eigen::Index>(train_e.size()), q);
  for (std::size_t r = 0; r < train_e.size(); ++r) {
    y_train.row(static_cast<Eigen::Index>(r)) = expr.values.row(train_e[r]);
    m_train.row(static_cast<Eigen::Index>(r)) = expr.observed.row(train_e[r]);
  }
  const Vector means = covmt::observed_column_means(y_train, m_train);

  Matrix y_test(static_cast<Eigen::Index>(test_e.size()), q);
  BoolMask m_test(static_cast<Eigen::Index>(test_e.size()), q);
  Matrix yhat(static_cast<Eigen::Index>(test_e.size()), q);
  for (std::size_t r = 0; r < test_e.size(); ++r) {
    y_test.row(static_cast<Eigen::Index>(r)) = expr.values.row(test_e[r]);
    m_test.row(static_cast<Eigen::Index>(r)) = expr.observed.row(test_e[r]);
    yhat.row(static_cast<Eigen::Index>(r)) = pred.values.row(test_p[r]);
  }
  const covmt::R2Result r2 =
      covmt::test_r2_from_predictions(yhat, y_test, means, &m_test);

  std::optional<double> size, tpr;
  if (!args.weights.empty()) {
    const covmt::WeightSetArchive archive = covmt::load_archive(args.weights);
    size = covmt::model_size(archive.beta);
    if (!args.genotypes.empty() && !args.support.empty()) {
      const covmt::Table geno = covmt::read_tsv_table(args.genotypes);
      const Matrix x = gather_predictors(geno, archive.predictors);
      const covmt::Table sup = covmt::read_tsv_table(args.support);
      if (sup.values.rows() != archive.beta.rows() ||
          sup.values.cols() != archive.beta.cols())
        throw covmt::DataError("support table shape mismatch");
      const BoolMask support = sup.values.array() != 0.0;
      tpr = covmt::ld_adjusted_tpr(archive.beta, support, x);
    }
  }

  std::ofstream out(args.out);
  if (!out) throw covmt::DataError("cannot write '" + args.out + "'");
  out << "metric\tresponse\tvalue\n";
  for (Eigen::Index k = 0; k < q; ++k) {
    out << "test_r2\t" << expr.col_names[static_cast<std::size_t>(k)] << '\t';
    if (r2.flagged[static_cast<std::size_t>(k)])
      out << "NA\n";
    else
      out << covmt::detail::format_double(r2.per_tissue(k)) << '\n';
  }
  out << "test_r2\taverage\t" << covmt::detail::format_double(r2.average)
      << '\n';
  if (size)
    out << "model_size\tall\t" << covmt::detail::format_double(*size) << '\n';
  if (tpr)
    out << "ld_adjusted_tpr\tall\t" << covmt::detail::format_double(*tpr)
        << '\n';
  std::cout << "average test R^2 "
            << covmt::detail::format_double(r2.average) << ", report "
            << args.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------- cv

struct CvArgs {
  std::string method;
  std::string genotypes;
  std::string expression;
  int folds = 5;
  std::string out;
};

int run_cv(const GlobalOptions& global, const CvArgs& args) {
  const ParsedConfigs cfg = load_configs(global);
  const covmt::Method method = covmt::method_from_string(args.method);
  const covmt::LoadedDataSet loaded =
      covmt::load_dataset(args.genotypes, args.expression);

  const covmt::CvResult res =
      covmt::kfold_cv(loaded.data, method, cfg.grid, args.folds, cfg.solver);

  std::ofstream out(args.out);
  if (!out) throw covmt::DataError("cannot write '" + args.out + "'");
  out << "fold\tmetric\tresponse\tvalue\n";
  for (const auto& fold : res.folds) {
    for (Eigen::Index k = 0; k < loaded.data.q(); ++k) {
      out << fold.test_fold << "\ttest_r2\t"
          << loaded.responses[static_cast<std::size_t>(k)] << '\t';
      if (fold.r2.flagged[static_cast<std::size_t>(k)])
        out << "NA\n";
      else
        out << covmt::detail::format_double(fold.r2.per_tissue(k)) << '\n';
    }
    out << fold.test_fold << "\ttest_r2\taverage\t"
        << covmt::detail::format_double(fold.r2.average) << '\n';
    out << fold.test_fold << "\tmodel_size\tall\t"
        << covmt::detail::format_double(fold.model_sz) << '\n';
  }
  out << "all\ttest_r2\taverage\t"
      << covmt::detail::format_double(res.mean_r2) << '\n';
  std::cout << args.folds << "-fold CV mean test R^2 "
            << covmt::detail::format_double(res.mean_r2) << ", report "
            << args.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  GlobalOptions global;
  CLI::App app{"covariance-enhanced multi-tissue eQTL weight estimation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", global.seed, "override the configured RNG seed");
  app.add_option("--threads", global.threads,
                 "worker threads (0 = hardware concurrency)");
  app.add_option("--config", global.config_path,
                 "flat key=value configuration file");

  SimulateArgs sim_args;
  auto* sim = app.add_subcommand("simulate",
                                 "generate a synthetic dataset with truth");
  sim->add_option("--sim-config", sim_args.sim_config,
                  "key=value simulation settings");
  sim->add_option("--out-dir", sim_args.out_dir, "output directory")
      ->required();

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "estimate eQTL weights");
  fit->add_option("--method", fit_args.method, "covmt | mt | en")->required();
  fit->add_option("--genotypes", fit_args.genotypes, "genotype TSV")
      ->required();
  fit->add_option("--expression", fit_args.expression,
                  "expression TSV (NA = missing)")
      ->required();
  fit->add_option("--splits", fit_args.splits,
                  "subject split file (train/validation/test)");
  fit->add_option("--val-fraction", fit_args.val_fraction,
                  "validation fraction when no split file is given");
  fit->add_option("--out", fit_args.out, "output weight archive (.json[.gz])")
      ->required();
  fit->add_option("--selection-out", fit_args.selection_out,
                  "tuning selection table TSV");

  PredictArgs pred_args;
  auto* pred = app.add_subcommand("predict",
                                  "predict expression from genotypes");
  pred->add_option("--weights", pred_args.weights, "weight archive")
      ->required();
  pred->add_option("--genotypes", pred_args.genotypes, "genotype TSV")
      ->required();
  pred->add_option("--out", pred_args.out, "predictions TSV")->required();

  ImputeArgs imp_args;
  auto* imp = app.add_subcommand("impute",
                                 "complete partially observed expression");
  imp->add_option("--weights", imp_args.weights, "weight archive")
      ->required();
  imp->add_option("--genotypes", imp_args.genotypes, "genotype TSV")
      ->required();
  imp->add_option("--expression", imp_args.expression,
                  "partial expression TSV")
      ->required();
  imp->add_option("--out", imp_args.out, "completed expression TSV")
      ->required();

  EvaluateArgs eval_args;
  auto* eval = app.add_subcommand("evaluate", "score predictions");
  eval->add_option("--predictions", eval_args.predictions, "predictions TSV")
      ->required();
  eval->add_option("--expression", eval_args.expression, "expression TSV")
      ->required();
  eval->add_option("--splits", eval_args.splits, "subject split file")
      ->required();
  eval->add_option("--weights", eval_args.weights,
                   "weight archive (enables model size / TPR)");
  eval->add_option("--genotypes", eval_args.genotypes,
                   "genotype TSV (for LD-adjusted TPR)");
  eval->add_option("--support", eval_args.support,
                   "true support 0/1 TSV (for LD-adjusted TPR)");
  eval->add_option("--out", eval_args.out, "metric report TSV")->required();

  CvArgs cv_args;
  auto* cv = app.add_subcommand("cv", "k-fold cross-validation protocol");
  cv->add_option("--method", cv_args.method, "covmt | mt | en")->required();
  cv->add_option("--genotypes", cv_args.genotypes, "genotype TSV")
      ->required();
  cv->add_option("--expression", cv_args.expression, "expression TSV")
      ->required();
  cv->add_option("--folds", cv_args.folds, "fold count (default 5)");
  cv->add_option("--out", cv_args.out, "per-fold metric report TSV")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 2;
  }

  covmt::set_num_threads(global.threads);

  try {
    if (sim->parsed()) return run_simulate(global, sim_args);
    if (fit->parsed()) return run_fit(global, fit_args);
    if (pred->parsed()) return run_predict(global, pred_args);
    if (imp->parsed()) return run_impute(global, imp_args);
    if (eval->parsed()) return run_evaluate(global, eval_args);
    if (cv->parsed()) return run_cv(global, cv_args);
  } catch (const covmt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
