#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace covmt {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration values (penalties out of range, infeasible simulation
// settings, bad solver caps).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (files, masks, dimensions at load).
class DataError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// A covariance (sub)matrix that should be positive definite is not; signals a
// corrupted or degenerate fit.
class DegenerateCovarianceError : public Error {
 public:
  using Error::Error;
};

// Objective unbounded below (e.g. unpenalized precision estimation with a
// singular input covariance).
class UnboundedProblemError : public Error {
 public:
  using Error::Error;
};

// Iteration cap reached. Carries the last iterate and the residual at the
// point the solver gave up so callers can decide whether to keep going.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& msg, Eigen::MatrixXd last_iterate,
                      double residual)
      : Error(msg),
        last_iterate(std::move(last_iterate)),
        residual(residual) {}

  Eigen::MatrixXd last_iterate;
  double residual;
};

}  // namespace covmt
