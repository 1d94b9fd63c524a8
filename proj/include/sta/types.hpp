#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sta {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A time series of non-negative measures on a shared support: one row per
/// time point, one column per support point.
using Series = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Raised when an iterative solver fails to reach its tolerance and the
/// caller asked for a hard failure.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a bound or heuristic is requested outside the regime in which
/// it is established.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised for malformed files and failed reads/writes.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws std::invalid_argument unless every entry is finite and >= 0 and at
/// least one entry is strictly positive.
void check_measure(const Vector& x, const char* what);

}  // namespace sta
