#include "sta/delannoy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "logsumexp.hpp"

namespace sta {

namespace {

void check_index(int m, int n, int capacity) {
  if (m < 1 || n < 1 || m > capacity || n > capacity) {
    throw std::out_of_range("Delannoy index (" + std::to_string(m) + ", " + std::to_string(n) +
                            ") outside [1, " + std::to_string(capacity) + "]");
  }
}

}  // namespace

DelannoyTable::DelannoyTable(int max_index)
    : max_index_(max_index), exact_capacity_(std::min(max_index, kExactDelannoyIndex)) {
  if (max_index < 1) throw std::invalid_argument("DelannoyTable: max_index must be >= 1");
  const auto cap = static_cast<std::size_t>(max_index);
  log_values_.assign(cap * cap, 0.0);
  auto at = [&](int m, int n) -> double& {
    return log_values_[static_cast<std::size_t>(m - 1) * cap + static_cast<std::size_t>(n - 1)];
  };
  for (int m = 2; m <= max_index; ++m) {
    for (int n = 2; n <= max_index; ++n) {
      at(m, n) = detail::logsumexp3(at(m - 1, n), at(m, n - 1), at(m - 1, n - 1));
    }
  }

  const auto ecap = static_cast<std::size_t>(exact_capacity_);
  exact_values_.assign(ecap * ecap, BigInt(1));
  for (std::size_t m = 1; m < ecap; ++m) {
    for (std::size_t n = 1; n < ecap; ++n) {
      exact_values_[m * ecap + n] = exact_values_[(m - 1) * ecap + n] +
                                    exact_values_[m * ecap + n - 1] +
                                    exact_values_[(m - 1) * ecap + n - 1];
    }
  }
}

double DelannoyTable::log(int m, int n) const {
  check_index(m, n, max_index_);
  return log_values_[static_cast<std::size_t>(m - 1) * static_cast<std::size_t>(max_index_) +
                     static_cast<std::size_t>(n - 1)];
}

const BigInt& DelannoyTable::exact(int m, int n) const {
  check_index(m, n, exact_capacity_);
  return exact_values_[static_cast<std::size_t>(m - 1) * static_cast<std::size_t>(exact_capacity_) +
                       static_cast<std::size_t>(n - 1)];
}

double delannoy_log(int m, int n) {
  check_index(m, n, kMaxDelannoyIndex);
  if (m < n) std::swap(m, n);  // symmetric; keep the rolling row short
  std::vector<double> row(static_cast<std::size_t>(n), 0.0);
  for (int i = 2; i <= m; ++i) {
    double diag = row[0];  // D_{i-1, j-1}
    for (std::size_t j = 1; j < row.size(); ++j) {
      const double up = row[j];
      row[j] = detail::logsumexp3(up, row[j - 1], diag);
      diag = up;
    }
  }
  return row.back();
}

double central_delannoy_log(int m) {
  check_index(m, m, kMaxDelannoyIndex);
  double log_d = 0.0;
  double ratio = 3.0;  // D_2 / D_1
  for (int k = 1; k < m; ++k) {
    if (k > 1) {
      const double kk = static_cast<double>(k);
      ratio = (6.0 - 3.0 / kk) - (1.0 - 1.0 / kk) / ratio;
    }
    log_d += std::log(ratio);
  }
  return log_d;
}

BoundConstants::BoundConstants(int T_) : T(T_) {
  if (T < 1) throw std::invalid_argument("BoundConstants: T must be >= 1");
  const double sqrt2 = std::numbers::sqrt2;
  const double t = static_cast<double>(T);
  c = 1.0 + sqrt2;
  sigma = 21.0 / 22.0 * c * c - 5.0;
  alpha = (2.0 - sqrt2) / t;
  rho = (3.0 * sqrt2 - 4.0) / (3.0 * t);
  H = 92.0 * std::pow(t, sigma);
}

double quad_lower_bound(int k, int T) {
  if (k < 0) throw std::invalid_argument("quad_lower_bound: k must be >= 0");
  const BoundConstants bc(T);
  const double kk = static_cast<double>(k);
  return bc.alpha * kk * (kk - 1.0) + bc.rho * kk + 1.0 / (3.0 * static_cast<double>(T));
}

namespace {

void check_dirac_regime(double beta, double r, int T) {
  if (T < 6) {
    throw DomainError("Dirac lower bound requires T >= 6 (got T = " + std::to_string(T) + ")");
  }
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  if (!(r > 0.0)) throw std::invalid_argument("r must be > 0");
}

}  // namespace

double dirac_lower_bound(int k, double beta, double r, int T) {
  check_dirac_regime(beta, r, T);
  const BoundConstants bc(T);
  const double log_lambda = -r / beta;
  // log(e^{-P}(1 - lambda) + lambda H) without forming lambda.
  const double log_arg = detail::logaddexp(-quad_lower_bound(k, T) + std::log(-std::expm1(log_lambda)),
                                           log_lambda + std::log(bc.H));
  return -beta * log_arg;
}

double dirac_lower_bound_limit(double beta, double r, int T) {
  check_dirac_regime(beta, r, T);
  return r - beta * std::log(BoundConstants(T).H);
}

double beta_heuristic(int k_max, double eta, double r, int T) {
  if (k_max < 1) throw std::invalid_argument("beta_heuristic: k_max must be >= 1");
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("beta_heuristic: eta must lie in (0, 1)");
  if (!(r > 0.0)) throw std::invalid_argument("beta_heuristic: r must be > 0");
  if (T < 6) throw DomainError("beta_heuristic requires T >= 6 (got T = " + std::to_string(T) + ")");
  const double denom = quad_lower_bound(k_max, T) + std::log(std::expm1(eta) * BoundConstants(T).H);
  if (!(denom > 0.0)) {
    throw DomainError("beta heuristic is infeasible for k_max = " + std::to_string(k_max) +
                      ", eta = " + std::to_string(eta) + ": increase k_max or eta");
  }
  return r / denom;
}

double shift_scale(const Matrix& delta, ShiftScale mode) {
  if (delta.size() == 0) throw std::invalid_argument("shift_scale: empty cost matrix");
  if (mode == ShiftScale::MaxCost) {
    const double r = delta.maxCoeff();
    if (!(r > 0.0)) throw std::invalid_argument("shift_scale: cost matrix has no positive entry");
    return r;
  }
  double r = detail::kInf;
  for (Eigen::Index i = 0; i < delta.size(); ++i) {
    const double v = delta.data()[i];
    if (v > 0.0) r = std::min(r, v);
  }
  if (r == detail::kInf) throw std::invalid_argument("shift_scale: cost matrix has no positive entry");
  return r;
}

}  // namespace sta
