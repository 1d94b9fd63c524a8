#include "sta/align.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "logsumexp.hpp"
#include "sta/delannoy.hpp"
#include "sta/parallel.hpp"

namespace sta {

using detail::kInf;

CostMatrix::CostMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw std::invalid_argument("CostMatrix: dimensions must be >= 1");
  }
  if (!values_.allFinite()) throw std::invalid_argument("CostMatrix: entries must be finite");
}

double softmin(std::span<const double> values, double beta) {
  if (values.empty()) throw std::invalid_argument("softmin: empty input");
  if (beta < 0.0) throw std::invalid_argument("softmin: beta must be >= 0");
  const double lo = *std::min_element(values.begin(), values.end());
  if (lo == kInf) throw std::invalid_argument("softmin: no finite value");
  if (beta == 0.0) return lo;
  double s = 0.0;
  for (double v : values) s += std::exp(-(v - lo) / beta);
  return lo - beta * std::log(s);
}

namespace {

// Three-way softmin on the hot path; at least one argument is finite.
inline double softmin3(double a, double b, double c, double beta) {
  const double lo = std::min({a, b, c});
  if (beta == 0.0) return lo;
  const double s = std::exp(-(a - lo) / beta) + std::exp(-(b - lo) / beta) +
                   std::exp(-(c - lo) / beta);
  return lo - beta * std::log(s);
}

}  // namespace

SoftDtwResult sdtw_forward(const CostMatrix& delta, double beta) {
  if (beta < 0.0) throw std::invalid_argument("sdtw_forward: beta must be >= 0");
  const Eigen::Index n = delta.rows();
  const Eigen::Index m = delta.cols();
  ForwardTable table{Matrix::Constant(n + 1, m + 1, kInf), beta};
  Matrix& r = table.r;
  r(0, 0) = 0.0;
  for (Eigen::Index i = 1; i <= n; ++i) {
    for (Eigen::Index j = 1; j <= m; ++j) {
      r(i, j) = delta(i - 1, j - 1) + softmin3(r(i - 1, j - 1), r(i - 1, j), r(i, j - 1), beta);
    }
  }
  const double value = table.value();
  return {value, std::move(table)};
}

// The recursion consumes e(i+1, .) and e(., j+1), so it runs from the
// bottom-right corner towards (1, 1). Indices below are 1-based with a
// one-cell border on the high side.
Matrix sdtw_backward(const CostMatrix& delta, const ForwardTable& table) {
  const double beta = table.beta;
  if (!(beta > 0.0)) {
    throw std::invalid_argument("sdtw_backward: beta must be > 0 (DTW is not differentiable)");
  }
  const Eigen::Index n = delta.rows();
  const Eigen::Index m = delta.cols();
  if (table.r.rows() != n + 1 || table.r.cols() != m + 1) {
    throw std::invalid_argument("sdtw_backward: forward table does not match the cost matrix");
  }
  Matrix r = Matrix::Constant(n + 2, m + 2, -kInf);
  r.block(1, 1, n, m) = table.r.block(1, 1, n, m);
  r(n + 1, m + 1) = table.r(n, m);
  Matrix d = Matrix::Zero(n + 2, m + 2);
  d.block(1, 1, n, m) = delta.values();
  Matrix e = Matrix::Zero(n + 2, m + 2);
  e(n + 1, m + 1) = 1.0;

  for (Eigen::Index i = n; i >= 1; --i) {
    for (Eigen::Index j = m; j >= 1; --j) {
      const double a = std::exp((r(i + 1, j) - r(i, j) - d(i + 1, j)) / beta);
      const double b = std::exp((r(i, j + 1) - r(i, j) - d(i, j + 1)) / beta);
      const double c = std::exp((r(i + 1, j + 1) - r(i, j) - d(i + 1, j + 1)) / beta);
      e(i, j) = a * e(i + 1, j) + b * e(i, j + 1) + c * e(i + 1, j + 1);
    }
  }
  return e.block(1, 1, n, m);
}

SoftDtwGradient sdtw_value_and_grad(const CostMatrix& delta, double beta) {
  auto fwd = sdtw_forward(delta, beta);
  return {fwd.value, sdtw_backward(delta, fwd.table)};
}

std::vector<SoftDtwGradient> sdtw_value_and_grad_batch(const std::vector<CostMatrix>& deltas,
                                                       double beta, int threads) {
  std::vector<SoftDtwGradient> out(deltas.size());
  parallel_for(deltas.size(), threads,
               [&](std::size_t i) { out[i] = sdtw_value_and_grad(deltas[i], beta); });
  return out;
}

namespace {

void check_enumeration_guard(int T1, int T2) {
  if (T1 < 1 || T2 < 1) throw std::invalid_argument("alignment dimensions must be >= 1");
  if (delannoy_log(T1, T2) > std::log(kMaxEnumeratedAlignments)) {
    throw std::length_error("alignment enumeration guard exceeded: D_{" + std::to_string(T1) + "," +
                            std::to_string(T2) + "} > 1e6");
  }
}

void enumerate_from(Matrix& path, int i, int j, std::vector<Matrix>& out) {
  path(i, j) = 1.0;
  const int last_i = static_cast<int>(path.rows()) - 1;
  const int last_j = static_cast<int>(path.cols()) - 1;
  if (i == last_i && j == last_j) {
    out.push_back(path);
  } else {
    if (j < last_j) enumerate_from(path, i, j + 1, out);
    if (i < last_i) enumerate_from(path, i + 1, j, out);
    if (i < last_i && j < last_j) enumerate_from(path, i + 1, j + 1, out);
  }
  path(i, j) = 0.0;
}

}  // namespace

std::vector<Matrix> enumerate_alignments(int T1, int T2) {
  check_enumeration_guard(T1, T2);
  std::vector<Matrix> out;
  Matrix path = Matrix::Zero(T1, T2);
  enumerate_from(path, 0, 0, out);
  return out;
}

BruteForceResult sdtw_bruteforce(const CostMatrix& delta, double beta) {
  if (beta < 0.0) throw std::invalid_argument("sdtw_bruteforce: beta must be >= 0");
  const auto paths =
      enumerate_alignments(static_cast<int>(delta.rows()), static_cast<int>(delta.cols()));
  std::vector<double> costs(paths.size());
  for (std::size_t k = 0; k < paths.size(); ++k) {
    costs[k] = paths[k].cwiseProduct(delta.values()).sum();
  }
  const double lo = *std::min_element(costs.begin(), costs.end());
  Matrix E = Matrix::Zero(delta.rows(), delta.cols());
  double total = 0.0;
  for (std::size_t k = 0; k < paths.size(); ++k) {
    const double w = beta > 0.0 ? std::exp(-(costs[k] - lo) / beta) : (costs[k] == lo ? 1.0 : 0.0);
    E += w * paths[k];
    total += w;
  }
  E /= total;
  return {softmin(costs, beta), std::move(E)};
}

Matrix squared_difference_cost(const Vector& x, const Vector& y) {
  return (x.replicate(1, y.size()).rowwise() - y.transpose()).array().square().matrix();
}

Vector dirac_series(int T, int t_star, double c) {
  if (T < 1 || t_star < 0 || t_star >= T) {
    throw std::invalid_argument("dirac_series: need 0 <= t_star < T");
  }
  Vector x = Vector::Zero(T);
  x(t_star) = c;
  return x;
}

double dirac_shift_gap(int T, int t_star, int k, double beta, double c) {
  if (k < 0 || t_star + k >= T) throw std::invalid_argument("dirac_shift_gap: shift leaves the series");
  const Vector x = dirac_series(T, t_star, c);
  const Vector y = dirac_series(T, t_star + k, c);
  return sdtw_forward(CostMatrix(squared_difference_cost(x, y)), beta).value -
         sdtw_forward(CostMatrix(squared_difference_cost(x, x)), beta).value;
}

}  // namespace sta
