#pragma once

// Soft-DTW: the soft-minimum over all monotone alignments of the aligned
// cost <A, Delta>, computed by a forward dynamic program, and its gradient
// with respect to Delta (the Gibbs-weighted average alignment) computed by
// the reverse-mode recursion. Brute-force enumeration oracles are provided
// for small instances.

#include <span>
#include <vector>

#include "sta/types.hpp"

namespace sta {

/// Pairwise temporal cost matrix Delta (T1 x T2) with finite entries.
class CostMatrix {
 public:
  explicit CostMatrix(Matrix values);

  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }
  const Matrix& values() const { return values_; }

 private:
  Matrix values_;
};

/// Intermediate soft costs of the forward pass, (T1 + 1) x (T2 + 1) with the
/// border r(0, 0) = 0 and r(i, 0) = r(0, j) = +inf.
struct ForwardTable {
  Matrix r;
  double beta = 0.0;

  double value() const { return r(r.rows() - 1, r.cols() - 1); }
};

/// -beta log sum exp(-v / beta), or min(v) when beta == 0. Accepts +inf
/// entries as long as one value is finite.
double softmin(std::span<const double> values, double beta);

struct SoftDtwResult {
  double value;
  ForwardTable table;
};

/// Forward dynamic program; beta == 0 gives classic DTW.
SoftDtwResult sdtw_forward(const CostMatrix& delta, double beta);

/// Gradient E = d sdtw / d Delta from a forward table. Requires beta > 0.
Matrix sdtw_backward(const CostMatrix& delta, const ForwardTable& table);

/// Forward and backward together.
struct SoftDtwGradient {
  double value;
  Matrix E;
};
SoftDtwGradient sdtw_value_and_grad(const CostMatrix& delta, double beta);

/// Evaluates many independent (value, gradient) pairs; results are identical
/// for any thread count.
std::vector<SoftDtwGradient> sdtw_value_and_grad_batch(const std::vector<CostMatrix>& deltas,
                                                       double beta, int threads = 1);

/// Guard on the number of enumerated alignments.
inline constexpr double kMaxEnumeratedAlignments = 1e6;

/// All D_{T1,T2} binary monotone path matrices from (1, 1) to (T1, T2).
std::vector<Matrix> enumerate_alignments(int T1, int T2);

struct BruteForceResult {
  double value;
  Matrix E;
};

/// Direct softmin over every alignment and the Gibbs average of the alignment
/// matrices. For beta == 0, E is the uniform average of the minimising paths.
BruteForceResult sdtw_bruteforce(const CostMatrix& delta, double beta);

/// Pairwise squared differences between the entries of two univariate series.
Matrix squared_difference_cost(const Vector& x, const Vector& y);

/// Length-T series that is zero except for value c at index t_star (0-based).
Vector dirac_series(int T, int t_star, double c = 1.0);

/// sdtw(x, y_k) - sdtw(x, x) for x = dirac_series(T, t_star, c) and y_k the
/// same Dirac moved to t_star + k, under squared-difference costs.
double dirac_shift_gap(int T, int t_star, int k, double beta, double c = 1.0);

}  // namespace sta
