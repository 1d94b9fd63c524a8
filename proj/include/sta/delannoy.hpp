#pragma once

// Delannoy numbers D_{m,n}: the number of monotone lattice paths from (1, 1)
// to (m, n) using right, down and diagonal steps, i.e. the number of
// alignments between series of lengths m and n. Indices start at 1.
//
// Values grow like (1 + sqrt 2)^{2m} along the diagonal and overflow doubles
// near m = 520, so everything here is carried in natural-log form.

#include <cstddef>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "sta/types.hpp"

namespace sta {

using BigInt = boost::multiprecision::cpp_int;

/// Largest index accepted by the free functions below.
inline constexpr int kMaxDelannoyIndex = 4096;

/// Largest index for which exact integers are kept.
inline constexpr int kExactDelannoyIndex = 30;

/// Immutable table of log D_{m,n} for 1 <= m, n <= max_index, plus the exact
/// integers for m, n <= 30.
class DelannoyTable {
 public:
  explicit DelannoyTable(int max_index);

  int max_index() const { return max_index_; }

  /// log D_{m,n}; throws std::out_of_range outside [1, max_index]^2.
  double log(int m, int n) const;

  /// Exact D_{m,n}; throws std::out_of_range unless m, n <= min(30, max_index).
  const BigInt& exact(int m, int n) const;

  int exact_capacity() const { return exact_capacity_; }

 private:
  int max_index_;
  int exact_capacity_;
  std::vector<double> log_values_;  // row-major, (m-1) * max_index + (n-1)
  std::vector<BigInt> exact_values_;
};

/// log D_{m,n}, computed with an O(m n) log-sum-exp recursion.
double delannoy_log(int m, int n);

/// log D_{m,m} via the three-term central recurrence carried as the ratio
/// r_m = D_{m+1} / D_m.
double central_delannoy_log(int m);

/// Constants of the growth bounds for series length T.
struct BoundConstants {
  double c;      // 1 + sqrt 2
  double sigma;  // (21/22) c^2 - 5
  double alpha;  // (2 - sqrt 2) / T
  double rho;    // (3 sqrt 2 - 4) / (3 T)
  double H;      // 92 T^sigma
  int T;

  explicit BoundConstants(int T);
};

/// P(k) = alpha k (k - 1) + rho k + 1 / (3T).
double quad_lower_bound(int k, int T);

/// LB_beta(k) = -beta log(e^{-P(k)} (1 - lambda) + lambda H), lambda = e^{-r/beta}.
/// Requires T >= 6; throws DomainError otherwise.
double dirac_lower_bound(int k, double beta, double r, int T);

/// lim_{k -> inf} LB_beta(k) = r - beta log H.
double dirac_lower_bound_limit(double beta, double r, int T);

/// Smallest beta for which LB_beta saturates within eta * beta at k_max:
/// r / (P(k_max) + log((e^eta - 1) H)). Throws DomainError when the
/// denominator is not positive.
double beta_heuristic(int k_max, double eta, double r, int T);

/// Which pairwise cost statistic feeds r in the beta heuristic.
enum class ShiftScale {
  MaxCost,          // r = max_ij Delta_ij
  MinPositiveCost,  // r = min { Delta_ij : Delta_ij > 0 }
};

/// Extracts r from a pairwise cost matrix. Throws std::invalid_argument if the
/// requested statistic does not exist (e.g. no positive entry).
double shift_scale(const Matrix& delta, ShiftScale mode = ShiftScale::MaxCost);

}  // namespace sta
