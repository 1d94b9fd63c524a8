#pragma once

// Log-domain helpers shared by the Sinkhorn-type solvers.

#include <cmath>

#include "logsumexp.hpp"
#include "sta/types.hpp"

namespace sta::detail {

inline Vector safe_log(const Vector& x) {
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = x(i) > 0.0 ? std::log(x(i)) : -kInf;
  return out;
}

// omega * (log_x - log_k), with zero mass (log_x = -inf) mapped to -inf.
inline Vector scaling_update(const Vector& log_x, const Vector& log_k, double omega) {
  Vector out(log_x.size());
  for (Eigen::Index i = 0; i < log_x.size(); ++i) {
    out(i) = log_x(i) == -kInf ? -kInf : omega * (log_x(i) - log_k(i));
  }
  return out;
}

inline double sup_change(const Vector& next, const Vector& prev) {
  double gap = 0.0;
  for (Eigen::Index i = 0; i < next.size(); ++i) {
    if (next(i) == prev(i)) continue;  // covers matching -inf entries
    gap = std::max(gap, std::abs(next(i) - prev(i)));
  }
  return gap;
}

}  // namespace sta::detail
