#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace sta::detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double logaddexp(double a, double b) {
  const double hi = std::max(a, b);
  if (hi == -kInf) return -kInf;
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

inline double logsumexp3(double a, double b, double c) {
  const double hi = std::max({a, b, c});
  if (hi == -kInf) return -kInf;
  return hi + std::log(std::exp(a - hi) + std::exp(b - hi) + std::exp(c - hi));
}

// log sum exp over a contiguous range; -inf for an empty or all -inf range.
template <typename It>
double logsumexp(It first, It last) {
  double hi = -kInf;
  for (It it = first; it != last; ++it) hi = std::max(hi, static_cast<double>(*it));
  if (hi == -kInf) return -kInf;
  if (hi == kInf) return kInf;
  double s = 0.0;
  for (It it = first; it != last; ++it) s += std::exp(*it - hi);
  return hi + std::log(s);
}

}  // namespace sta::detail
