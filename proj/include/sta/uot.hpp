#pragma once

// Entropic unbalanced optimal transport with KL marginal penalties:
//
//   UOT(x, y) = min_P  eps KL(P | K) + gamma KL(P 1 | x) + gamma KL(P^T 1 | y)
//
// solved through its dual with generalised Sinkhorn scalings
//   a = (x / K b)^omega,  b = (y / K^T a)^omega,  omega = gamma / (gamma + eps),
// and the debiased divergence
//   UOT~(x, y) = UOT(x, y) - (UOT(x, x) + UOT(y, y)) / 2.
//
// All scalings are stored as logarithms; a zero weight gives a scaling of
// exactly zero (log = -inf) and is propagated as such.

#include <optional>
#include <utility>
#include <vector>

#include "sta/geometry.hpp"
#include "sta/types.hpp"

namespace sta {

struct UotParams {
  double epsilon = 0.01;
  double gamma = 1.0;
  double tol = 1e-7;
  int max_iter = 5000;

  double omega() const { return gamma / (gamma + epsilon); }

  /// Throws std::invalid_argument on non-positive values or when epsilon does
  /// not match the geometry the kernel was built with.
  void validate(const GroundGeometry& geometry) const;
};

/// Log-domain Sinkhorn scalings log a = u / eps, log b = v / eps.
struct DualState {
  Vector log_a;
  Vector log_b;
  bool converged = false;
  int iterations = 0;
  double marginal_gap = 0.0;  // last sup-norm change of (log a, log b)
};

struct UotResult {
  DualState duals;
  double value = 0.0;  // UOT(x, y)
  double inner = 0.0;  // <a, K b>
};

struct SymmetricResult {
  Vector log_c;
  double value = 0.0;  // UOT(x, x)
  double inner = 0.0;  // <c, K c>
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  // sup |log c - omega (log x - log K c)|
};

/// Generalised KL: <x, log(x / y)> + <y - x, 1>, with 0 log(0/0) = 0 and
/// +inf when some x_i > 0 meets y_i = 0.
double kl_divergence(const Vector& x, const Vector& y);

/// Alternating scalings from a = b = 1 (or from `warm`) until the sup-norm
/// change of log b drops below params.tol. Non-convergence is reported in the
/// returned duals rather than thrown.
UotResult sinkhorn_uot(const Vector& x, const Vector& y, const GroundGeometry& geometry,
                       const UotParams& params, const DualState* warm = nullptr);

/// Symmetric potential c = (x / K c)^omega of UOT(x, x), iterated with the
/// averaged update log c <- (log c + omega (log x - log K c)) / 2.
SymmetricResult symmetric_sinkhorn(const Vector& x, const GroundGeometry& geometry,
                                   const UotParams& params, const Vector* warm_log_c = nullptr);

/// P_ij = a_i K_ij b_j as a dense p x p matrix.
Matrix transport_plan(const DualState& duals, const GroundGeometry& geometry);

/// <P, 1> / min(|x|_1, |y|_1): how much of the smaller mass is transported.
double transported_mass_fraction(const Matrix& plan, const Vector& x, const Vector& y);

/// UOT~ from already solved cross and self problems:
/// (eps + 2 gamma) ((<c_x, K c_x> + <c_y, K c_y>) / 2 - <a, K b>).
double debiased_value(const UotResult& cross, const SymmetricResult& self_x,
                      const SymmetricResult& self_y, const UotParams& params);

/// UOT~(x, y). Throws NumericalError if any of the three solves does not
/// converge.
double debiased_uot(const Vector& x, const Vector& y, const GroundGeometry& geometry,
                    const UotParams& params);

/// Gradient of UOT with respect to (x, y): gamma (1 - a^{-eps/gamma}, 1 - b^{-eps/gamma}).
/// Throws std::invalid_argument for unconverged duals.
std::pair<Vector, Vector> uot_grad(const DualState& duals, const UotParams& params);

/// Dual objective at arbitrary scalings (a, b):
/// -gamma <x, a^{-eps/gamma} - 1> - gamma <y, b^{-eps/gamma} - 1> - eps (<a, K b> - |K|_1).
double uot_dual_objective(const Vector& x, const Vector& y, const Vector& log_a,
                          const Vector& log_b, const GroundGeometry& geometry,
                          const UotParams& params);

/// Self terms for every row of a series.
std::vector<SymmetricResult> self_terms(const Series& frames, const GroundGeometry& geometry,
                                        const UotParams& params, int threads = 1,
                                        const std::vector<SymmetricResult>* warm = nullptr);

/// Pairwise UOT~ between the rows of `xs` and `ys` given their self terms.
/// `warm`/`duals_out`, when given, hold one DualState per (i, j) in row-major
/// order. Throws NumericalError if a solve does not converge.
Matrix debiased_uot_matrix(const Series& xs, const Series& ys,
                           const std::vector<SymmetricResult>& self_x,
                           const std::vector<SymmetricResult>& self_y,
                           const GroundGeometry& geometry, const UotParams& params,
                           int threads = 1, const std::vector<DualState>* warm = nullptr,
                           std::vector<DualState>* duals_out = nullptr);

}  // namespace sta
