#pragma once

// Barycenters.
//
// Spatial: the debiased UOT barycenter
//   min_x J(x) = sum_k w_k UOT~(x_k, x)
// solved with a Sinkhorn-like fixed point over (a_k, b_k, c, x), and the
// biased variant obtained by freezing c = 1.
//
// Temporal: the Soft-DTW barycenter of series under an arbitrary frame cost,
// alternating between alignment weights Z^i = w_i E_beta(x_i, x) and one
// inner barycenter per output frame. STA plugs UOT~ in as the frame cost and
// the debiased barycenter as the inner solver.

#include <functional>
#include <string>
#include <vector>

#include "sta/geometry.hpp"
#include "sta/types.hpp"
#include "sta/uot.hpp"

namespace sta {

/// Dual variables of the spatial barycenter, reusable as a warm start. An
/// empty log_a[k] / log_b[k] means "start input k from 1".
struct BarycenterState {
  std::vector<Vector> log_a;
  std::vector<Vector> log_b;
  Vector log_c;
};

struct BarycenterOptions {
  int threads = 1;
  // Solve the fixed points at the output again and report |grad J|_inf.
  bool compute_gradient = true;
};

struct BarycenterResult {
  Vector barycenter;
  BarycenterState state;
  bool converged = false;
  int iterations = 0;
  double change = 0.0;  // last mass-weighted sup-norm change of log x
  // |grad J(x)|_inf and the stationarity measure for x >= 0,
  // max_i |min(x_i, grad_i J(x))|; -1 when not computed.
  double grad_norm = -1.0;
  double projected_grad_norm = -1.0;
};

/// Normalises positive weights to sum to one. Throws std::invalid_argument for
/// an empty list or a non-positive / non-finite entry.
Vector normalized_weights(const Vector& weights);

/// Debiased UOT barycenter; iterates until the change of log x, weighted by
/// min(1, x_i / max x), is at most params.tol. Non-convergence is flagged,
/// not thrown.
BarycenterResult debiased_uot_barycenter(const std::vector<Vector>& inputs, const Vector& weights,
                                         const GroundGeometry& geometry, const UotParams& params,
                                         const BarycenterOptions& options = {},
                                         const BarycenterState* warm = nullptr);

/// Same iteration with c fixed to 1 (the usual UOT barycenter).
BarycenterResult uot_barycenter_biased(const std::vector<Vector>& inputs, const Vector& weights,
                                       const GroundGeometry& geometry, const UotParams& params,
                                       const BarycenterOptions& options = {},
                                       const BarycenterState* warm = nullptr);

/// J(x) = sum_k w_k UOT~(x_k, x) with weights normalised.
double barycenter_objective(const Vector& x, const std::vector<Vector>& inputs,
                            const Vector& weights, const GroundGeometry& geometry,
                            const UotParams& params, int threads = 1);

/// grad J(x) = gamma (c^{-eps/gamma} - sum_k w_k b_k^{-eps/gamma}), solving the
/// fixed points for (a_k, b_k) and c at x. Throws NumericalError when one of
/// them does not converge.
Vector grad_J(const Vector& x, const std::vector<Vector>& inputs, const Vector& weights,
              const GroundGeometry& geometry, const UotParams& params, int threads = 1);

// ---------------------------------------------------------------------------
// Soft-DTW barycenter

struct FrameRef {
  int series;  // input index i
  int time;    // frame index t' inside input i
};

/// Delta(x_i, x) for every input, each T_i x T_out.
using CostOracle = std::function<std::vector<Matrix>(const Series& x)>;

/// Weighted barycenter of the referenced input frames for output frame t.
/// Weights are positive and sum to one; `previous` is the current frame.
using InnerOracle = std::function<Vector(int t, const std::vector<FrameRef>& frames,
                                         const std::vector<double>& weights,
                                         const Vector& previous)>;

struct SdtwBarycenterOptions {
  double beta = 1.0;
  int max_outer = 50;
  double rel_tol = 1e-5;
  int threads = 1;
  // Output frames [0, clamp_prefix) stay equal to x0.
  int clamp_prefix = 0;
  // Frame weights below prune * (largest weight of the column) are dropped.
  double prune = 1e-14;
};

struct SdtwBarycenterResult {
  Series barycenter;
  std::vector<double> objective;  // sum_i w_i sdtw(x_i, x) before each update, then at the output
  int outer_iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

/// Z^i = w_i E_beta(Delta_i) for normalised weights.
std::vector<Matrix> temporal_weights(const std::vector<Matrix>& deltas, const Vector& weights,
                                     double beta, int threads = 1);

/// Alternating Soft-DTW barycenter starting from x0 (T_out x p).
SdtwBarycenterResult sdtw_barycenter(const std::vector<Series>& inputs, const Vector& weights,
                                     const CostOracle& cost, const InnerOracle& inner,
                                     const Series& x0, const SdtwBarycenterOptions& options);

/// Constant frames whose mass is the mean frame mass of the inputs.
Series uniform_initialization(const std::vector<Series>& inputs, int T_out);

// ---------------------------------------------------------------------------
// STA

/// Pairwise UOT~ between the frames of x and y (T_x x T_y).
Matrix sta_cost_matrix(const Series& x, const Series& y, const GroundGeometry& geometry,
                       const UotParams& params, int threads = 1);

/// sdtw(x, y) with UOT~ frame costs.
double sta_distance(const Series& x, const Series& y, const GroundGeometry& geometry,
                    const UotParams& params, double beta, int threads = 1);

/// STA barycenter with uniform x0 unless one is given; T_out defaults to the
/// length of the first input.
SdtwBarycenterResult sta_barycenter(const std::vector<Series>& inputs, const Vector& weights,
                                    const GroundGeometry& geometry, const UotParams& params,
                                    const SdtwBarycenterOptions& options,
                                    const Series* x0 = nullptr, int T_out = -1);

/// Frame t of the output is the (debiased or biased) UOT barycenter of the
/// frames t of the inputs. All inputs must share their length.
Series framewise_uot_barycenter(const std::vector<Series>& inputs, const Vector& weights,
                                const GroundGeometry& geometry, const UotParams& params,
                                bool debiased = true, int threads = 1);

/// Weighted arithmetic mean of equally long series.
Series euclidean_mean(const std::vector<Series>& inputs, const Vector& weights);

}  // namespace sta
