#pragma once

// Ground metric C on a fixed support and its Gibbs kernel K = exp(-C / eps).
//
// Two storage forms are supported. A dense form keeps C and K as p x p
// matrices. A grid form describes an h x w pixel grid with squared Euclidean
// cost; there K factors as K_h (x) K_w and K v costs O(p^{3/2}) instead of
// O(p^2). Pixel (i, j) maps to support index i * w + j.
//
// Every constructed C is symmetric with zero diagonal, so K^T = K and a single
// apply() serves both Sinkhorn half-steps.

#include "sta/types.hpp"

namespace sta {

class GroundGeometry {
 public:
  /// Dense geometry from an explicit cost matrix. Throws std::invalid_argument
  /// unless C is square, symmetric (to 1e-12 relative), non-negative and has a
  /// zero diagonal.
  static GroundGeometry from_cost(Matrix cost, double epsilon);

  /// h x w grid with C = (di^2 + dj^2), divided by its maximum when
  /// `normalize` is set. Uses the separable kernel form.
  static GroundGeometry grid(int h, int w, double epsilon, bool normalize = true);

  Eigen::Index size() const { return p_; }
  double epsilon() const { return epsilon_; }
  bool separable() const { return separable_; }
  int grid_rows() const { return h_; }
  int grid_cols() const { return w_; }

  /// Same support and cost, different regularisation.
  GroundGeometry with_epsilon(double epsilon) const;

  double cost(Eigen::Index i, Eigen::Index j) const;
  Matrix dense_cost() const;
  Matrix dense_kernel() const;

  /// Entrywise sum of K.
  double kernel_mass() const;

  /// K v in the linear domain.
  Vector apply(const Vector& v) const;

  /// log(K exp(log_v)), with -inf entries meaning zero mass. Products are
  /// formed in the linear domain after a max shift; entries that would
  /// underflow are recomputed with an exact log-sum-exp.
  Vector apply_log(const Vector& log_v) const;

 private:
  GroundGeometry() = default;
  void build_kernels();

  Eigen::Index p_ = 0;
  double epsilon_ = 1.0;
  bool separable_ = false;

  // dense form
  Matrix cost_;
  Matrix kernel_;
  Matrix log_kernel_;

  // grid form: cost = scale_ * (di^2 + dj^2)
  int h_ = 0;
  int w_ = 0;
  double scale_ = 1.0;
  Matrix kernel_h_;
  Matrix kernel_w_;
  Matrix log_kernel_h_;
  Matrix log_kernel_w_;
};

/// Squared Euclidean cost between the pixels of an h x w grid, optionally
/// divided by its maximum entry.
Matrix grid_cost_2d(int h, int w, bool normalize);

/// 1 / p.
double default_epsilon(Eigen::Index p);

/// Smallest eigenvalue of the dense kernel; throws std::length_error for
/// p > 4096.
double min_kernel_eigenvalue(const GroundGeometry& geometry);

}  // namespace sta
