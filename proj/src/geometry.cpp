#include "sta/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "logsumexp.hpp"

namespace sta {

namespace {

using detail::kInf;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Below this a linear-domain sum may have lost its dominant terms to
// underflow and is recomputed exactly.
constexpr double kUnderflowGuard = 1e-250;

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("epsilon must be positive and finite");
  }
}

// Row-wise log(exp(L) K) for a symmetric kernel K along the last axis of L,
// with log_kernel = log K given separately so underflowed entries can be
// recomputed exactly.
RowMajorMatrix log_apply_rows(const RowMajorMatrix& L, const Matrix& kernel,
                              const Matrix& log_kernel) {
  const Eigen::Index n = L.cols();
  Eigen::VectorXd shift(L.rows());
  RowMajorMatrix U(L.rows(), n);
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    shift(i) = L.row(i).maxCoeff();
    if (shift(i) == -kInf) {
      U.row(i).setZero();
    } else {
      U.row(i) = (L.row(i).array() - shift(i)).exp();
    }
  }
  const RowMajorMatrix linear = U * kernel;
  RowMajorMatrix out = linear.array().log();
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    if (shift(i) == -kInf) {
      out.row(i).setConstant(-kInf);
      continue;
    }
    out.row(i).array() += shift(i);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (linear(i, j) >= kUnderflowGuard) continue;
      double hi = -kInf;
      for (Eigen::Index k = 0; k < n; ++k) hi = std::max(hi, L(i, k) + log_kernel(k, j));
      if (hi == -kInf) {
        out(i, j) = -kInf;
        continue;
      }
      double s = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) s += std::exp(L(i, k) + log_kernel(k, j) - hi);
      out(i, j) = hi + std::log(s);
    }
  }
  return out;
}

Matrix axis_log_kernel(int n, double scale, double epsilon) {
  Matrix lk(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const double d = static_cast<double>(a - b);
      lk(a, b) = -scale * d * d / epsilon;
    }
  }
  return lk;
}

}  // namespace

GroundGeometry GroundGeometry::from_cost(Matrix cost, double epsilon) {
  check_epsilon(epsilon);
  if (cost.rows() != cost.cols() || cost.rows() < 1) {
    throw std::invalid_argument("ground cost must be a non-empty square matrix");
  }
  if (!cost.allFinite()) throw std::invalid_argument("ground cost must be finite");
  const double scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < cost.rows(); ++i) {
    if (cost(i, i) != 0.0) throw std::invalid_argument("ground cost must have a zero diagonal");
    for (Eigen::Index j = 0; j < cost.cols(); ++j) {
      if (cost(i, j) < 0.0) throw std::invalid_argument("ground cost must be non-negative");
      if (std::abs(cost(i, j) - cost(j, i)) > 1e-12 * scale) {
        throw std::invalid_argument("ground cost must be symmetric");
      }
    }
  }
  GroundGeometry g;
  g.p_ = cost.rows();
  g.epsilon_ = epsilon;
  g.separable_ = false;
  g.cost_ = std::move(cost);
  g.build_kernels();
  return g;
}

GroundGeometry GroundGeometry::grid(int h, int w, double epsilon, bool normalize) {
  check_epsilon(epsilon);
  if (h < 1 || w < 1) throw std::invalid_argument("grid dimensions must be >= 1");
  GroundGeometry g;
  g.p_ = static_cast<Eigen::Index>(h) * w;
  g.epsilon_ = epsilon;
  g.separable_ = true;
  g.h_ = h;
  g.w_ = w;
  const double diameter = static_cast<double>((h - 1) * (h - 1) + (w - 1) * (w - 1));
  g.scale_ = (normalize && diameter > 0.0) ? 1.0 / diameter : 1.0;
  g.build_kernels();
  return g;
}

void GroundGeometry::build_kernels() {
  if (separable_) {
    log_kernel_h_ = axis_log_kernel(h_, scale_, epsilon_);
    log_kernel_w_ = axis_log_kernel(w_, scale_, epsilon_);
    kernel_h_ = log_kernel_h_.array().exp().matrix();
    kernel_w_ = log_kernel_w_.array().exp().matrix();
  } else {
    log_kernel_ = -cost_ / epsilon_;
    kernel_ = log_kernel_.array().exp().matrix();
  }
}

GroundGeometry GroundGeometry::with_epsilon(double epsilon) const {
  check_epsilon(epsilon);
  GroundGeometry g = *this;
  g.epsilon_ = epsilon;
  g.build_kernels();
  return g;
}

double GroundGeometry::cost(Eigen::Index i, Eigen::Index j) const {
  if (!separable_) return cost_(i, j);
  const double di = static_cast<double>(i / w_ - j / w_);
  const double dj = static_cast<double>(i % w_ - j % w_);
  return scale_ * (di * di + dj * dj);
}

Matrix GroundGeometry::dense_cost() const {
  if (!separable_) return cost_;
  Matrix c(p_, p_);
  for (Eigen::Index i = 0; i < p_; ++i) {
    for (Eigen::Index j = 0; j < p_; ++j) c(i, j) = cost(i, j);
  }
  return c;
}

Matrix GroundGeometry::dense_kernel() const {
  if (!separable_) return kernel_;
  return (-dense_cost().array() / epsilon_).exp().matrix();
}

double GroundGeometry::kernel_mass() const {
  if (!separable_) return kernel_.sum();
  return kernel_h_.sum() * kernel_w_.sum();
}

Vector GroundGeometry::apply(const Vector& v) const {
  if (v.size() != p_) {
    throw std::invalid_argument("kernel apply: vector of size " + std::to_string(v.size()) +
                                " for support of size " + std::to_string(p_));
  }
  if (!separable_) return kernel_ * v;
  Eigen::Map<const RowMajorMatrix> V(v.data(), h_, w_);
  Vector out(p_);
  Eigen::Map<RowMajorMatrix> O(out.data(), h_, w_);
  O.noalias() = kernel_h_ * V * kernel_w_;
  return out;
}

Vector GroundGeometry::apply_log(const Vector& log_v) const {
  if (log_v.size() != p_) {
    throw std::invalid_argument("kernel apply: vector of size " + std::to_string(log_v.size()) +
                                " for support of size " + std::to_string(p_));
  }
  if (separable_) {
    // Along the j axis of the image, then along the i axis.
    const RowMajorMatrix L = Eigen::Map<const RowMajorMatrix>(log_v.data(), h_, w_);
    const RowMajorMatrix Lw = log_apply_rows(L, kernel_w_, log_kernel_w_);
    const RowMajorMatrix Lh = log_apply_rows(Lw.transpose(), kernel_h_, log_kernel_h_);
    Vector out(p_);
    Eigen::Map<RowMajorMatrix>(out.data(), h_, w_) = Lh.transpose();
    return out;
  }
  const RowMajorMatrix L = log_v.transpose();
  return log_apply_rows(L, kernel_, log_kernel_).transpose();
}

Matrix grid_cost_2d(int h, int w, bool normalize) {
  if (h < 1 || w < 1) throw std::invalid_argument("grid dimensions must be >= 1");
  return GroundGeometry::grid(h, w, 1.0, normalize).dense_cost();
}

double default_epsilon(Eigen::Index p) {
  if (p < 1) throw std::invalid_argument("default_epsilon: p must be >= 1");
  return 1.0 / static_cast<double>(p);
}

double min_kernel_eigenvalue(const GroundGeometry& geometry) {
  if (geometry.size() > 4096) throw std::length_error("PSD check limited to p <= 4096");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(geometry.dense_kernel(), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

}  // namespace sta
