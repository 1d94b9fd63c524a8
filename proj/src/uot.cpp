#include "sta/uot.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

#include "logsumexp.hpp"
#include "scaling.hpp"
#include "sta/parallel.hpp"

namespace sta {

using detail::kInf;
using detail::safe_log;
using detail::scaling_update;
using detail::sup_change;

void check_measure(const Vector& x, const char* what) {
  bool positive = false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x(i);
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument(std::string(what) + ": weights must be finite and non-negative");
    }
    positive = positive || v > 0.0;
  }
  if (!positive) throw std::invalid_argument(std::string(what) + ": measure has zero total mass");
}

void UotParams::validate(const GroundGeometry& geometry) const {
  if (!(epsilon > 0.0) || !(gamma > 0.0) || !(tol > 0.0) || max_iter < 1) {
    throw std::invalid_argument("UotParams: epsilon, gamma, tol and max_iter must be positive");
  }
  if (std::abs(epsilon - geometry.epsilon()) > 1e-12 * epsilon) {
    throw std::invalid_argument("UotParams: epsilon " + std::to_string(epsilon) +
                                " differs from the geometry's " +
                                std::to_string(geometry.epsilon()));
  }
}

namespace {

// Warm-start vector with the zero pattern of the measure enforced.
Vector initial_scaling(const Vector& log_x, const Vector* warm) {
  Vector out = warm != nullptr && warm->size() == log_x.size() ? *warm
                                                               : Vector::Zero(log_x.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (log_x(i) == -kInf) {
      out(i) = -kInf;
    } else if (!std::isfinite(out(i))) {
      out(i) = 0.0;
    }
  }
  return out;
}

// <exp(log_u), exp(log_v)>
double log_domain_dot(const Vector& log_u, const Vector& log_v) {
  const Vector s = log_u + log_v;
  // -inf + finite = -inf; -inf + +inf cannot occur for valid scalings.
  return std::exp(detail::logsumexp(s.data(), s.data() + s.size()));
}

}  // namespace

double kl_divergence(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("kl_divergence: length mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) < 0.0 || y(i) < 0.0) throw std::invalid_argument("kl_divergence: negative entry");
    if (x(i) == 0.0) {
      total += y(i);
    } else if (y(i) == 0.0) {
      return kInf;
    } else {
      total += x(i) * std::log(x(i) / y(i)) - x(i) + y(i);
    }
  }
  return total;
}

UotResult sinkhorn_uot(const Vector& x, const Vector& y, const GroundGeometry& geometry,
                       const UotParams& params, const DualState* warm) {
  params.validate(geometry);
  if (x.size() != geometry.size() || y.size() != geometry.size()) {
    throw std::invalid_argument("sinkhorn_uot: measure size does not match the support");
  }
  check_measure(x, "sinkhorn_uot(x)");
  check_measure(y, "sinkhorn_uot(y)");
  const double omega = params.omega();
  const Vector log_x = safe_log(x);
  const Vector log_y = safe_log(y);

  UotResult result;
  DualState& d = result.duals;
  d.log_a = initial_scaling(log_x, warm != nullptr ? &warm->log_a : nullptr);
  d.log_b = initial_scaling(log_y, warm != nullptr ? &warm->log_b : nullptr);
  for (int it = 1; it <= params.max_iter; ++it) {
    Vector next_a = scaling_update(log_x, geometry.apply_log(d.log_b), omega);
    const double change_a = sup_change(next_a, d.log_a);
    d.log_a = std::move(next_a);
    Vector next_b = scaling_update(log_y, geometry.apply_log(d.log_a), omega);
    const double change_b = sup_change(next_b, d.log_b);
    d.log_b = std::move(next_b);
    d.iterations = it;
    d.marginal_gap = std::max(change_a, change_b);
    if (change_b <= params.tol) {
      d.converged = true;
      break;
    }
  }
  result.inner = log_domain_dot(d.log_a, geometry.apply_log(d.log_b));
  result.value = -(params.epsilon + 2.0 * params.gamma) * result.inner +
                 params.epsilon * geometry.kernel_mass() + params.gamma * (x.sum() + y.sum());
  return result;
}

SymmetricResult symmetric_sinkhorn(const Vector& x, const GroundGeometry& geometry,
                                   const UotParams& params, const Vector* warm_log_c) {
  params.validate(geometry);
  if (x.size() != geometry.size()) {
    throw std::invalid_argument("symmetric_sinkhorn: measure size does not match the support");
  }
  check_measure(x, "symmetric_sinkhorn(x)");
  const double omega = params.omega();
  const Vector log_x = safe_log(x);

  SymmetricResult result;
  result.log_c = initial_scaling(log_x, warm_log_c);
  Vector log_kc = geometry.apply_log(result.log_c);
  for (int it = 1; it <= params.max_iter; ++it) {
    const Vector target = scaling_update(log_x, log_kc, omega);
    result.residual = sup_change(target, result.log_c);
    result.iterations = it;
    if (result.residual <= params.tol) {
      result.converged = true;
      break;
    }
    for (Eigen::Index i = 0; i < target.size(); ++i) {
      if (log_x(i) != -kInf) result.log_c(i) = 0.5 * (result.log_c(i) + target(i));
    }
    log_kc = geometry.apply_log(result.log_c);
  }
  result.inner = log_domain_dot(result.log_c, log_kc);
  result.value = -(params.epsilon + 2.0 * params.gamma) * result.inner +
                 params.epsilon * geometry.kernel_mass() + 2.0 * params.gamma * x.sum();
  return result;
}

Matrix transport_plan(const DualState& duals, const GroundGeometry& geometry) {
  const Eigen::Index p = geometry.size();
  if (duals.log_a.size() != p || duals.log_b.size() != p) {
    throw std::invalid_argument("transport_plan: dual size does not match the support");
  }
  const double eps = geometry.epsilon();
  Matrix plan(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      plan(i, j) = std::exp(duals.log_a(i) + duals.log_b(j) - geometry.cost(i, j) / eps);
    }
  }
  return plan;
}

double transported_mass_fraction(const Matrix& plan, const Vector& x, const Vector& y) {
  const double smaller = std::min(x.sum(), y.sum());
  if (!(smaller > 0.0)) throw std::invalid_argument("transported_mass_fraction: zero mass");
  return plan.sum() / smaller;
}

double debiased_value(const UotResult& cross, const SymmetricResult& self_x,
                      const SymmetricResult& self_y, const UotParams& params) {
  return (params.epsilon + 2.0 * params.gamma) *
         (0.5 * (self_x.inner + self_y.inner) - cross.inner);
}

double debiased_uot(const Vector& x, const Vector& y, const GroundGeometry& geometry,
                    const UotParams& params) {
  const auto cross = sinkhorn_uot(x, y, geometry, params);
  const auto sx = symmetric_sinkhorn(x, geometry, params);
  const auto sy = symmetric_sinkhorn(y, geometry, params);
  if (!cross.duals.converged || !sx.converged || !sy.converged) {
    throw NumericalError("debiased_uot: Sinkhorn did not converge within " +
                         std::to_string(params.max_iter) + " iterations");
  }
  return debiased_value(cross, sx, sy, params);
}

std::pair<Vector, Vector> uot_grad(const DualState& duals, const UotParams& params) {
  if (!duals.converged) throw std::invalid_argument("uot_grad: duals have not converged");
  const double k = params.epsilon / params.gamma;
  auto grad = [&](const Vector& log_s) {
    return Vector(params.gamma * (1.0 - (-k * log_s.array()).exp()));
  };
  return {grad(duals.log_a), grad(duals.log_b)};
}

double uot_dual_objective(const Vector& x, const Vector& y, const Vector& log_a,
                          const Vector& log_b, const GroundGeometry& geometry,
                          const UotParams& params) {
  const double k = params.epsilon / params.gamma;
  auto mass_term = [&](const Vector& m, const Vector& log_s) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      if (m(i) > 0.0) total += m(i) * (std::exp(-k * log_s(i)) - 1.0);
    }
    return total;
  };
  const double inner = log_domain_dot(log_a, geometry.apply_log(log_b));
  return -params.gamma * mass_term(x, log_a) - params.gamma * mass_term(y, log_b) -
         params.epsilon * (inner - geometry.kernel_mass());
}

std::vector<SymmetricResult> self_terms(const Series& frames, const GroundGeometry& geometry,
                                        const UotParams& params, int threads,
                                        const std::vector<SymmetricResult>* warm) {
  const auto n = static_cast<std::size_t>(frames.rows());
  std::vector<SymmetricResult> out(n);
  std::atomic<bool> failed{false};
  parallel_for(n, threads, [&](std::size_t t) {
    const Vector frame = frames.row(static_cast<Eigen::Index>(t)).transpose();
    const Vector* w = warm != nullptr && warm->size() == n ? &(*warm)[t].log_c : nullptr;
    out[t] = symmetric_sinkhorn(frame, geometry, params, w);
    if (!out[t].converged) failed = true;
  });
  if (failed) {
    throw NumericalError("symmetric Sinkhorn did not converge within " +
                         std::to_string(params.max_iter) + " iterations");
  }
  return out;
}

Matrix debiased_uot_matrix(const Series& xs, const Series& ys,
                           const std::vector<SymmetricResult>& self_x,
                           const std::vector<SymmetricResult>& self_y,
                           const GroundGeometry& geometry, const UotParams& params, int threads,
                           const std::vector<DualState>* warm, std::vector<DualState>* duals_out) {
  const auto nx = static_cast<std::size_t>(xs.rows());
  const auto ny = static_cast<std::size_t>(ys.rows());
  if (self_x.size() != nx || self_y.size() != ny) {
    throw std::invalid_argument("debiased_uot_matrix: self terms do not match the frames");
  }
  const bool use_warm = warm != nullptr && warm->size() == nx * ny;
  Matrix out(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(ny));
  if (duals_out != nullptr) duals_out->assign(nx * ny, DualState{});
  std::atomic<bool> failed{false};
  parallel_for(nx * ny, threads, [&](std::size_t idx) {
    const std::size_t i = idx / ny;
    const std::size_t j = idx % ny;
    const Vector xi = xs.row(static_cast<Eigen::Index>(i)).transpose();
    const Vector yj = ys.row(static_cast<Eigen::Index>(j)).transpose();
    auto cross = sinkhorn_uot(xi, yj, geometry, params, use_warm ? &(*warm)[idx] : nullptr);
    if (!cross.duals.converged) failed = true;
    out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
        debiased_value(cross, self_x[i], self_y[j], params);
    if (duals_out != nullptr) (*duals_out)[idx] = std::move(cross.duals);
  });
  if (failed) {
    throw NumericalError("unbalanced Sinkhorn did not converge within " +
                         std::to_string(params.max_iter) + " iterations");
  }
  return out;
}

}  // namespace sta
