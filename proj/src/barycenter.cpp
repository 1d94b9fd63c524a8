#include "sta/barycenter.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

#include "logsumexp.hpp"
#include "scaling.hpp"
#include "sta/align.hpp"
#include "sta/parallel.hpp"

namespace sta {

using detail::kInf;
using detail::safe_log;
using detail::scaling_update;
using detail::sup_change;

Vector normalized_weights(const Vector& weights) {
  if (weights.size() == 0) throw std::invalid_argument("barycenter: empty weight vector");
  for (Eigen::Index k = 0; k < weights.size(); ++k) {
    if (!(weights(k) > 0.0) || !std::isfinite(weights(k))) {
      throw std::invalid_argument("barycenter: weights must be positive and finite");
    }
  }
  return weights / weights.sum();
}

namespace {

void check_inputs(const std::vector<Vector>& inputs, const Vector& weights,
                  const GroundGeometry& geometry) {
  if (inputs.empty()) throw std::invalid_argument("barycenter: no input measures");
  if (static_cast<std::size_t>(weights.size()) != inputs.size()) {
    throw std::invalid_argument("barycenter: " + std::to_string(weights.size()) +
                                " weights for " + std::to_string(inputs.size()) + " inputs");
  }
  for (const auto& x : inputs) {
    if (x.size() != geometry.size()) {
      throw std::invalid_argument("barycenter: input size does not match the support");
    }
    check_measure(x, "barycenter input");
  }
}

// log sum_k w_k exp(s l_k) for small s without losing the leading order:
// shift + log1p(sum_k w_k expm1(s l_k - shift)), valid because sum_k w_k = 1.
double log_power_mean_sum(const Vector& w, const std::vector<const Vector*>& l, Eigen::Index i,
                          double s) {
  double shift = -kInf;
  for (const Vector* v : l) shift = std::max(shift, s * (*v)(i));
  double acc = 0.0;
  for (std::size_t k = 0; k < l.size(); ++k) {
    acc += w(static_cast<Eigen::Index>(k)) * std::expm1(s * (*l[k])(i) - shift);
  }
  return shift + std::log1p(acc);
}

// sup_i |d log x_i| min(1, x_i / max x): the sup-norm change of log x on the
// entries that carry mass. Entries far in the tails of a sharp barycenter
// decay towards zero sublinearly and would otherwise never settle.
double mass_weighted_change(const Vector& next, const Vector& prev) {
  const double top = next.maxCoeff();
  double gap = 0.0;
  for (Eigen::Index i = 0; i < next.size(); ++i) {
    const double rel = std::min(1.0, std::exp(next(i) - top));
    gap = std::max(gap, std::abs(next(i) - prev(i)) * rel);
  }
  return gap;
}

// gamma (c^{-eps/gamma} - sum_k w_k b_k^{-eps/gamma}) written with expm1 so the
// O(1) parts cancel exactly.
Vector gradient_from_duals(const Vector& log_c, const std::vector<Vector>& log_b, const Vector& w,
                           const UotParams& params) {
  const double k = params.epsilon / params.gamma;
  Vector g = Vector::Zero(log_c.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    double s = std::expm1(-k * log_c(i));
    for (std::size_t j = 0; j < log_b.size(); ++j) {
      s -= w(static_cast<Eigen::Index>(j)) * std::expm1(-k * log_b[j](i));
    }
    g(i) = params.gamma * s;
  }
  return g;
}

// Fixed points (b_k, c) at x.
struct GradientSolve {
  std::vector<Vector> log_b;
  Vector log_c;
  bool converged = true;
};

GradientSolve solve_fixed_points(const Vector& x, const std::vector<Vector>& inputs,
                                 const GroundGeometry& geometry, const UotParams& params,
                                 int threads, const BarycenterState* warm) {
  const std::size_t n = inputs.size();
  std::vector<Vector> log_b(n);
  std::vector<char> ok(n, 1);
  parallel_for(n, threads, [&](std::size_t k) {
    DualState start;
    const DualState* ws = nullptr;
    if (warm != nullptr && warm->log_a.size() == n && warm->log_a[k].size() == x.size()) {
      start.log_a = warm->log_a[k];
      start.log_b = warm->log_b[k];
      ws = &start;
    }
    auto res = sinkhorn_uot(inputs[k], x, geometry, params, ws);
    ok[k] = res.duals.converged ? 1 : 0;
    log_b[k] = std::move(res.duals.log_b);
  });
  const Vector* warm_c = warm != nullptr && warm->log_c.size() == x.size() ? &warm->log_c : nullptr;
  const auto self = symmetric_sinkhorn(x, geometry, params, warm_c);
  GradientSolve out;
  out.log_b = std::move(log_b);
  out.log_c = self.log_c;
  out.converged = self.converged;
  for (char c : ok) out.converged = out.converged && c != 0;
  return out;
}

BarycenterResult solve_barycenter(const std::vector<Vector>& inputs, const Vector& weights,
                                  const GroundGeometry& geometry, const UotParams& params,
                                  const BarycenterOptions& options, const BarycenterState* warm,
                                  bool debiased) {
  params.validate(geometry);
  check_inputs(inputs, weights, geometry);
  const Vector w = normalized_weights(weights);
  const std::size_t n = inputs.size();
  const Eigen::Index p = geometry.size();
  const double omega = params.omega();
  const double one_minus_omega = params.epsilon / (params.gamma + params.epsilon);

  std::vector<Vector> log_x(n);
  for (std::size_t k = 0; k < n; ++k) log_x[k] = safe_log(inputs[k]);

  BarycenterResult result;
  BarycenterState& st = result.state;
  st.log_a.assign(n, Vector());
  st.log_b.assign(n, Vector());
  const bool warm_ok = warm != nullptr && warm->log_a.size() == n && warm->log_b.size() == n;
  for (std::size_t k = 0; k < n; ++k) {
    const bool have = warm_ok && warm->log_a[k].size() == p && warm->log_b[k].size() == p &&
                      warm->log_b[k].allFinite();
    st.log_a[k] = have ? warm->log_a[k] : Vector::Zero(p);
    st.log_b[k] = have ? warm->log_b[k] : Vector::Zero(p);
  }
  st.log_c = Vector::Zero(p);
  if (debiased && warm != nullptr && warm->log_c.size() == p && warm->log_c.allFinite()) {
    st.log_c = warm->log_c;
  }

  Vector log_bar = Vector::Constant(p, kInf);
  std::vector<Vector> log_kta(n);
  std::vector<const Vector*> kta_ptrs(n);
  for (std::size_t k = 0; k < n; ++k) kta_ptrs[k] = &log_kta[k];

  for (int it = 1; it <= params.max_iter; ++it) {
    parallel_for(n, options.threads, [&](std::size_t k) {
      st.log_a[k] = scaling_update(log_x[k], geometry.apply_log(st.log_b[k]), omega);
      log_kta[k] = geometry.apply_log(st.log_a[k]);
    });
    Vector next(p);
    for (Eigen::Index i = 0; i < p; ++i) {
      next(i) = log_power_mean_sum(w, kta_ptrs, i, one_minus_omega) / one_minus_omega;
      if (debiased) next(i) += st.log_c(i) / omega;
    }
    parallel_for(n, options.threads,
                 [&](std::size_t k) { st.log_b[k] = omega * (next - log_kta[k]); });
    if (debiased) st.log_c = omega * (next - geometry.apply_log(st.log_c));

    result.change = it == 1 ? kInf : mass_weighted_change(next, log_bar);
    log_bar = std::move(next);
    result.iterations = it;
    if (result.change <= params.tol) {
      result.converged = true;
      break;
    }
  }
  result.barycenter = log_bar.array().exp();
  if (options.compute_gradient) {
    // Fresh solves at a tighter tolerance: a warm start from the barycenter
    // duals passes the stopping test before the slow modes have settled.
    UotParams tight = params;
    tight.tol = std::max(params.tol * 1e-2, 1e-13);
    tight.max_iter = params.max_iter * 10;
    const auto fp = solve_fixed_points(result.barycenter, inputs, geometry, tight,
                                       options.threads, nullptr);
    // without the self term the objective is sum_k w_k UOT(x_k, x), whose
    // gradient is the same expression with c = 1
    const Vector log_c = debiased ? fp.log_c : Vector::Zero(p);
    const Vector g = gradient_from_duals(log_c, fp.log_b, w, params);
    result.grad_norm = g.cwiseAbs().maxCoeff();
    result.projected_grad_norm = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      result.projected_grad_norm =
          std::max(result.projected_grad_norm, std::abs(std::min(result.barycenter(i), g(i))));
    }
  }
  return result;
}

}  // namespace

BarycenterResult debiased_uot_barycenter(const std::vector<Vector>& inputs, const Vector& weights,
                                         const GroundGeometry& geometry, const UotParams& params,
                                         const BarycenterOptions& options,
                                         const BarycenterState* warm) {
  return solve_barycenter(inputs, weights, geometry, params, options, warm, true);
}

BarycenterResult uot_barycenter_biased(const std::vector<Vector>& inputs, const Vector& weights,
                                       const GroundGeometry& geometry, const UotParams& params,
                                       const BarycenterOptions& options,
                                       const BarycenterState* warm) {
  return solve_barycenter(inputs, weights, geometry, params, options, warm, false);
}

double barycenter_objective(const Vector& x, const std::vector<Vector>& inputs,
                            const Vector& weights, const GroundGeometry& geometry,
                            const UotParams& params, int threads) {
  params.validate(geometry);
  check_inputs(inputs, weights, geometry);
  const Vector w = normalized_weights(weights);
  const auto self = symmetric_sinkhorn(x, geometry, params);
  if (!self.converged) throw NumericalError("barycenter_objective: self term did not converge");
  std::vector<double> terms(inputs.size());
  std::vector<char> ok(inputs.size(), 1);
  parallel_for(inputs.size(), threads, [&](std::size_t k) {
    const auto cross = sinkhorn_uot(inputs[k], x, geometry, params);
    const auto sk = symmetric_sinkhorn(inputs[k], geometry, params);
    ok[k] = cross.duals.converged && sk.converged ? 1 : 0;
    terms[k] = debiased_value(cross, sk, self, params);
  });
  double total = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (ok[k] == 0) throw NumericalError("barycenter_objective: Sinkhorn did not converge");
    total += w(static_cast<Eigen::Index>(k)) * terms[k];
  }
  return total;
}

Vector grad_J(const Vector& x, const std::vector<Vector>& inputs, const Vector& weights,
              const GroundGeometry& geometry, const UotParams& params, int threads) {
  params.validate(geometry);
  check_inputs(inputs, weights, geometry);
  if (x.size() != geometry.size()) throw std::invalid_argument("grad_J: size mismatch");
  check_measure(x, "grad_J(x)");
  const Vector w = normalized_weights(weights);
  const auto fp = solve_fixed_points(x, inputs, geometry, params, threads, nullptr);
  if (!fp.converged) throw NumericalError("grad_J: Sinkhorn did not converge");
  return gradient_from_duals(fp.log_c, fp.log_b, w, params);
}

// ---------------------------------------------------------------------------

std::vector<Matrix> temporal_weights(const std::vector<Matrix>& deltas, const Vector& weights,
                                     double beta, int threads) {
  if (static_cast<std::size_t>(weights.size()) != deltas.size()) {
    throw std::invalid_argument("temporal_weights: one weight per cost matrix required");
  }
  const Vector w = normalized_weights(weights);
  std::vector<Matrix> z(deltas.size());
  parallel_for(deltas.size(), threads, [&](std::size_t i) {
    z[i] = w(static_cast<Eigen::Index>(i)) *
           sdtw_value_and_grad(CostMatrix(deltas[i]), beta).E;
  });
  return z;
}

SdtwBarycenterResult sdtw_barycenter(const std::vector<Series>& inputs, const Vector& weights,
                                     const CostOracle& cost, const InnerOracle& inner,
                                     const Series& x0, const SdtwBarycenterOptions& options) {
  if (inputs.empty()) throw std::invalid_argument("sdtw_barycenter: no input series");
  if (static_cast<std::size_t>(weights.size()) != inputs.size()) {
    throw std::invalid_argument("sdtw_barycenter: one weight per input required");
  }
  if (!(options.beta > 0.0)) throw std::invalid_argument("sdtw_barycenter: beta must be > 0");
  if (options.max_outer < 0 || !(options.rel_tol >= 0.0)) {
    throw std::invalid_argument("sdtw_barycenter: invalid stopping parameters");
  }
  const Eigen::Index T_out = x0.rows();
  const Eigen::Index p = x0.cols();
  if (T_out < 1) throw std::invalid_argument("sdtw_barycenter: x0 has no frames");
  for (const auto& s : inputs) {
    if (s.rows() < 1 || s.cols() != p) {
      throw std::invalid_argument("sdtw_barycenter: inputs must be non-empty and share x0's support");
    }
  }
  if (options.clamp_prefix < 0 || options.clamp_prefix > T_out) {
    throw std::invalid_argument("sdtw_barycenter: clamp_prefix out of range");
  }
  const Vector w = normalized_weights(weights);
  const std::size_t n = inputs.size();

  SdtwBarycenterResult result;
  result.barycenter = x0;
  Series& x = result.barycenter;

  for (int outer = 0;; ++outer) {
    const std::vector<Matrix> deltas = cost(x);
    if (deltas.size() != n) throw std::logic_error("sdtw_barycenter: cost oracle returned wrong count");
    std::vector<SoftDtwGradient> grads(n);
    parallel_for(n, options.threads, [&](std::size_t i) {
      if (deltas[i].rows() != inputs[i].rows() || deltas[i].cols() != T_out) {
        throw std::logic_error("sdtw_barycenter: cost oracle returned a matrix of wrong shape");
      }
      grads[i] = sdtw_value_and_grad(CostMatrix(deltas[i]), options.beta);
    });
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) objective += w(static_cast<Eigen::Index>(i)) * grads[i].value;
    if (!result.objective.empty()) {
      const double prev = result.objective.back();
      result.objective.push_back(objective);
      if (prev - objective <= options.rel_tol * std::abs(prev)) {
        result.converged = true;
        break;
      }
    } else {
      result.objective.push_back(objective);
    }
    if (outer == options.max_outer) break;

    const auto t_count = static_cast<std::size_t>(T_out - options.clamp_prefix);
    std::vector<Vector> frames(t_count);
    std::vector<std::string> notes(t_count);
    parallel_for(t_count, options.threads, [&](std::size_t idx) {
      const int t = options.clamp_prefix + static_cast<int>(idx);
      const Vector previous = x.row(t).transpose();
      double total = 0.0;
      double largest = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double wi = w(static_cast<Eigen::Index>(i));
        for (Eigen::Index s = 0; s < grads[i].E.rows(); ++s) {
          const double z = wi * grads[i].E(s, t);
          total += z;
          largest = std::max(largest, z);
        }
      }
      if (!(total >= 1e-12)) {
        frames[idx] = previous;
        notes[idx] = "outer iteration " + std::to_string(outer + 1) + ": output frame " +
                     std::to_string(t) + " has total alignment weight " + std::to_string(total) +
                     "; kept the previous frame";
        return;
      }
      std::vector<FrameRef> refs;
      std::vector<double> zw;
      for (std::size_t i = 0; i < n; ++i) {
        const double wi = w(static_cast<Eigen::Index>(i));
        for (Eigen::Index s = 0; s < grads[i].E.rows(); ++s) {
          const double z = wi * grads[i].E(s, t);
          if (z > options.prune * largest) {
            refs.push_back({static_cast<int>(i), static_cast<int>(s)});
            zw.push_back(z);
          }
        }
      }
      double kept = 0.0;
      for (double z : zw) kept += z;
      for (double& z : zw) z /= kept;
      frames[idx] = inner(t, refs, zw, previous);
      if (frames[idx].size() != p) throw std::logic_error("sdtw_barycenter: inner oracle size mismatch");
    });
    for (std::size_t idx = 0; idx < t_count; ++idx) {
      x.row(options.clamp_prefix + static_cast<Eigen::Index>(idx)) = frames[idx].transpose();
      if (!notes[idx].empty()) result.warnings.push_back(std::move(notes[idx]));
    }
    result.outer_iterations = outer + 1;
  }
  return result;
}

Series uniform_initialization(const std::vector<Series>& inputs, int T_out) {
  if (inputs.empty()) throw std::invalid_argument("uniform_initialization: no inputs");
  if (T_out < 1) throw std::invalid_argument("uniform_initialization: T_out must be >= 1");
  const Eigen::Index p = inputs.front().cols();
  double mass = 0.0;
  Eigen::Index frames = 0;
  for (const auto& s : inputs) {
    mass += s.sum();
    frames += s.rows();
  }
  return Series::Constant(T_out, p, mass / static_cast<double>(frames) / static_cast<double>(p));
}

// ---------------------------------------------------------------------------

Matrix sta_cost_matrix(const Series& x, const Series& y, const GroundGeometry& geometry,
                       const UotParams& params, int threads) {
  params.validate(geometry);
  if (x.cols() != geometry.size() || y.cols() != geometry.size()) {
    throw std::invalid_argument("sta: series support does not match the geometry");
  }
  const auto sx = self_terms(x, geometry, params, threads);
  const auto sy = self_terms(y, geometry, params, threads);
  return debiased_uot_matrix(x, y, sx, sy, geometry, params, threads);
}

double sta_distance(const Series& x, const Series& y, const GroundGeometry& geometry,
                    const UotParams& params, double beta, int threads) {
  return sdtw_forward(CostMatrix(sta_cost_matrix(x, y, geometry, params, threads)), beta).value;
}

namespace {

// Warm-start memory for the STA inner problems, one slot per output frame.
struct InnerWarm {
  std::map<std::pair<int, int>, std::pair<Vector, Vector>> duals;
  Vector log_c;
};

}  // namespace

SdtwBarycenterResult sta_barycenter(const std::vector<Series>& inputs, const Vector& weights,
                                    const GroundGeometry& geometry, const UotParams& params,
                                    const SdtwBarycenterOptions& options, const Series* x0,
                                    int T_out) {
  params.validate(geometry);
  if (inputs.empty()) throw std::invalid_argument("sta_barycenter: no input series");
  for (const auto& s : inputs) {
    if (s.cols() != geometry.size()) {
      throw std::invalid_argument("sta_barycenter: series support does not match the geometry");
    }
  }
  const int out_len = x0 != nullptr ? static_cast<int>(x0->rows())
                                    : (T_out > 0 ? T_out : static_cast<int>(inputs.front().rows()));
  const Series start = x0 != nullptr ? *x0 : uniform_initialization(inputs, out_len);
  const int threads = options.threads;

  std::vector<std::vector<SymmetricResult>> self_in(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    self_in[i] = self_terms(inputs[i], geometry, params, threads);
  }
  std::vector<SymmetricResult> self_out;
  std::vector<std::vector<DualState>> cross_warm(inputs.size());

  CostOracle cost = [&](const Series& x) {
    self_out = self_terms(x, geometry, params, threads, self_out.empty() ? nullptr : &self_out);
    std::vector<Matrix> out(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      std::vector<DualState> duals;
      out[i] = debiased_uot_matrix(inputs[i], x, self_in[i], self_out, geometry, params, threads,
                                   cross_warm[i].empty() ? nullptr : &cross_warm[i], &duals);
      cross_warm[i] = std::move(duals);
    }
    return out;
  };

  std::vector<InnerWarm> warm(static_cast<std::size_t>(out_len));
  InnerOracle inner = [&](int t, const std::vector<FrameRef>& refs,
                          const std::vector<double>& zw, const Vector&) {
    InnerWarm& slot = warm[static_cast<std::size_t>(t)];
    std::vector<Vector> frames(refs.size());
    Vector wv(static_cast<Eigen::Index>(refs.size()));
    BarycenterState ws;
    ws.log_a.resize(refs.size());
    ws.log_b.resize(refs.size());
    ws.log_c = slot.log_c;
    for (std::size_t k = 0; k < refs.size(); ++k) {
      frames[k] = inputs[static_cast<std::size_t>(refs[k].series)].row(refs[k].time).transpose();
      wv(static_cast<Eigen::Index>(k)) = zw[k];
      const auto it = slot.duals.find({refs[k].series, refs[k].time});
      if (it != slot.duals.end()) {
        ws.log_a[k] = it->second.first;
        ws.log_b[k] = it->second.second;
      }
    }
    BarycenterOptions bo;
    bo.compute_gradient = false;
    auto res = debiased_uot_barycenter(frames, wv, geometry, params, bo, &ws);
    if (!res.converged) {
      throw NumericalError("STA barycenter: inner barycenter of output frame " +
                           std::to_string(t) + " did not converge within " +
                           std::to_string(params.max_iter) + " iterations");
    }
    slot.log_c = res.state.log_c;
    for (std::size_t k = 0; k < refs.size(); ++k) {
      slot.duals[{refs[k].series, refs[k].time}] = {std::move(res.state.log_a[k]),
                                                     std::move(res.state.log_b[k])};
    }
    return res.barycenter;
  };

  return sdtw_barycenter(inputs, weights, cost, inner, start, options);
}

Series framewise_uot_barycenter(const std::vector<Series>& inputs, const Vector& weights,
                                const GroundGeometry& geometry, const UotParams& params,
                                bool debiased, int threads) {
  if (inputs.empty()) throw std::invalid_argument("framewise barycenter: no inputs");
  const Eigen::Index T = inputs.front().rows();
  for (const auto& s : inputs) {
    if (s.rows() != T || s.cols() != geometry.size()) {
      throw std::invalid_argument("framewise barycenter: inputs must share length and support");
    }
  }
  Series out(T, geometry.size());
  std::vector<char> ok(static_cast<std::size_t>(T), 1);
  parallel_for(static_cast<std::size_t>(T), threads, [&](std::size_t t) {
    std::vector<Vector> frames;
    for (const auto& s : inputs) frames.push_back(s.row(static_cast<Eigen::Index>(t)).transpose());
    BarycenterOptions bo;
    bo.compute_gradient = false;
    const auto res = debiased ? debiased_uot_barycenter(frames, weights, geometry, params, bo)
                              : uot_barycenter_biased(frames, weights, geometry, params, bo);
    ok[t] = res.converged ? 1 : 0;
    out.row(static_cast<Eigen::Index>(t)) = res.barycenter.transpose();
  });
  for (Eigen::Index t = 0; t < T; ++t) {
    if (ok[static_cast<std::size_t>(t)] == 0) {
      throw NumericalError("framewise barycenter: frame " + std::to_string(t) +
                           " did not converge within " + std::to_string(params.max_iter) +
                           " iterations");
    }
  }
  return out;
}

Series euclidean_mean(const std::vector<Series>& inputs, const Vector& weights) {
  if (inputs.empty()) throw std::invalid_argument("euclidean_mean: no inputs");
  if (static_cast<std::size_t>(weights.size()) != inputs.size()) {
    throw std::invalid_argument("euclidean_mean: one weight per input required");
  }
  const Vector w = normalized_weights(weights);
  Series out = Series::Zero(inputs.front().rows(), inputs.front().cols());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].rows() != out.rows() || inputs[i].cols() != out.cols()) {
      throw std::invalid_argument("euclidean_mean: inputs must share their shape");
    }
    out += w(static_cast<Eigen::Index>(i)) * inputs[i];
  }
  return out;
}

}  // namespace sta
