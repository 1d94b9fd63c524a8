#include "sta/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "sta/align.hpp"
#include "sta/parallel.hpp"

namespace sta {

namespace {

struct Point {
  double u;
  double v;
};

// Trajectory templates on the unit square, s in [0, 1].
Point template_point(int cls, double s) {
  const int variant = cls / 4;
  if (variant & 1) s = 1.0 - s;
  Point pt{};
  const double pi = std::numbers::pi;
  switch (cls % 4) {
    case 0:  // line
      pt = {s, s};
      break;
    case 1:  // arc
      pt = {1.0 - std::sin(pi * s), 0.5 - 0.5 * std::cos(pi * s)};
      break;
    case 2: {  // zigzag, two teeth
      const double phase = std::fmod(4.0 * s, 2.0);
      pt = {std::abs(phase - 1.0), s};
      break;
    }
    default:  // loop
      pt = {0.5 - 0.5 * std::cos(2.0 * pi * s), 0.5 + 0.5 * std::sin(2.0 * pi * s)};
      break;
  }
  if (variant & 2) std::swap(pt.u, pt.v);
  if (variant & 4) pt.u = 1.0 - pt.u;
  return pt;
}

Vector blob_frame(int h, int w, double ci, double cj, double width) {
  Vector f(static_cast<Eigen::Index>(h) * w);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const double di = (i - ci) / width;
      const double dj = (j - cj) / width;
      f(static_cast<Eigen::Index>(i) * w + j) = std::exp(-0.5 * (di * di + dj * dj));
    }
  }
  return f / f.sum();
}

Series prefix(const Series& s, int t0) { return s.topRows(t0); }

void check_config(const ForecastConfig& config, const Dataset& data) {
  const int T = data.length();
  if (config.t0 < 1 || config.t0 >= T) {
    throw std::invalid_argument("forecast: t0 must satisfy 1 <= t0 < T (T = " + std::to_string(T) +
                                ")");
  }
  if (config.k < 1) throw std::invalid_argument("forecast: k must be >= 1");
}

}  // namespace

Dataset generate_moving_blobs(const BlobConfig& c) {
  if (c.classes < 1 || c.per_class < 0 || c.T < 1 || c.h < 1 || c.w < 1 ||
      c.spatial_shift_max < 0 || !(c.blob_width > 0.0)) {
    throw std::invalid_argument("generate_moving_blobs: invalid parameters");
  }
  if (c.temporal_crop_min < 1 || c.temporal_crop_min > c.T) {
    throw std::invalid_argument("generate_moving_blobs: temporal_crop_min must lie in [1, T]");
  }
  const double margin = std::ceil(2.0 * c.blob_width);
  const double box_h = c.h - 1 - c.spatial_shift_max - 2.0 * margin;
  const double box_w = c.w - 1 - c.spatial_shift_max - 2.0 * margin;
  if (box_h < 1.0 || box_w < 1.0) {
    throw std::invalid_argument("generate_moving_blobs: a shift of " +
                                std::to_string(c.spatial_shift_max) + " leaves no room on a " +
                                std::to_string(c.h) + "x" + std::to_string(c.w) + " grid");
  }

  Dataset data;
  data.h = c.h;
  data.w = c.w;
  data.provenance = c;
  std::mt19937_64 rng(c.seed);
  std::uniform_int_distribution<int> shift(0, c.spatial_shift_max);
  std::uniform_int_distribution<int> length(c.temporal_crop_min, c.T);
  const double span = c.T > 1 ? static_cast<double>(c.T - 1) : 1.0;
  for (int cls = 0; cls < c.classes; ++cls) {
    for (int n = 0; n < c.per_class; ++n) {
      const int di = shift(rng);
      const int dj = shift(rng);
      const int L = length(rng);
      const int start = std::uniform_int_distribution<int>(0, c.T - L)(rng);
      Series s(c.T, static_cast<Eigen::Index>(c.h) * c.w);
      for (int t = 0; t < c.T; ++t) {
        // frame t replays template time start + t (L - 1) / (T - 1)
        const double tau = start + (c.T > 1 ? t * (L - 1) / span : 0.0);
        const Point pt = template_point(cls, tau / span);
        s.row(t) = blob_frame(c.h, c.w, margin + di + pt.u * box_h, margin + dj + pt.v * box_w,
                              c.blob_width)
                       .transpose();
      }
      data.samples.push_back(std::move(s));
      data.labels.push_back(cls);
    }
  }
  return data;
}

void validate_dataset(const Dataset& data) {
  if (data.labels.size() != data.samples.size()) {
    throw std::invalid_argument("dataset: one label per sample required");
  }
  if (data.h < 1 || data.w < 1) throw std::invalid_argument("dataset: invalid grid dimensions");
  for (const auto& s : data.samples) {
    if (s.rows() != data.samples.front().rows() || s.cols() != static_cast<Eigen::Index>(data.h) * data.w) {
      throw std::invalid_argument("dataset: samples must share T and the h x w grid");
    }
    if (!s.allFinite() || s.minCoeff() < 0.0) {
      throw std::invalid_argument("dataset: frames must be finite and non-negative");
    }
  }
}

Loss parse_loss(const std::string& name) {
  if (name == "sta") return Loss::Sta;
  if (name == "uot") return Loss::FramewiseUot;
  if (name == "l2-frame") return Loss::FramewiseL2;
  if (name == "l2") return Loss::FlattenedL2;
  throw std::invalid_argument("unknown loss '" + name + "' (expected sta, uot, l2-frame or l2)");
}

std::string loss_name(Loss loss) {
  switch (loss) {
    case Loss::Sta: return "sta";
    case Loss::FramewiseUot: return "uot";
    case Loss::FramewiseL2: return "l2-frame";
    case Loss::FlattenedL2: return "l2";
  }
  return "?";
}

double series_distance(const Series& x, const Series& y, Loss loss, const GroundGeometry& geometry,
                       const ForecastConfig& config) {
  if (x.cols() != y.cols()) throw std::invalid_argument("series_distance: support mismatch");
  switch (loss) {
    case Loss::Sta:
      return sta_distance(x, y, geometry, config.uot, config.beta, config.threads);
    case Loss::FramewiseUot: {
      if (x.rows() != y.rows()) throw std::invalid_argument("series_distance: length mismatch");
      return sta_cost_matrix(x, y, geometry, config.uot, config.threads).trace();
    }
    case Loss::FramewiseL2: {
      if (x.rows() != y.rows()) throw std::invalid_argument("series_distance: length mismatch");
      return (x - y).rowwise().norm().sum();
    }
    case Loss::FlattenedL2: {
      if (x.rows() != y.rows()) throw std::invalid_argument("series_distance: length mismatch");
      return (x - y).norm();
    }
  }
  throw std::logic_error("series_distance: unknown loss");
}

std::vector<double> prefix_distances(const Series& query, const Dataset& data,
                                     const GroundGeometry& geometry,
                                     const ForecastConfig& config, int exclude) {
  check_config(config, data);
  if (query.rows() < config.t0) throw std::invalid_argument("query is shorter than t0");
  const Series q = prefix(query, config.t0);
  const auto n = data.size();
  std::vector<double> out(n, std::numeric_limits<double>::infinity());
  ForecastConfig inner = config;
  inner.threads = 1;
  const bool transport = config.loss == Loss::Sta || config.loss == Loss::FramewiseUot;
  std::vector<SymmetricResult> self_q;
  if (transport) self_q = self_terms(q, geometry, config.uot, config.threads);
  parallel_for(n, config.threads, [&](std::size_t i) {
    if (static_cast<int>(i) == exclude) return;
    const Series s = prefix(data.samples[i], config.t0);
    if (!transport) {
      out[i] = series_distance(q, s, config.loss, geometry, inner);
      return;
    }
    const auto self_s = self_terms(s, geometry, config.uot, 1);
    const Matrix m = debiased_uot_matrix(q, s, self_q, self_s, geometry, config.uot, 1);
    out[i] = config.loss == Loss::Sta ? sdtw_forward(CostMatrix(m), config.beta).value : m.trace();
  });
  return out;
}

Matrix pairwise_prefix_distances(const Dataset& data, const std::vector<int>& queries,
                                 const GroundGeometry& geometry, const ForecastConfig& config,
                                 Matrix* framewise) {
  check_config(config, data);
  const auto n = data.size();
  for (int q : queries) {
    if (q < 0 || static_cast<std::size_t>(q) >= n) throw std::out_of_range("query index out of range");
  }
  const auto nq = queries.size();
  Matrix out(static_cast<Eigen::Index>(nq), static_cast<Eigen::Index>(n));
  if (framewise != nullptr) framewise->resize(out.rows(), out.cols());
  const bool transport = config.loss == Loss::Sta || config.loss == Loss::FramewiseUot;
  std::vector<Series> prefixes(n);
  for (std::size_t i = 0; i < n; ++i) prefixes[i] = prefix(data.samples[i], config.t0);
  if (!transport) {
    parallel_for(nq * n, config.threads, [&](std::size_t idx) {
      const std::size_t a = idx / n;
      const std::size_t i = idx % n;
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(i)) = series_distance(
          prefixes[static_cast<std::size_t>(queries[a])], prefixes[i], config.loss, geometry, config);
    });
    return out;
  }
  std::vector<std::vector<SymmetricResult>> self(n);
  parallel_for(n, config.threads, [&](std::size_t i) {
    self[i] = self_terms(prefixes[i], geometry, config.uot, 1);
  });
  parallel_for(nq * n, config.threads, [&](std::size_t idx) {
    const std::size_t a = idx / n;
    const std::size_t i = idx % n;
    const auto q = static_cast<std::size_t>(queries[a]);
    const Matrix m = debiased_uot_matrix(prefixes[q], prefixes[i], self[q], self[i], geometry,
                                         config.uot, 1);
    const auto r = static_cast<Eigen::Index>(a);
    const auto c = static_cast<Eigen::Index>(i);
    out(r, c) = config.loss == Loss::Sta ? sdtw_forward(CostMatrix(m), config.beta).value : m.trace();
    if (framewise != nullptr) (*framewise)(r, c) = m.trace();
  });
  return out;
}

std::vector<int> nearest(const std::vector<double>& distances, int k, int exclude) {
  std::vector<int> order;
  for (int i = 0; i < static_cast<int>(distances.size()); ++i) {
    if (i != exclude) order.push_back(i);
  }
  if (k < 1 || static_cast<std::size_t>(k) > order.size()) {
    throw std::invalid_argument("knn: k = " + std::to_string(k) + " but only " +
                                std::to_string(order.size()) + " candidates");
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return distances[static_cast<std::size_t>(a)] < distances[static_cast<std::size_t>(b)];
  });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

std::vector<int> knn(const Series& query, const Dataset& data, const GroundGeometry& geometry,
                     const ForecastConfig& config, int exclude) {
  const int candidates = static_cast<int>(data.size()) -
                         (exclude >= 0 && static_cast<std::size_t>(exclude) < data.size() ? 1 : 0);
  if (config.k > candidates) {
    throw std::invalid_argument("knn: k = " + std::to_string(config.k) + " but only " +
                                std::to_string(candidates) + " candidates");
  }
  return nearest(prefix_distances(query, data, geometry, config, exclude), config.k, exclude);
}

Series forecast_from_neighbors(const Series& query, const Dataset& data,
                               const std::vector<int>& neighbors, const GroundGeometry& geometry,
                               const ForecastConfig& config) {
  check_config(config, data);
  if (neighbors.empty()) throw std::invalid_argument("forecast: no neighbours");
  if (query.rows() < config.t0 || query.cols() != geometry.size()) {
    throw std::invalid_argument("forecast: query does not match the dataset");
  }
  std::vector<Series> inputs;
  for (int i : neighbors) inputs.push_back(data.samples.at(static_cast<std::size_t>(i)));
  const Vector w = Vector::Ones(static_cast<Eigen::Index>(inputs.size()));
  const int T = data.length();
  Series out;
  switch (config.loss) {
    case Loss::Sta: {
      Series x0 = uniform_initialization(inputs, T);
      x0.topRows(config.t0) = query.topRows(config.t0);
      SdtwBarycenterOptions opt;
      opt.beta = config.beta;
      opt.max_outer = config.max_outer;
      opt.rel_tol = config.rel_tol;
      opt.threads = config.threads;
      opt.clamp_prefix = config.t0;
      out = sta_barycenter(inputs, w, geometry, config.uot, opt, &x0).barycenter;
      break;
    }
    case Loss::FramewiseUot:
      out = framewise_uot_barycenter(inputs, w, geometry, config.uot, true, config.threads);
      break;
    case Loss::FramewiseL2:
    case Loss::FlattenedL2:
      out = euclidean_mean(inputs, w);
      break;
  }
  out.topRows(config.t0) = query.topRows(config.t0);
  return out;
}

Forecast forecast(const Series& query, const Dataset& data, const GroundGeometry& geometry,
                  const ForecastConfig& config, int exclude) {
  Forecast f;
  f.neighbors = knn(query, data, geometry, config, exclude);
  f.prediction = forecast_from_neighbors(query, data, f.neighbors, geometry, config);
  return f;
}

UotParams score_params(const GroundGeometry& geometry) {
  UotParams p;
  p.epsilon = geometry.epsilon();
  p.gamma = 1.0;
  p.tol = 1e-7;
  p.max_iter = 100000;
  return p;
}

Score score(const Series& prediction, const Series& truth, const GroundGeometry& geometry,
            const UotParams& params, int from, int threads) {
  if (prediction.rows() != truth.rows() || prediction.cols() != truth.cols()) {
    throw std::invalid_argument("score: prediction and truth differ in shape");
  }
  if (prediction.cols() != geometry.size()) {
    throw std::invalid_argument("score: frames do not match the score geometry");
  }
  if (from < 0 || from >= truth.rows()) throw std::invalid_argument("score: no frames to score");
  Score s;
  const Eigen::Index T = truth.rows();
  const auto count = static_cast<std::size_t>(T - from);
  std::vector<double> ot(count, 0.0);
  std::vector<char> used(count, 0);
  std::vector<char> failed(count, 0);
  for (Eigen::Index t = from; t < T; ++t) s.l2 += (prediction.row(t) - truth.row(t)).norm();
  s.l2 /= static_cast<double>(count);
  parallel_for(count, threads, [&](std::size_t idx) {
    const auto t = static_cast<Eigen::Index>(from) + static_cast<Eigen::Index>(idx);
    const Vector a = prediction.row(t).transpose();
    const Vector b = truth.row(t).transpose();
    if (!(a.sum() > 0.0) || !(b.sum() > 0.0) || a.minCoeff() < 0.0 || b.minCoeff() < 0.0) return;
    const Vector an = a / a.sum();
    const Vector bn = b / b.sum();
    const auto cross = sinkhorn_uot(an, bn, geometry, params);
    const auto sa = symmetric_sinkhorn(an, geometry, params);
    const auto sb = symmetric_sinkhorn(bn, geometry, params);
    if (!cross.duals.converged || !sa.converged || !sb.converged) {
      failed[idx] = 1;
      return;
    }
    ot[idx] = debiased_value(cross, sa, sb, params);
    used[idx] = 1;
  });
  for (std::size_t idx = 0; idx < count; ++idx) {
    if (failed[idx] != 0) {
      throw NumericalError("score: Sinkhorn did not converge on frame " +
                           std::to_string(from + static_cast<int>(idx)));
    }
    if (used[idx] == 0) {
      s.warnings.push_back("frame " + std::to_string(from + static_cast<int>(idx)) +
                           " has zero or negative mass; left out of the ot score");
      continue;
    }
    s.ot += ot[idx];
    ++s.frames;
  }
  if (s.frames > 0) s.ot /= s.frames;
  return s;
}

}  // namespace sta
