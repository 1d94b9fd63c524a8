// sta: dataset generation, distances, barycenters, bounds and forecasts.
//
// Exit codes: 0 success, 1 usage, 2 numerical failure, 3 I/O.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sta/align.hpp"
#include "sta/barycenter.hpp"
#include "sta/delannoy.hpp"
#include "sta/forecast.hpp"
#include "sta/io.hpp"

using namespace sta;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kNumerical = 2, kIo = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Resolved settings shared by the subcommands.
struct RunConfig {
  std::optional<double> epsilon;  // default 1 / p
  double gamma = 1.0;
  std::optional<double> beta;
  int kmax = 20;
  double eta = 0.01;
  double tol = 1e-7;
  int max_iter = 5000;
  int outer_max = 50;
  std::uint64_t seed = 0;
  int threads = 1;
  int grid_h = 30;
  int grid_w = 30;
  std::string loss = "sta";
};

// Values given on the command line; unset options leave the config alone.
struct Flags {
  double epsilon = 0, gamma = 0, beta = 0, eta = 0, tol = 0;
  int kmax = 0, max_iter = 0, outer_max = 0, threads = 0;
  std::uint64_t seed = 0;
  std::string grid, loss, config;
  std::map<std::string, CLI::Option*> opts;
};

std::pair<int, int> parse_grid(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t used_h = 0, used_w = 0;
    const int h = std::stoi(text.substr(0, x), &used_h);
    const int w = std::stoi(text.substr(x + 1), &used_w);
    if (used_h != x || used_w != text.size() - x - 1 || h < 1 || w < 1) throw std::invalid_argument(text);
    return {h, w};
  } catch (const std::exception&) {
    throw UsageError("--grid expects HxW with positive integers, got '" + text + "'");
  }
}

void add_common(CLI::App& app, Flags& f) {
  f.opts["epsilon"] = app.add_option("--epsilon", f.epsilon, "entropic regularisation (default 1/p)");
  f.opts["gamma"] = app.add_option("--gamma", f.gamma, "marginal penalty (default 1)");
  f.opts["beta"] = app.add_option("--beta", f.beta, "Soft-DTW temperature");
  f.opts["kmax"] = app.add_option("--kmax,--beta-from-kmax", f.kmax, "pick beta so the shift penalty saturates at kmax (default 20)");
  f.opts["eta"] = app.add_option("--eta", f.eta, "saturation slack for --kmax (default 0.01)");
  f.opts["tol"] = app.add_option("--tol", f.tol, "Sinkhorn tolerance (default 1e-7)");
  f.opts["max-iter"] = app.add_option("--max-iter", f.max_iter, "Sinkhorn iteration cap (default 5000)");
  f.opts["outer-max"] = app.add_option("--outer-max", f.outer_max, "outer barycenter iterations (default 50)");
  f.opts["seed"] = app.add_option("--seed", f.seed, "random seed (default 0)");
  f.opts["threads"] = app.add_option("--threads", f.threads, "worker threads (default 1)");
  f.opts["grid"] = app.add_option("--grid", f.grid, "grid HxW (default 30x30)");
  f.opts["loss"] = app.add_option("--loss", f.loss, "sta, uot, l2-frame or l2");
  f.opts["config"] = app.add_option("--config", f.config, "JSON file with any of the settings above");
  f.opts["beta"]->excludes(f.opts["kmax"]);
  f.opts["beta"]->excludes(f.opts["eta"]);
}

bool given(const Flags& f, const std::string& name) {
  const auto it = f.opts.find(name);
  return it != f.opts.end() && it->second->count() > 0;
}

RunConfig resolve(const Flags& f) {
  RunConfig c;
  bool beta_set = false, kmax_set = false;
  if (given(f, "config")) {
    std::ifstream in(f.config);
    if (!in) throw IoError(f.config + ": cannot open config file");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError(f.config + ": malformed JSON: " + e.what());
    }
    if (!j.is_object()) throw UsageError(f.config + ": config must be a JSON object");
    static const std::vector<std::string> known = {"epsilon", "gamma", "beta", "kmax", "eta", "tol",
                                                   "max_iter", "outer_max", "seed", "threads",
                                                   "grid", "loss"};
    for (const auto& [key, value] : j.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        throw UsageError(f.config + ": unknown key '" + key + "'");
      }
    }
    try {
      if (j.contains("epsilon")) c.epsilon = j["epsilon"].get<double>();
      c.gamma = j.value("gamma", c.gamma);
      if (j.contains("beta")) {
        c.beta = j["beta"].get<double>();
        beta_set = true;
      }
      if (j.contains("kmax") || j.contains("eta")) kmax_set = true;
      c.kmax = j.value("kmax", c.kmax);
      c.eta = j.value("eta", c.eta);
      c.tol = j.value("tol", c.tol);
      c.max_iter = j.value("max_iter", c.max_iter);
      c.outer_max = j.value("outer_max", c.outer_max);
      c.seed = j.value("seed", c.seed);
      c.threads = j.value("threads", c.threads);
      if (j.contains("grid")) std::tie(c.grid_h, c.grid_w) = parse_grid(j["grid"].get<std::string>());
      c.loss = j.value("loss", c.loss);
    } catch (const json::exception& e) {
      throw UsageError(f.config + ": " + e.what());
    }
  }
  if (given(f, "epsilon")) c.epsilon = f.epsilon;
  if (given(f, "gamma")) c.gamma = f.gamma;
  if (given(f, "beta")) {
    c.beta = f.beta;
    beta_set = true;
    kmax_set = false;
  }
  if (given(f, "kmax")) {
    c.kmax = f.kmax;
    kmax_set = true;
  }
  if (given(f, "eta")) {
    c.eta = f.eta;
    kmax_set = true;
  }
  if (given(f, "kmax") || given(f, "eta")) {
    c.beta.reset();
    beta_set = false;
  }
  if (beta_set && kmax_set) throw UsageError("beta and kmax/eta are mutually exclusive");
  if (given(f, "tol")) c.tol = f.tol;
  if (given(f, "max-iter")) c.max_iter = f.max_iter;
  if (given(f, "outer-max")) c.outer_max = f.outer_max;
  if (given(f, "seed")) c.seed = f.seed;
  if (given(f, "threads")) c.threads = f.threads;
  if (given(f, "grid")) std::tie(c.grid_h, c.grid_w) = parse_grid(f.grid);
  if (given(f, "loss")) c.loss = f.loss;

  if (c.epsilon && !(*c.epsilon > 0.0)) throw UsageError("epsilon must be > 0");
  if (!(c.gamma > 0.0) || !(c.tol > 0.0) || c.max_iter < 1) {
    throw UsageError("gamma, tol and max-iter must be positive");
  }
  if (c.beta && !(*c.beta > 0.0)) throw UsageError("beta must be > 0");
  if (c.kmax < 1 || !(c.eta > 0.0 && c.eta < 1.0)) throw UsageError("need kmax >= 1 and 0 < eta < 1");
  if (c.outer_max < 0 || c.threads < 1) throw UsageError("outer-max must be >= 0 and threads >= 1");
  parse_loss(c.loss);
  return c;
}

UotParams uot_params(const RunConfig& c, const GroundGeometry& g) {
  UotParams p;
  p.epsilon = g.epsilon();
  p.gamma = c.gamma;
  p.tol = c.tol;
  p.max_iter = c.max_iter;
  return p;
}

GroundGeometry geometry_for(const RunConfig& c, int h, int w) {
  const double eps = c.epsilon ? *c.epsilon : default_epsilon(static_cast<Eigen::Index>(h) * w);
  return GroundGeometry::grid(h, w, eps);
}

// beta from the config, or from the saturation heuristic with r = max delta.
double resolve_beta(const RunConfig& c, const Matrix& delta, int T) {
  if (c.beta) return *c.beta;
  const double r = shift_scale(delta, ShiftScale::MaxCost);
  const double beta = beta_heuristic(c.kmax, c.eta, r, T);
  std::cerr << "resolved beta = " << beta << " (kmax = " << c.kmax << ", eta = " << c.eta
            << ", r = " << r << ", T = " << T << ")\n";
  return beta;
}

Dataset load(const std::string& path) { return read_dataset(path); }

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::trunc);
  if (!file) throw IoError(path + ": cannot open for writing");
  return file;
}

void finish(std::ofstream& file, const std::string& path) {
  if (file.is_open()) {
    file.flush();
    if (!file) throw IoError(path + ": write failed");
  }
}

const Series& sample(const Dataset& d, int i) {
  if (i < 0 || static_cast<std::size_t>(i) >= d.size()) {
    throw UsageError("sample index " + std::to_string(i) + " out of range [0, " +
                     std::to_string(d.size()) + ")");
  }
  return d.samples[static_cast<std::size_t>(i)];
}

// ---------------------------------------------------------------------------

struct GenArgs {
  int classes = 4, per_class = 25, length = 13, shift_max = 10, crop_min = 5;
  double blob_width = 1.5;
  std::string output;
};

int cmd_gen(const Flags& f, const GenArgs& a) {
  const RunConfig c = resolve(f);
  BlobConfig b;
  b.classes = a.classes;
  b.per_class = a.per_class;
  b.T = a.length;
  b.h = c.grid_h;
  b.w = c.grid_w;
  b.spatial_shift_max = a.shift_max;
  b.temporal_crop_min = a.crop_min;
  b.blob_width = a.blob_width;
  b.seed = c.seed;
  const Dataset d = generate_moving_blobs(b);
  write_dataset(a.output, d);
  std::cerr << "wrote " << d.size() << " series of " << b.T << " x " << b.h * b.w << " to "
            << a.output << "\n";
  return kOk;
}

struct DistArgs {
  std::string dataset, output;
  int i = 0, j = 0;
};

int cmd_dist(const Flags& f, const DistArgs& a) {
  const RunConfig c = resolve(f);
  const Dataset d = load(a.dataset);
  const Series& x = sample(d, a.i);
  const Series& y = sample(d, a.j);
  const GroundGeometry g = geometry_for(c, d.h, d.w);
  const UotParams p = uot_params(c, g);
  const Matrix delta = sta_cost_matrix(x, y, g, p, c.threads);
  const double beta = resolve_beta(c, delta, static_cast<int>(std::max(x.rows(), y.rows())));
  const double sta = sdtw_forward(CostMatrix(delta), beta).value;
  std::ofstream file;
  std::ostream& out = open_output(a.output, file);
  out.precision(17);
  out << "i,j,beta,sta,uot,l2\n";
  out << a.i << ',' << a.j << ',' << beta << ',' << sta << ',' << delta.trace() << ','
      << (x - y).norm() << '\n';
  finish(file, a.output);
  return kOk;
}

struct BaryArgs {
  std::string dataset, method = "sta", output, profile;
  std::vector<int> indices;
};

int cmd_bary(const Flags& f, const BaryArgs& a) {
  const RunConfig c = resolve(f);
  const Dataset d = load(a.dataset);
  if (a.indices.empty()) throw UsageError("bary: --indices needs at least one sample");
  std::vector<Series> inputs;
  for (int i : a.indices) inputs.push_back(sample(d, i));
  const Vector w = Vector::Ones(static_cast<Eigen::Index>(inputs.size()));
  const GroundGeometry g = geometry_for(c, d.h, d.w);
  const UotParams p = uot_params(c, g);
  Series out;
  json meta = {{"h", d.h}, {"w", d.w}, {"method", a.method}, {"indices", a.indices}};
  if (a.method == "euclidean") {
    out = euclidean_mean(inputs, w);
  } else if (a.method == "uot" || a.method == "uot-debiased") {
    out = framewise_uot_barycenter(inputs, w, g, p, a.method == "uot-debiased", c.threads);
  } else if (a.method == "sta") {
    const Matrix delta = sta_cost_matrix(inputs.front(), inputs.size() > 1 ? inputs[1] : inputs.front(),
                                         g, p, c.threads);
    SdtwBarycenterOptions opt;
    opt.beta = resolve_beta(c, delta, static_cast<int>(inputs.front().rows()));
    opt.max_outer = c.outer_max;
    opt.threads = c.threads;
    const auto res = sta_barycenter(inputs, w, g, p, opt);
    for (const auto& warning : res.warnings) std::cerr << "warning: " << warning << "\n";
    out = res.barycenter;
    meta["beta"] = opt.beta;
    meta["objective"] = res.objective;
    meta["converged"] = res.converged;
  } else {
    throw UsageError("bary: unknown method '" + a.method + "' (euclidean, uot, uot-debiased, sta)");
  }
  StsdFile file;
  file.series.push_back(out);
  file.trailer = meta;
  write_stsd(a.output, file);
  if (!a.profile.empty()) {
    std::ofstream pf;
    std::ostream& os = open_output(a.profile, pf);
    os.precision(17);
    os << "t,l2_norm\n";
    for (Eigen::Index t = 0; t < out.rows(); ++t) os << t << ',' << out.row(t).norm() << '\n';
    finish(pf, a.profile);
  }
  return kOk;
}

struct BoundArgs {
  int length = 100, t_star = 29, shifts = 60;
  std::vector<double> betas;
  std::vector<int> kmaxes;
  std::string output;
};

int cmd_bound(const Flags& f, const BoundArgs& a) {
  const RunConfig c = resolve(f);
  if (a.t_star < 0 || a.t_star + a.shifts >= a.length) {
    throw UsageError("bound: need 0 <= t-star and t-star + shifts < length");
  }
  struct Setting {
    std::string label;
    double beta;
  };
  const Vector dirac = dirac_series(a.length, a.t_star);
  const double r = squared_difference_cost(dirac, dirac).maxCoeff();
  std::vector<Setting> settings;
  for (double b : a.betas) {
    if (!(b > 0.0)) throw UsageError("bound: betas must be > 0");
    settings.push_back({"beta", b});
  }
  for (int k : a.kmaxes) settings.push_back({"kmax=" + std::to_string(k), beta_heuristic(k, c.eta, r, a.length)});
  if (settings.empty()) {
    if (c.beta) {
      settings.push_back({"beta", *c.beta});
    } else {
      settings.push_back({"kmax=" + std::to_string(c.kmax), beta_heuristic(c.kmax, c.eta, r, a.length)});
    }
  }
  std::ofstream file;
  std::ostream& out = open_output(a.output, file);
  out.precision(17);
  out << "setting,beta,k,gap,lb,lb_limit,saturated,first_saturated\n";
  for (const auto& s : settings) {
    std::vector<double> gaps(static_cast<std::size_t>(a.shifts) + 1);
    for (int k = 0; k <= a.shifts; ++k) gaps[k] = dirac_shift_gap(a.length, a.t_star, k, s.beta);
    const double top = *std::max_element(gaps.begin(), gaps.end());
    const double limit = dirac_lower_bound_limit(s.beta, r, a.length);
    // the bound covers shifts k >= 1; at k = 0 the series coincide
    bool flagged = false;
    for (int k = 0; k <= a.shifts; ++k) {
      const bool sat = gaps[k] >= top - c.eta * s.beta;
      const bool first = sat && !flagged;
      flagged = flagged || sat;
      out << s.label << ',' << s.beta << ',' << k << ',' << gaps[k] << ','
          << (k == 0 ? 0.0 : dirac_lower_bound(k, s.beta, r, a.length)) << ',' << limit << ',' << (sat ? 1 : 0)
          << ',' << (first ? 1 : 0) << '\n';
    }
  }
  finish(file, a.output);
  return kOk;
}

struct ForecastArgs {
  std::string dataset, output, scores, summary;
  int t0 = 5, k = 5;
  std::vector<int> queries;
  double score_epsilon = 0.01;
};

int cmd_forecast(const Flags& f, const ForecastArgs& a) {
  const RunConfig c = resolve(f);
  const Dataset d = load(a.dataset);
  std::vector<int> queries = a.queries;
  if (queries.empty()) {
    for (int i = 0; i < static_cast<int>(d.size()); ++i) queries.push_back(i);
  }
  for (int q : queries) sample(d, q);
  const GroundGeometry g = geometry_for(c, d.h, d.w);
  const GroundGeometry score_g = GroundGeometry::grid(d.h, d.w, a.score_epsilon);
  const UotParams score_p = score_params(score_g);
  ForecastConfig fc;
  fc.loss = parse_loss(c.loss);
  fc.t0 = a.t0;
  fc.k = a.k;
  fc.uot = uot_params(c, g);
  fc.max_outer = c.outer_max;
  fc.threads = c.threads;

  StsdFile predictions;
  predictions.trailer = {{"h", d.h}, {"w", d.w}, {"loss", c.loss}, {"t0", a.t0},
                         {"queries", queries}, {"neighbors", json::array()}};
  std::ofstream sf;
  std::ostream& scores = open_output(a.scores, sf);
  scores.precision(17);
  scores << "query,label,loss,beta,l2,ot,same_class,neighbors\n";
  struct Agg {
    int count = 0;
    double l2 = 0, ot = 0, same = 0;
  };
  std::map<int, Agg> per_class;
  for (int q : queries) {
    const Series& query = d.samples[static_cast<std::size_t>(q)];
    ForecastConfig qc = fc;
    if (qc.loss == Loss::Sta) {
      const Series head = query.topRows(a.t0);
      qc.beta = resolve_beta(c, sta_cost_matrix(head, head, g, fc.uot, c.threads), a.t0);
    }
    const Forecast res = forecast(query, d, g, qc, q);
    const Score sc = score(res.prediction, query, score_g, score_p, a.t0, c.threads);
    for (const auto& w : sc.warnings) std::cerr << "warning: query " << q << ": " << w << "\n";
    const int label = d.labels[static_cast<std::size_t>(q)];
    int same = 0;
    std::string nb;
    for (int i : res.neighbors) {
      same += d.labels[static_cast<std::size_t>(i)] == label ? 1 : 0;
      nb += (nb.empty() ? "" : " ") + std::to_string(i);
    }
    const double frac = static_cast<double>(same) / static_cast<double>(res.neighbors.size());
    scores << q << ',' << label << ',' << c.loss << ',' << (qc.loss == Loss::Sta ? qc.beta : 0.0)
           << ',' << sc.l2 << ',' << sc.ot << ',' << frac << ',' << nb << '\n';
    Agg& agg = per_class[label];
    ++agg.count;
    agg.l2 += sc.l2;
    agg.ot += sc.ot;
    agg.same += frac;
    predictions.series.push_back(res.prediction);
    predictions.trailer["neighbors"].push_back(res.neighbors);
  }
  finish(sf, a.scores);
  if (!a.output.empty()) write_stsd(a.output, predictions);
  if (!a.summary.empty()) {
    std::ofstream mf;
    std::ostream& m = open_output(a.summary, mf);
    m.precision(17);
    m << "label,loss,count,mean_l2,mean_ot,same_class_fraction\n";
    for (const auto& [label, agg] : per_class) {
      m << label << ',' << c.loss << ',' << agg.count << ',' << agg.l2 / agg.count << ','
        << agg.ot / agg.count << ',' << agg.same / agg.count << '\n';
    }
    finish(mf, a.summary);
  }
  return kOk;
}

struct BenchArgs {
  std::vector<int> sizes = {16, 32};
  int repeats = 3;
  std::string output;
};

int cmd_bench(const Flags& f, const BenchArgs& a) {
  const RunConfig c = resolve(f);
  std::ofstream file;
  std::ostream& out = open_output(a.output, file);
  out.precision(6);
  out << "task,grid,threads,seconds,iterations\n";
  for (int n : a.sizes) {
    if (n < 2) throw UsageError("bench: sizes must be >= 2");
    const GroundGeometry g = geometry_for(c, n, n);
    const UotParams p = uot_params(c, g);
    BlobConfig b;
    b.classes = 2;
    b.per_class = 1;
    b.T = 4;
    b.h = n;
    b.w = n;
    b.spatial_shift_max = 0;
    b.temporal_crop_min = 4;
    b.blob_width = std::max(1.0, n / 16.0);
    b.seed = c.seed;
    const Dataset d = generate_moving_blobs(b);
    const Vector x = d.samples[0].row(0).transpose();
    const Vector y = d.samples[1].row(3).transpose();
    for (int r = 0; r < a.repeats; ++r) {
      auto start = std::chrono::steady_clock::now();
      const auto res = sinkhorn_uot(x, y, g, p);
      double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      out << "sinkhorn_uot," << n << 'x' << n << ',' << 1 << ',' << s << ',' << res.duals.iterations << '\n';
      start = std::chrono::steady_clock::now();
      const Matrix m = sta_cost_matrix(d.samples[0], d.samples[1], g, p, c.threads);
      s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      out << "sta_cost_matrix," << n << 'x' << n << ',' << c.threads << ',' << s << ',' << m.size() << '\n';
    }
  }
  finish(file, a.output);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatio-temporal alignment of measure-valued time series"};
  app.require_subcommand(1);
  Flags gen_flags, dist_flags, bary_flags, bound_flags, forecast_flags, bench_flags;

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate a synthetic moving-blob dataset");
  add_common(*g, gen_flags);
  g->add_option("--classes", gen.classes, "number of classes")->check(CLI::PositiveNumber);
  g->add_option("--per-class", gen.per_class, "samples per class")->check(CLI::NonNegativeNumber);
  g->add_option("--length", gen.length, "frames per series")->check(CLI::PositiveNumber);
  g->add_option("--shift-max", gen.shift_max, "largest spatial shift in pixels")->check(CLI::NonNegativeNumber);
  g->add_option("--crop-min", gen.crop_min, "shortest temporal crop")->check(CLI::PositiveNumber);
  g->add_option("--blob-width", gen.blob_width, "blob standard deviation in pixels");
  g->add_option("--output,-o", gen.output, "output STSD file")->required();

  DistArgs dist;
  auto* ds = app.add_subcommand("dist", "STA, frame-wise UOT~ and l2 between two samples (CSV)");
  add_common(*ds, dist_flags);
  ds->add_option("dataset", dist.dataset)->required();
  ds->add_option("i", dist.i)->required();
  ds->add_option("j", dist.j)->required();
  ds->add_option("--output,-o", dist.output, "CSV path (default stdout)");

  BaryArgs bary;
  auto* by = app.add_subcommand("bary", "barycenter of selected samples");
  add_common(*by, bary_flags);
  by->add_option("dataset", bary.dataset)->required();
  by->add_option("--indices", bary.indices, "comma-separated sample indices")->delimiter(',')->required();
  by->add_option("--method", bary.method, "euclidean, uot, uot-debiased or sta");
  by->add_option("--output,-o", bary.output, "output STSD file")->required();
  by->add_option("--profile", bary.profile, "CSV of per-frame l2 norms");

  BoundArgs bound;
  auto* bd = app.add_subcommand("bound", "Dirac shift penalty against its lower bound (CSV)");
  add_common(*bd, bound_flags);
  bd->add_option("--length", bound.length, "series length T");
  bd->add_option("--t-star", bound.t_star, "position of the Dirac, 0-based (default 29, the 30th frame)");
  bd->add_option("--shifts", bound.shifts, "largest shift k");
  bd->add_option("--betas", bound.betas, "comma-separated temperatures")->delimiter(',');
  bd->add_option("--kmaxes", bound.kmaxes, "comma-separated kmax values for the heuristic")->delimiter(',');
  bd->add_option("--output,-o", bound.output, "CSV path (default stdout)");

  ForecastArgs fc;
  auto* fo = app.add_subcommand("forecast", "kNN + barycenter forecasts with scores");
  add_common(*fo, forecast_flags);
  fo->add_option("dataset", fc.dataset)->required();
  fo->add_option("--t0", fc.t0, "observed prefix length");
  fo->add_option("--k", fc.k, "neighbour count");
  fo->add_option("--queries", fc.queries, "comma-separated query indices (default all)")->delimiter(',');
  fo->add_option("--score-epsilon", fc.score_epsilon, "epsilon of the transport score");
  fo->add_option("--output,-o", fc.output, "STSD file of predictions");
  fo->add_option("--scores", fc.scores, "per-query CSV (default stdout)");
  fo->add_option("--summary", fc.summary, "per-class CSV");

  BenchArgs bench;
  auto* be = app.add_subcommand("bench", "time the core solvers (CSV)");
  add_common(*be, bench_flags);
  be->add_option("--sizes", bench.sizes, "comma-separated grid sides")->delimiter(',');
  be->add_option("--repeats", bench.repeats, "runs per size")->check(CLI::PositiveNumber);
  be->add_option("--output,-o", bench.output, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (g->parsed()) return cmd_gen(gen_flags, gen);
    if (ds->parsed()) return cmd_dist(dist_flags, dist);
    if (by->parsed()) return cmd_bary(bary_flags, bary);
    if (bd->parsed()) return cmd_bound(bound_flags, bound);
    if (fo->parsed()) return cmd_forecast(forecast_flags, fc);
    if (be->parsed()) return cmd_bench(bench_flags, bench);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
