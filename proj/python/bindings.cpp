#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sta/align.hpp"
#include "sta/barycenter.hpp"
#include "sta/delannoy.hpp"
#include "sta/forecast.hpp"
#include "sta/geometry.hpp"
#include "sta/io.hpp"
#include "sta/uot.hpp"

namespace py = pybind11;
using namespace sta;

namespace {

UotParams make_params(const GroundGeometry& g, double gamma, double tol, int max_iter) {
  UotParams p;
  p.epsilon = g.epsilon();
  p.gamma = gamma;
  p.tol = tol;
  p.max_iter = max_iter;
  return p;
}

Vector weights_or_uniform(const std::optional<Vector>& w, std::size_t n) {
  return w ? *w : Vector::Ones(static_cast<Eigen::Index>(n));
}

}  // namespace

PYBIND11_MODULE(_sta, m) {
  m.doc() = "Spatio-temporal alignment: Soft-DTW with unbalanced OT frame costs";

  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  // Soft-DTW
  m.def(
      "sdtw",
      [](const Matrix& delta, double beta) { return sdtw_forward(CostMatrix(delta), beta).value; },
      py::arg("delta"), py::arg("beta"), "Soft-DTW value of a pairwise cost matrix.");
  m.def(
      "sdtw_value_and_grad",
      [](const Matrix& delta, double beta) {
        const auto r = sdtw_value_and_grad(CostMatrix(delta), beta);
        return py::make_tuple(r.value, r.E);
      },
      py::arg("delta"), py::arg("beta"), "Value and expected alignment E = d sdtw / d delta.");
  m.def(
      "sdtw_bruteforce",
      [](const Matrix& delta, double beta) { return sdtw_bruteforce(CostMatrix(delta), beta).value; },
      py::arg("delta"), py::arg("beta"));
  m.def("squared_difference_cost", &squared_difference_cost, py::arg("x"), py::arg("y"));
  m.def("dirac_series", &dirac_series, py::arg("T"), py::arg("t_star"), py::arg("c") = 1.0);
  m.def("dirac_shift_gap", &dirac_shift_gap, py::arg("T"), py::arg("t_star"), py::arg("k"),
        py::arg("beta"), py::arg("c") = 1.0);

  // Delannoy numbers and bounds
  m.def("delannoy_log", &delannoy_log, py::arg("m"), py::arg("n"));
  m.def("central_delannoy_log", &central_delannoy_log, py::arg("m"));
  m.def(
      "delannoy_exact",
      [](int mm, int n) {
        DelannoyTable table(std::max(mm, n));
        return py::int_(py::str(table.exact(mm, n).str()));
      },
      py::arg("m"), py::arg("n"), "Exact D_{m,n} for m, n <= 30.");
  m.def("quad_lower_bound", &quad_lower_bound, py::arg("k"), py::arg("T"));
  m.def("dirac_lower_bound", &dirac_lower_bound, py::arg("k"), py::arg("beta"), py::arg("r"), py::arg("T"));
  m.def("dirac_lower_bound_limit", &dirac_lower_bound_limit, py::arg("beta"), py::arg("r"), py::arg("T"));
  m.def("beta_heuristic", &beta_heuristic, py::arg("k_max"), py::arg("eta"), py::arg("r"), py::arg("T"));

  // Geometry
  py::class_<GroundGeometry>(m, "GroundGeometry")
      .def_static("grid", &GroundGeometry::grid, py::arg("h"), py::arg("w"), py::arg("epsilon"),
                  py::arg("normalize") = true)
      .def_static("from_cost", &GroundGeometry::from_cost, py::arg("cost"), py::arg("epsilon"))
      .def_property_readonly("size", &GroundGeometry::size)
      .def_property_readonly("epsilon", &GroundGeometry::epsilon)
      .def_property_readonly("separable", &GroundGeometry::separable)
      .def("dense_cost", &GroundGeometry::dense_cost)
      .def("dense_kernel", &GroundGeometry::dense_kernel)
      .def("apply", &GroundGeometry::apply, py::arg("v"))
      .def("with_epsilon", &GroundGeometry::with_epsilon, py::arg("epsilon"));
  m.def("default_epsilon", &default_epsilon, py::arg("p"));

  // Unbalanced OT
  m.def(
      "uot",
      [](const Vector& x, const Vector& y, const GroundGeometry& g, double gamma, double tol, int max_iter) {
        const auto r = sinkhorn_uot(x, y, g, make_params(g, gamma, tol, max_iter));
        if (!r.duals.converged) throw NumericalError("uot: Sinkhorn did not converge");
        return r.value;
      },
      py::arg("x"), py::arg("y"), py::arg("geometry"), py::arg("gamma") = 1.0, py::arg("tol") = 1e-7,
      py::arg("max_iter") = 5000);
  m.def(
      "debiased_uot",
      [](const Vector& x, const Vector& y, const GroundGeometry& g, double gamma, double tol, int max_iter) {
        return debiased_uot(x, y, g, make_params(g, gamma, tol, max_iter));
      },
      py::arg("x"), py::arg("y"), py::arg("geometry"), py::arg("gamma") = 1.0, py::arg("tol") = 1e-7,
      py::arg("max_iter") = 5000);
  m.def(
      "debiased_barycenter",
      [](const std::vector<Vector>& inputs, const std::optional<Vector>& weights, const GroundGeometry& g,
         double gamma, double tol, int max_iter) {
        const auto r = debiased_uot_barycenter(inputs, weights_or_uniform(weights, inputs.size()), g,
                                               make_params(g, gamma, tol, max_iter));
        return py::make_tuple(r.barycenter, r.converged, r.iterations);
      },
      py::arg("inputs"), py::arg("weights") = py::none(), py::arg("geometry"), py::arg("gamma") = 1.0,
      py::arg("tol") = 1e-7, py::arg("max_iter") = 5000,
      "Returns (barycenter, converged, iterations).");

  // Spatio-temporal
  m.def(
      "sta_distance",
      [](const Series& x, const Series& y, const GroundGeometry& g, double beta, double gamma, double tol,
         int max_iter, int threads) {
        return sta_distance(x, y, g, make_params(g, gamma, tol, max_iter), beta, threads);
      },
      py::arg("x"), py::arg("y"), py::arg("geometry"), py::arg("beta"), py::arg("gamma") = 1.0,
      py::arg("tol") = 1e-7, py::arg("max_iter") = 5000, py::arg("threads") = 1);
  m.def(
      "sta_barycenter",
      [](const std::vector<Series>& inputs, const std::optional<Vector>& weights, const GroundGeometry& g,
         double beta, double gamma, double tol, int max_iter, int max_outer, int threads) {
        SdtwBarycenterOptions opt;
        opt.beta = beta;
        opt.max_outer = max_outer;
        opt.threads = threads;
        const auto r = sta_barycenter(inputs, weights_or_uniform(weights, inputs.size()), g,
                                      make_params(g, gamma, tol, max_iter), opt);
        return py::make_tuple(r.barycenter, r.objective);
      },
      py::arg("inputs"), py::arg("weights") = py::none(), py::arg("geometry"), py::arg("beta"),
      py::arg("gamma") = 1.0, py::arg("tol") = 1e-7, py::arg("max_iter") = 5000, py::arg("max_outer") = 20,
      py::arg("threads") = 1, "Returns (barycenter, objective history).");
  m.def(
      "euclidean_mean",
      [](const std::vector<Series>& inputs, const std::optional<Vector>& weights) {
        return euclidean_mean(inputs, weights_or_uniform(weights, inputs.size()));
      },
      py::arg("inputs"), py::arg("weights") = py::none());

  // Data
  m.def(
      "generate_moving_blobs",
      [](int classes, int per_class, int T, int h, int w, int shift_max, int crop_min, double width,
         std::uint64_t seed) {
        BlobConfig c;
        c.classes = classes;
        c.per_class = per_class;
        c.T = T;
        c.h = h;
        c.w = w;
        c.spatial_shift_max = shift_max;
        c.temporal_crop_min = crop_min;
        c.blob_width = width;
        c.seed = seed;
        const Dataset d = generate_moving_blobs(c);
        return py::make_tuple(d.samples, d.labels);
      },
      py::arg("classes") = 4, py::arg("per_class") = 25, py::arg("T") = 13, py::arg("h") = 30,
      py::arg("w") = 30, py::arg("shift_max") = 10, py::arg("crop_min") = 5, py::arg("width") = 1.5,
      py::arg("seed") = 0, "Returns (samples, labels); each sample is T x (h * w).");
  m.def(
      "read_dataset",
      [](const std::string& path) {
        const Dataset d = read_dataset(path);
        return py::make_tuple(d.samples, d.labels, d.h, d.w);
      },
      py::arg("path"), "Returns (samples, labels, h, w).");
  m.def(
      "write_dataset",
      [](const std::string& path, const std::vector<Series>& samples, const std::vector<int>& labels, int h,
         int w) {
        Dataset d;
        d.samples = samples;
        d.labels = labels;
        d.h = h;
        d.w = w;
        write_dataset(path, d);
      },
      py::arg("path"), py::arg("samples"), py::arg("labels"), py::arg("h"), py::arg("w"));
}
