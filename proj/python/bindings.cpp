#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fdavp/cli.hpp"
#include "fdavp/inference.hpp"
#include "fdavp/regularity.hpp"
#include "fdavp/serialize.hpp"

namespace py = pybind11;
using namespace fdavp;

namespace {

PooledDesign design_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> pts) {
  const auto buf = pts.request();
  int dim = 1;
  std::size_t n = static_cast<std::size_t>(buf.shape[0]);
  if (buf.ndim == 2) dim = static_cast<int>(buf.shape[1]);
  else if (buf.ndim != 1) throw std::invalid_argument("points must be (n,) or (n, D)");
  std::vector<double> flat(static_cast<const double*>(buf.ptr),
                           static_cast<const double*>(buf.ptr) + n * static_cast<std::size_t>(dim));
  return PooledDesign::from_points(dim, std::move(flat));
}

DesignDensity density_from_name(int dim, const std::string& kind, double a, double b) {
  if (kind == "uniform") return DesignDensity::uniform(dim);
  if (kind == "beta") return DesignDensity::product_beta(dim, a, b);
  throw std::invalid_argument("density must be uniform|beta");
}

FunctionalDataset dataset_from_arrays(
    py::array_t<double, py::array::c_style | py::array::forcecast> t,
    py::array_t<double, py::array::c_style | py::array::forcecast> y,
    py::array_t<long, py::array::c_style | py::array::forcecast> curve) {
  const auto tb = t.request();
  int dim = tb.ndim == 2 ? static_cast<int>(tb.shape[1]) : 1;
  const std::size_t n = static_cast<std::size_t>(tb.shape[0]);
  if (static_cast<std::size_t>(y.request().shape[0]) != n ||
      static_cast<std::size_t>(curve.request().shape[0]) != n) {
    throw std::invalid_argument("t, y and curve must share the first dimension");
  }
  const double* tp = static_cast<const double*>(tb.ptr);
  const double* yp = static_cast<const double*>(y.request().ptr);
  const long* cp = static_cast<const long*>(curve.request().ptr);
  FunctionalDataset data;
  data.dim = dim;
  long max_curve = -1;
  for (std::size_t i = 0; i < n; ++i) max_curve = std::max(max_curve, cp[i]);
  data.curves.resize(static_cast<std::size_t>(max_curve + 1));
  for (std::size_t i = 0; i < n; ++i) {
    auto& c = data.curves[static_cast<std::size_t>(cp[i])];
    for (int d = 0; d < dim; ++d) c.t.push_back(tp[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(d)]);
    c.y.push_back(yp[i]);
  }
  return data;
}

}  // namespace

PYBIND11_MODULE(_fdavp, m) {
  m.doc() = "Fourier / de La Vallee Poussin mean estimation for discretely observed "
            "random functions";
  m.attr("__version__") = version_string();

  m.def("enumerate_indices", [](int dim, int bound) {
    const IndexSet idx(dim, bound);
    std::vector<std::vector<int>> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out[i].assign(idx.at(i).begin(), idx.at(i).end());
    }
    return out;
  }, py::arg("dim"), py::arg("bound"));

  m.def("basis_eval", [](const std::vector<int>& k, const std::vector<double>& t) {
    return basis_eval(k, t);
  }, py::arg("k"), py::arg("t"));

  m.def("vp_weight", &vp_weight, py::arg("level"), py::arg("l1"));
  m.def("theta_average", [](int level, int dim, const std::vector<double>& t) {
    return theta_average(level, dim, t);
  }, py::arg("level"), py::arg("dim"), py::arg("t"));
  m.def("optimal_L", &optimal_L, py::arg("alpha"), py::arg("c_vp"), py::arg("k1"),
        py::arg("dim"), py::arg("m_bar"), py::arg("rho") = 0.0);

  m.def("design_weights", [](py::array_t<double, py::array::c_style | py::array::forcecast> pts,
                             const std::string& density, double a, double b,
                             std::uint64_t mc_draws, std::uint64_t seed) {
    const auto design = design_from_array(std::move(pts));
    const auto dens = density_from_name(design.dim, density, a, b);
    WeightConfig cfg;
    cfg.mc_draws = mc_draws;
    cfg.seed = seed;
    const auto w = compute_weights(design, dens, cfg);
    py::dict out;
    out["degree"] = w.degree;
    out["cumvol"] = w.cumvol;
    out["w"] = w.w;
    out["route"] = w.route;
    out["sum_w_residual"] = w.sum_w_residual;
    return out;
  }, py::arg("points"), py::arg("density") = "uniform", py::arg("a") = 1.0,
     py::arg("b") = 1.0, py::arg("mc_draws") = 0, py::arg("seed") = 0);

  m.def("fit", [](py::array_t<double, py::array::c_style | py::array::forcecast> t,
                  py::array_t<double, py::array::c_style | py::array::forcecast> y,
                  py::array_t<long, py::array::c_style | py::array::forcecast> curve,
                  int level, const std::string& density, double a, double b,
                  std::uint64_t seed) {
    const auto data = dataset_from_arrays(std::move(t), std::move(y), std::move(curve));
    const auto dens = density_from_name(data.dim, density, a, b);
    WeightConfig cfg;
    cfg.seed = seed;
    const auto fit = fourier_coefficients(data, dens, level, cfg);
    py::dict out;
    out["dim"] = fit.model.dim;
    out["level"] = fit.model.level;
    out["coefficients"] = fit.model.coefficients;
    out["sum_w_residual"] = fit.weights.sum_w_residual;
    return out;
  }, py::arg("t"), py::arg("y"), py::arg("curve"), py::arg("level"),
     py::arg("density") = "uniform", py::arg("a") = 1.0, py::arg("b") = 1.0,
     py::arg("seed") = 0);

  m.def("vp_eval", [](int dim, int level, const std::vector<double>& coefficients,
                      py::array_t<double, py::array::c_style | py::array::forcecast> pts) {
    FourierModel model(dim, level);
    if (coefficients.size() != model.indices.size()) {
      throw std::invalid_argument("coefficient count must match IndexSet(D, 4L-2)");
    }
    model.coefficients = coefficients;
    const auto buf = pts.request();
    const std::size_t n = static_cast<std::size_t>(buf.shape[0]);
    const double* p = static_cast<const double*>(buf.ptr);
    py::array_t<double> out(static_cast<py::ssize_t>(n));
    auto o = out.mutable_unchecked<1>();
    const std::size_t d = static_cast<std::size_t>(dim);
    for (std::size_t i = 0; i < n; ++i) {
      const std::span<const double> point(p + i * d, d);
      o(static_cast<py::ssize_t>(i)) = fdavp::vp_eval(model, point);
    }
    return out;
  }, py::arg("dim"), py::arg("level"), py::arg("coefficients"), py::arg("points"));

  m.def("estimate_alpha", [](py::array_t<double, py::array::c_style | py::array::forcecast> t,
                             py::array_t<double, py::array::c_style | py::array::forcecast> y,
                             py::array_t<long, py::array::c_style | py::array::forcecast> curve,
                             double tau, double tau_prime, double r_prime) {
    const auto data = dataset_from_arrays(std::move(t), std::move(y), std::move(curve));
    RegularityConfig cfg;
    cfg.tau = tau;
    cfg.tau_prime = tau_prime;
    cfg.r_prime = r_prime;
    const auto est = estimate_alpha(data, cfg);
    py::dict out;
    out["alpha"] = est.alpha;
    out["j0"] = est.j0;
    out["K"] = est.cells_per_axis;
    out["J"] = est.j_grid;
    out["g_hat"] = est.g;
    out["flags"] = est.flags;
    return out;
  }, py::arg("t"), py::arg("y"), py::arg("curve"), py::arg("tau") = 0.6,
     py::arg("tau_prime") = 0.3, py::arg("r_prime") = 1.0);

  m.def("run_cli", [](const std::vector<std::string>& args) { return run_cli(args); },
        py::arg("args"), "drive the batch pipeline: simulate|estimate|infer|regularity|bench");
}
