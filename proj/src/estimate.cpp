#include "fdavp/estimate.hpp"

#include <cmath>
#include <stdexcept>

#include "fdavp/parallel.hpp"

namespace fdavp {

double rho_constant(int dim) {
  (void)dim;
  return 2.5;
}

double calibrate_rho(int dim, std::size_t n, int reps, std::uint64_t seed) {
  const DesignDensity density = DesignDensity::uniform(dim);
  double total = 0.0;
  std::size_t count = 0;
  for (int r = 0; r < reps; ++r) {
    Rng rng(derive_seed(seed, Stream::replication, static_cast<std::uint64_t>(r)));
    std::vector<double> pts(n * static_cast<std::size_t>(dim));
    for (auto& v : pts) v = rng.uniform();
    const auto design = PooledDesign::from_points(dim, std::move(pts));
    const auto deg = degrees(design);
    const auto vol = (dim == 1)
        ? cumulative_volumes_exact_1d(design, density)
        : cumulative_volumes_mc(design, density, std::max<std::uint64_t>(100000, 100 * n),
                                derive_seed(seed, Stream::mc_volumes, static_cast<std::uint64_t>(r)));
    // interior = points at least 0.1 away from every face
    for (std::size_t j = 0; j < n; ++j) {
      bool interior = true;
      for (int d = 0; d < dim; ++d) {
        const double x = design.points[j * static_cast<std::size_t>(dim) + static_cast<std::size_t>(d)];
        if (x < 0.1 || x > 0.9) interior = false;
      }
      if (!interior) continue;
      const double u = 1.0 + vol[j] - deg[j];
      total += u * u;
      ++count;
    }
  }
  if (count == 0) throw std::runtime_error("calibrate_rho: no interior points");
  return total / static_cast<double>(count);
}

FitResult fourier_coefficients(const FunctionalDataset& data, const DesignDensity& density,
                               int L, const WeightConfig& wcfg, int threads) {
  if (L < 1) throw std::invalid_argument("fourier_coefficients: L >= 1");
  const PooledDesign design = data.pooled();
  const std::size_t n = design.size();
  if (n < 4) throw std::invalid_argument("fourier_coefficients: Mbar >= 4 required");
  DesignWeights weights = compute_weights(design, density, wcfg);

  // per-point factor omega * Y / f_T
  std::vector<double> factor(n);
  {
    std::size_t j = 0;
    for (const auto& c : data.curves) {
      const std::size_t mi = c.count(data.dim);
      for (std::size_t m = 0; m < mi; ++m, ++j) {
        const double f = density.pdf(design.point(j));
        if (!(f > 0.0)) throw std::runtime_error("fourier_coefficients: density <= 0 at a design point");
        factor[j] = weights.w[j] * c.y[m] / f;
      }
    }
  }

  FourierModel model(data.dim, L);
  const IndexSet& idx = model.indices;
  const std::size_t p = idx.size();
  // the per-point basis table is the hot loop: one table per point, then a
  // fused accumulate over indices
  const int max_k = idx.bound();
  std::vector<std::vector<double>> partials;
  const std::size_t chunks = 32;
  partials.assign(chunks, {});
  parallel_for(chunks, [&](std::size_t ci) {
    auto& acc = partials[ci];
    acc.assign(p, 0.0);
    const std::size_t lo = n * ci / chunks, hi = n * (ci + 1) / chunks;
    for (std::size_t j = lo; j < hi; ++j) {
      BasisTable table(design.point(j), max_k);
      const double fj = factor[j];
      for (std::size_t i = 0; i < p; ++i) acc[i] += fj * table.value(idx.at(i));
    }
  }, threads);
  for (std::size_t ci = 0; ci < chunks; ++ci) {
    for (std::size_t i = 0; i < p; ++i) model.coefficients[i] += partials[ci][i];
  }
  return {std::move(model), std::move(weights)};
}

std::function<double(std::span<const double>)> mean_estimator(const FourierModel& model) {
  return [model](std::span<const double> t) { return vp_eval(model, t); };
}

int optimal_L(double alpha, double c_vp, double k1, int dim, std::size_t m_bar, double rho) {
  if (!(alpha > 0.0) || !(c_vp > 0.0) || !(k1 > 0.0)) {
    throw std::invalid_argument("optimal_L: alpha, Cvp, K1 must be > 0");
  }
  if (rho <= 0.0) rho = rho_constant(dim);
  double fact = 1.0;
  for (int i = 2; i <= dim + 1; ++i) fact *= i;
  const double pow_term = std::pow(2.0, 2 * dim + 1) - std::pow(2.0, dim);
  const double c_star = std::pow((2.0 * alpha * c_vp) * fact / (dim * k1 * rho * pow_term),
                                 1.0 / (2.0 * alpha + dim));
  const double l = c_star * std::pow(static_cast<double>(m_bar), 1.0 / (2.0 * alpha + dim));
  return std::max(1, static_cast<int>(std::floor(l)));
}

double estimate_k1(const FunctionalDataset& data, const DesignDensity& density,
                   int pilot_level, const WeightConfig& wcfg) {
  const std::size_t m_bar = data.total_obs();
  if (m_bar < 4) throw std::invalid_argument("estimate_k1: Mbar >= 4 required");
  if (pilot_level <= 0) {
    pilot_level = std::max(1, static_cast<int>(std::ceil(
        std::pow(static_cast<double>(m_bar), 1.0 / (2.0 + data.dim)))));
  }
  const FitResult pilot = fourier_coefficients(data, density, pilot_level, wcfg);
  double total = 0.0;
  for (const auto& c : data.curves) {
    const std::size_t mi = c.count(data.dim);
    for (std::size_t m = 0; m < mi; ++m) {
      const std::span<const double> t{c.t.data() + m * static_cast<std::size_t>(data.dim),
                                      static_cast<std::size_t>(data.dim)};
      const double r = c.y[m] - vp_eval(pilot.model, t);
      const double f = density.pdf(t);
      total += r * r / (f * f);
    }
  }
  return total / static_cast<double>(m_bar);
}

RegimeReport regime(const FunctionalDataset& data, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("regime: alpha > 0");
  const double m_bar = static_cast<double>(data.total_obs());
  RegimeReport rep;
  rep.sparse_term = std::pow(m_bar, -2.0 * alpha / (2.0 * alpha + data.dim));
  double pairs = 0.0;
  for (const auto& c : data.curves) {
    const double mi = static_cast<double>(c.count(data.dim));
    pairs += mi * (mi - 1.0);
  }
  rep.dense_term = pairs / (m_bar * (m_bar - 1.0));
  if (rep.dense_term <= 0.0) {
    rep.label = "sparse";
  } else {
    const double ratio = rep.sparse_term / rep.dense_term;
    rep.label = (ratio >= 0.5 && ratio <= 2.0) ? "boundary" : (ratio > 2.0 ? "sparse" : "dense");
  }
  return rep;
}

}  // namespace fdavp
