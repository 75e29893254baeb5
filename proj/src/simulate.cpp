#include "fdavp/simulate.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

#include "fdavp/parallel.hpp"

namespace fdavp {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

double euclid(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return std::sqrt(s);
}

double norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}
}  // namespace

double MeanSpec::eval(std::span<const double> t) const {
  switch (kind) {
    case Kind::zero:
      return 0.0;
    case Kind::trig_poly: {
      double s = 0.0;
      for (const auto& [k, a] : terms) s += a * basis_eval(k, t);
      return s;
    }
    case Kind::weierstrass: {
      double s = 0.0;
      for (int j = 1; j <= j_max; ++j) {
        double p = 1.0;
        const double freq = kTwoPi * std::pow(2.0, j);
        for (double td : t) p *= std::cos(freq * td);
        s += std::pow(2.0, -j * alpha) * p;
      }
      return amplitude * s;
    }
  }
  return 0.0;
}

MeanSpec MeanSpec::trig(std::vector<std::pair<MultiIndex, double>> terms) {
  MeanSpec m;
  m.kind = Kind::trig_poly;
  m.terms = std::move(terms);
  return m;
}

MeanSpec MeanSpec::weier(double alpha, int j_max, double amplitude) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("weierstrass: alpha in (0,1)");
  MeanSpec m;
  m.kind = Kind::weierstrass;
  m.alpha = alpha;
  m.j_max = j_max;
  m.amplitude = amplitude;
  return m;
}

double CovarianceSpec::eval(std::span<const double> s, std::span<const double> t) const {
  switch (kind) {
    case Kind::zero:
      return 0.0;
    case Kind::exponential:
      return std::exp(-euclid(s, t) / scale);
    case Kind::matern32: {
      const double r = std::sqrt(3.0) * euclid(s, t) / scale;
      return (1.0 + r) * std::exp(-r);
    }
    case Kind::fbm: {
      const double h2 = 2.0 * hurst;
      return 0.5 * (std::pow(norm(s), h2) + std::pow(norm(t), h2) -
                    std::pow(euclid(s, t), h2));
    }
  }
  return 0.0;
}

double CovarianceSpec::holder_exponent() const {
  switch (kind) {
    case Kind::zero: return 1.0;
    case Kind::exponential: return 1.0;
    case Kind::matern32: return 1.0;
    case Kind::fbm: return std::min(1.0, 2.0 * hurst);
  }
  return 1.0;
}

CovarianceSpec CovarianceSpec::exponential(double scale) {
  if (scale <= 0.0) throw std::invalid_argument("exponential: scale > 0");
  CovarianceSpec c;
  c.kind = Kind::exponential;
  c.scale = scale;
  return c;
}

CovarianceSpec CovarianceSpec::matern32(double scale) {
  if (scale <= 0.0) throw std::invalid_argument("matern32: scale > 0");
  CovarianceSpec c;
  c.kind = Kind::matern32;
  c.scale = scale;
  return c;
}

CovarianceSpec CovarianceSpec::fbm(double hurst) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw std::invalid_argument("fbm: H in (0,1)");
  CovarianceSpec c;
  c.kind = Kind::fbm;
  c.hurst = hurst;
  return c;
}

NoiseSpec NoiseSpec::none() {
  NoiseSpec n;
  n.sigma = [](std::span<const double>) { return 0.0; };
  return n;
}

NoiseSpec NoiseSpec::gaussian(std::function<double(std::span<const double>)> sigma) {
  NoiseSpec n;
  n.sigma = std::move(sigma);
  return n;
}

NoiseSpec NoiseSpec::gaussian_const(double s) {
  if (s < 0.0) throw std::invalid_argument("noise: sigma >= 0");
  return gaussian([s](std::span<const double>) { return s; });
}

std::size_t FunctionalDataset::total_obs() const {
  std::size_t n = 0;
  for (const auto& c : curves) n += c.count(dim);
  return n;
}

PooledDesign FunctionalDataset::pooled() const {
  std::vector<double> pts;
  std::vector<int> curve_ids, within_ids;
  pts.reserve(total_obs() * static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const std::size_t mi = curves[i].count(dim);
    for (std::size_t m = 0; m < mi; ++m) {
      for (int d = 0; d < dim; ++d) {
        pts.push_back(curves[i].t[m * static_cast<std::size_t>(dim) + static_cast<std::size_t>(d)]);
      }
      curve_ids.push_back(static_cast<int>(i));
      within_ids.push_back(static_cast<int>(m));
    }
  }
  return PooledDesign::from_points(dim, std::move(pts), std::move(curve_ids),
                                   std::move(within_ids));
}

std::vector<std::vector<double>> sample_design(int N, int dim, const CountLaw& counts,
                                               const DesignDensity& density,
                                               std::uint64_t seed) {
  if (!density.has_sampler()) throw std::invalid_argument("sample_design: density sampler missing");
  if (density.dim != dim) throw std::invalid_argument("sample_design: density dimension mismatch");
  if (counts.m_lo < 1 || counts.m_hi < counts.m_lo) {
    throw std::invalid_argument("sample_design: invalid count law");
  }
  std::vector<std::vector<double>> designs(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    Rng rng(derive_seed(seed, Stream::design, static_cast<std::uint64_t>(i)));
    int mi = counts.m_lo;
    if (counts.m_hi > counts.m_lo) {
      mi += static_cast<int>(rng.bits() % static_cast<std::uint64_t>(counts.m_hi - counts.m_lo + 1));
    }
    auto& t = designs[static_cast<std::size_t>(i)];
    t.resize(static_cast<std::size_t>(mi) * static_cast<std::size_t>(dim));
    for (int m = 0; m < mi; ++m) {
      density.sample(rng, {t.data() + static_cast<std::size_t>(m) * dim, static_cast<std::size_t>(dim)});
    }
  }
  return designs;
}

std::vector<std::vector<double>> sample_paths(const MeanSpec& mean, const CovarianceSpec& cov,
                                              const std::vector<std::vector<double>>& designs,
                                              int dim, std::uint64_t seed, int threads) {
  std::vector<std::vector<double>> latent(designs.size());
  parallel_for(designs.size(), [&](std::size_t i) {
    const auto& t = designs[i];
    const std::size_t mi = t.size() / static_cast<std::size_t>(dim);
    auto& x = latent[i];
    x.resize(mi);
    auto point = [&](std::size_t m) {
      return std::span<const double>(t.data() + m * static_cast<std::size_t>(dim),
                                     static_cast<std::size_t>(dim));
    };
    for (std::size_t m = 0; m < mi; ++m) x[m] = mean.eval(point(m));
    if (cov.kind == CovarianceSpec::Kind::zero || mi == 0) return;

    Eigen::MatrixXd gram(mi, mi);
    for (std::size_t a = 0; a < mi; ++a) {
      for (std::size_t b = 0; b <= a; ++b) {
        const double v = cov.eval(point(a), point(b));
        gram(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
        gram(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt;
    bool ok = false;
    for (double jitter : {1e-10, 1e-8, 1e-6}) {
      Eigen::MatrixXd g = gram;
      g.diagonal().array() += jitter;
      llt.compute(g);
      if (llt.info() == Eigen::Success) { ok = true; break; }
    }
    if (!ok) throw std::runtime_error("sample_paths: degenerate covariance (factorization failed at jitter 1e-6)");
    Rng rng(derive_seed(seed, Stream::paths, static_cast<std::uint64_t>(i)));
    Eigen::VectorXd z(mi);
    for (std::size_t m = 0; m < mi; ++m) z(static_cast<Eigen::Index>(m)) = rng.normal();
    const Eigen::VectorXd corr = llt.matrixL() * z;
    for (std::size_t m = 0; m < mi; ++m) x[m] += corr(static_cast<Eigen::Index>(m));
  }, threads);
  return latent;
}

FunctionalDataset observe(std::vector<std::vector<double>> designs,
                          std::vector<std::vector<double>> latent, int dim,
                          const NoiseSpec& noise, std::uint64_t seed, bool keep_truth) {
  if (designs.size() != latent.size()) throw std::invalid_argument("observe: design/latent mismatch");
  FunctionalDataset data;
  data.dim = dim;
  data.seed = seed;
  data.curves.resize(designs.size());
  for (std::size_t i = 0; i < designs.size(); ++i) {
    auto& c = data.curves[i];
    c.t = std::move(designs[i]);
    const std::size_t mi = c.t.size() / static_cast<std::size_t>(dim);
    if (latent[i].size() != mi) throw std::invalid_argument("observe: latent length mismatch");
    c.y.resize(mi);
    if (keep_truth) {
      c.latent = latent[i];
      c.eps.resize(mi);
    }
    Rng rng(derive_seed(seed, Stream::noise, static_cast<std::uint64_t>(i)));
    for (std::size_t m = 0; m < mi; ++m) {
      const std::span<const double> tm{c.t.data() + m * static_cast<std::size_t>(dim),
                                       static_cast<std::size_t>(dim)};
      const double s = noise.sigma ? noise.sigma(tm) : 0.0;
      if (s < 0.0) throw std::invalid_argument("observe: sigma must be >= 0");
      double e = 0.0;
      switch (noise.law) {
        case NoiseSpec::Law::gaussian: e = rng.normal(); break;
        case NoiseSpec::Law::rademacher: e = rng.rademacher(); break;
        case NoiseSpec::Law::student_t: e = rng.student_t_unit(noise.df); break;
      }
      const double eps = s * e;
      c.y[m] = latent[i][m] + eps;
      if (keep_truth) c.eps[m] = eps;
    }
  }
  return data;
}

FunctionalDataset simulate(const SimConfig& config) {
  auto designs = sample_design(config.n_curves, config.dim, config.counts,
                               config.density, config.seed);
  auto latent = sample_paths(config.mean, config.cov, designs, config.dim, config.seed,
                             config.threads);
  FunctionalDataset data = observe(std::move(designs), std::move(latent), config.dim,
                                   config.noise, config.seed, config.truth_channel);
  if (config.truth_channel) {
    TruthChannel truth;
    truth.grid = midpoint_grid(config.dim, config.truth_grid);
    const std::size_t g = truth.grid.size() / static_cast<std::size_t>(config.dim);
    truth.mu.resize(g);
    for (std::size_t i = 0; i < g; ++i) {
      truth.mu[i] = config.mean.eval({truth.grid.data() + i * static_cast<std::size_t>(config.dim),
                                      static_cast<std::size_t>(config.dim)});
    }
    data.truth = std::move(truth);
  }
  return data;
}

std::vector<double> midpoint_grid(int dim, int res) {
  std::vector<double> grid;
  const std::size_t total = static_cast<std::size_t>(std::pow(res, dim));
  grid.reserve(total * static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rest = i;
    for (int d = 0; d < dim; ++d) {
      grid.push_back((static_cast<double>(rest % static_cast<std::size_t>(res)) + 0.5) / res);
      rest /= static_cast<std::size_t>(res);
    }
  }
  return grid;
}

double empirical_l2_error(const std::function<double(std::span<const double>)>& f,
                          const std::function<double(std::span<const double>)>& g,
                          int dim, int grid_per_axis) {
  if (grid_per_axis <= 0) grid_per_axis = (dim == 1) ? 512 : 64;
  const auto grid = midpoint_grid(dim, grid_per_axis);
  const std::size_t n = grid.size() / static_cast<std::size_t>(dim);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<const double> t{grid.data() + i * static_cast<std::size_t>(dim),
                                    static_cast<std::size_t>(dim)};
    const double diff = f(t) - g(t);
    s += diff * diff;
  }
  return s / static_cast<double>(n);
}

}  // namespace fdavp
