#include "fdavp/inference.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "fdavp/parallel.hpp"

namespace fdavp {

namespace {

// empirical quantile: inf{ z : Fhat(z) >= p }, i.e. the ceil(n p)-th order stat
double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  std::size_t k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
  if (k == 0) k = 1;
  if (k > n) k = n;
  return values[k - 1];
}

// Phi matrix over a flat grid: rows = grid points, cols = IndexSet entries
Eigen::MatrixXd phi_on_grid(int dim, int L, std::span<const double> grid) {
  const IndexSet idx(dim, 4 * L - 2);
  const std::size_t g = grid.size() / static_cast<std::size_t>(dim);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < g; ++r) {
    BasisTable table({grid.data() + r * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)},
                     idx.bound());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) =
          vp_weight(L, idx.l1(i)) * table.value(idx.at(i));
    }
  }
  return out;
}

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m, double& clip_magnitude) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw std::runtime_error("Sigma eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  clip_magnitude = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < 0.0) {
      clip_magnitude = std::max(clip_magnitude, -ev(i));
      ev(i) = 0.0;
    }
  }
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

double pair_count_of(const FunctionalDataset& data) {
  double pairs = 0.0;
  for (const auto& c : data.curves) {
    const double mi = static_cast<double>(c.count(data.dim));
    pairs += mi * (mi - 1.0);
  }
  return pairs;
}

}  // namespace

Rates rates(const FunctionalDataset& data, int L) {
  if (L < 1) throw std::invalid_argument("rates: L >= 1");
  const double m_bar = static_cast<double>(data.total_obs());
  Rates r;
  r.r1 = std::sqrt(m_bar / std::pow(static_cast<double>(L), data.dim));
  const double pairs = pair_count_of(data);
  r.r2 = pairs > 0.0 ? m_bar / std::sqrt(pairs) : std::numeric_limits<double>::infinity();
  return r;
}

double normal_quantile(double p) {
  // Wichura, Algorithm AS 241 (PPND7-level accuracy is fine here)
  if (p <= 0.0 || p >= 1.0) {
    if (p == 0.5) return 0.0;
    throw std::invalid_argument("normal_quantile: p in (0,1)");
  }
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * (((((((2509.0809287301226727 * r + 33430.575583588128105) * r +
                     67265.770927008700853) * r + 45921.953931549871457) * r +
                   13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
           (((((((5226.495278852545703 * r + 28729.085735721942674) * r +
                 39307.89580009271061) * r + 21213.794301586595867) * r +
               5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double v;
  if (r <= 5.0) {
    r -= 1.6;
    v = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
              0.24178072517745061177) * r + 1.27045825245236838258) * r +
            3.64784832476320460504) * r + 5.7694972214606914055) * r +
          4.6303378461565452959) * r + 1.42343711074968357734) /
        (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
              0.0151986665636164571966) * r + 0.14810397642748007459) * r +
            0.68976733498510000455) * r + 1.6763848301838038494) * r +
          2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    v = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              0.0012426609473880784386) * r + 0.026532189526576123093) * r +
            0.29656057182850489123) * r + 1.7848265399172913358) * r +
          5.4637849111641143699) * r + 6.6579046435011037772) /
        (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
              1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
            0.0148753612908506148525) * r + 0.13692988092273580531) * r +
          0.59983220655588793769) * r + 1.0);
  }
  return (q < 0.0) ? -v : v;
}

SigmaMatrix sigma_matrix_oracle(int dim, int L, std::size_t m_bar, double pair_count,
                                const ScalarField& sigma2, const Kernel& gamma,
                                const DesignDensity& density, double rho,
                                int quad_per_axis, int threads) {
  if (rho <= 0.0) rho = rho_constant(dim);
  if (quad_per_axis <= 0) quad_per_axis = (dim == 1) ? 1024 : 64;
  const IndexSet idx(dim, 4 * L - 2);
  const std::size_t p = idx.size();
  const auto grid = midpoint_grid(dim, quad_per_axis);
  const std::size_t g = grid.size() / static_cast<std::size_t>(dim);
  const double cell = 1.0 / static_cast<double>(g);

  // basis matrix B[node, index] (unweighted phi)
  Eigen::MatrixXd b(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(p));
  parallel_for(g, [&](std::size_t r) {
    BasisTable table({grid.data() + r * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)},
                     idx.bound());
    for (std::size_t i = 0; i < p; ++i) {
      b(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = table.value(idx.at(i));
    }
  }, threads);

  SigmaMatrix out;
  out.dim = dim;
  out.level = L;
  out.mode = "oracle";
  out.rho = rho;
  out.quad_nodes = quad_per_axis;

  // first term: (rho/Mbar) Int h(t)/f(t) phi_p phi_q with h = sigma^2 + gamma(t,t)
  Eigen::VectorXd gvals(static_cast<Eigen::Index>(g));
  for (std::size_t r = 0; r < g; ++r) {
    const std::span<const double> t{grid.data() + r * static_cast<std::size_t>(dim),
                                    static_cast<std::size_t>(dim)};
    const double f = density.pdf(t);
    if (!(f > 0.0)) throw std::runtime_error("sigma_matrix: f_T <= 0 at a quadrature node");
    gvals(static_cast<Eigen::Index>(r)) = (sigma2(t) + gamma(t, t)) / f;
  }
  out.m = (rho / static_cast<double>(m_bar)) * cell *
          (b.transpose() * gvals.asDiagonal() * b);

  // second term: pair factor * Int Int gamma(t,s) phi_p(t) phi_q(s)
  if (pair_count > 0.0) {
    Eigen::MatrixXd gam(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(g));
    parallel_for(g, [&](std::size_t r) {
      const std::span<const double> t{grid.data() + r * static_cast<std::size_t>(dim),
                                      static_cast<std::size_t>(dim)};
      for (std::size_t c = 0; c < g; ++c) {
        const std::span<const double> s{grid.data() + c * static_cast<std::size_t>(dim),
                                        static_cast<std::size_t>(dim)};
        gam(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = gamma(t, s);
      }
    }, threads);
    const double factor = pair_count / (static_cast<double>(m_bar) * (static_cast<double>(m_bar) - 1.0));
    out.m += factor * cell * cell * (b.transpose() * gam * b);
  }
  // symmetrize away quadrature round-off
  out.m = 0.5 * (out.m + out.m.transpose()).eval();
  return out;
}

SigmaMatrix sigma_matrix_plugin(const FunctionalDataset& data, const DesignDensity& density,
                                int L, double rho, int quad_per_axis, int pilot_level,
                                int threads) {
  const std::size_t m_bar = data.total_obs();
  if (rho <= 0.0) rho = rho_constant(data.dim);
  if (quad_per_axis <= 0) quad_per_axis = (data.dim == 1) ? 1024 : 64;

  // pilot residuals
  const FitResult pilot = fourier_coefficients(
      data, density,
      pilot_level > 0 ? pilot_level
                      : std::max(1, static_cast<int>(std::ceil(
                            std::pow(static_cast<double>(m_bar), 1.0 / (2.0 + data.dim))))),
      {}, threads);
  const PooledDesign design = data.pooled();
  std::vector<double> resid(m_bar);
  {
    std::size_t j = 0;
    for (const auto& c : data.curves) {
      const std::size_t mi = c.count(data.dim);
      for (std::size_t m = 0; m < mi; ++m, ++j) {
        const std::span<const double> t{c.t.data() + m * static_cast<std::size_t>(data.dim),
                                        static_cast<std::size_t>(data.dim)};
        resid[j] = c.y[m] - vp_eval(pilot.model, t);
      }
    }
  }

  // local diagonal estimate h(t) = sigma^2(t) + gamma(t,t) by averaging the k
  // nearest squared residuals
  const std::size_t k = static_cast<std::size_t>(std::ceil(
      std::pow(static_cast<double>(m_bar), static_cast<double>(data.dim) / (data.dim + 2.0))));
  std::vector<std::size_t> order(m_bar);
  std::iota(order.begin(), order.end(), 0);
  ScalarField h_hat;
  if (data.dim == 1) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return design.points[a] < design.points[b];
    });
    std::vector<double> xs(m_bar), r2(m_bar);
    for (std::size_t i = 0; i < m_bar; ++i) {
      xs[i] = design.points[order[i]];
      r2[i] = resid[order[i]] * resid[order[i]];
    }
    h_hat = [xs = std::move(xs), r2 = std::move(r2), k](std::span<const double> t) {
      const double x = t[0];
      const auto it = std::lower_bound(xs.begin(), xs.end(), x);
      std::size_t c = static_cast<std::size_t>(it - xs.begin());
      // symmetric window of k points around the insertion position
      std::size_t lo = (c > k / 2) ? c - k / 2 : 0;
      if (lo + k > xs.size()) lo = (xs.size() > k) ? xs.size() - k : 0;
      const std::size_t hi = std::min(lo + k, xs.size());
      double s = 0.0;
      for (std::size_t i = lo; i < hi; ++i) s += r2[i];
      return s / static_cast<double>(hi - lo);
    };
  } else {
    // D >= 2: average the k nearest residuals by brute scan (plug-in mode is
    // quadrature-bound anyway)
    auto pts = design.points;
    const int dim = data.dim;
    auto r2 = resid;
    for (auto& v : r2) v *= v;
    h_hat = [pts = std::move(pts), r2 = std::move(r2), k, dim](std::span<const double> t) {
      const std::size_t n = r2.size();
      std::vector<std::pair<double, std::size_t>> d2(n);
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (int d = 0; d < dim; ++d) {
          const double diff = pts[j * static_cast<std::size_t>(dim) + static_cast<std::size_t>(d)] -
                              t[static_cast<std::size_t>(d)];
          s += diff * diff;
        }
        d2[j] = {s, j};
      }
      const std::size_t kk = std::min(k, n);
      std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(kk - 1), d2.end());
      double s = 0.0;
      for (std::size_t i = 0; i < kk; ++i) s += r2[d2[i].second];
      return s / static_cast<double>(kk);
    };
  }

  // first term with h_hat; no oracle gamma available
  SigmaMatrix out = sigma_matrix_oracle(
      data.dim, L, m_bar, 0.0, h_hat,
      [](std::span<const double>, std::span<const double>) { return 0.0; }, density, rho,
      quad_per_axis, threads);
  out.mode = "plugin";

  // second term: empirical within-curve residual cross moments
  // (1/sum M_i(M_i-1)) sum_i sum_{m != m'} r_im r_im' phi_p(T_im) phi_q(T_im')
  //   / (f(T_im) f(T_im'))  estimates Int Int gamma phi_p phi_q
  const double pairs = pair_count_of(data);
  if (pairs > 0.0) {
    const IndexSet idx(data.dim, 4 * L - 2);
    const std::size_t p = idx.size();
    Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p),
                                                  static_cast<Eigen::Index>(p));
    std::size_t j = 0;
    for (const auto& c : data.curves) {
      const std::size_t mi = c.count(data.dim);
      if (mi >= 2) {
        Eigen::MatrixXd phis(static_cast<Eigen::Index>(mi), static_cast<Eigen::Index>(p));
        Eigen::VectorXd rv(static_cast<Eigen::Index>(mi));
        for (std::size_t m = 0; m < mi; ++m) {
          const std::span<const double> t{c.t.data() + m * static_cast<std::size_t>(data.dim),
                                          static_cast<std::size_t>(data.dim)};
          BasisTable table(t, idx.bound());
          const double f = density.pdf(t);
          rv(static_cast<Eigen::Index>(m)) = resid[j + m] / f;
          for (std::size_t i = 0; i < p; ++i) {
            phis(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) = table.value(idx.at(i));
          }
        }
        const Eigen::VectorXd a = phis.transpose() * rv;           // sum_m r phi
        const Eigen::MatrixXd diag = phis.transpose() *
            rv.cwiseProduct(rv).asDiagonal() * phis;               // sum_m r^2 phi phi'
        cross += a * a.transpose() - diag;                         // off-diagonal pairs
      }
      j += mi;
    }
    const double m_bar_d = static_cast<double>(m_bar);
    out.m += (1.0 / pairs) * cross * (pairs / (m_bar_d * (m_bar_d - 1.0)));
    out.m = 0.5 * (out.m + out.m.transpose()).eval();
  }
  return out;
}

PointwiseInterval pointwise_interval(const FourierModel& model, const SigmaMatrix& sigma,
                                     std::span<const double> t, double level) {
  if (!(level >= 0.0 && level < 1.0)) throw std::invalid_argument("pointwise_interval: level in [0,1)");
  const std::vector<double> phi = phi_vector(model.dim, model.level, t);
  if (static_cast<Eigen::Index>(phi.size()) != sigma.m.rows()) {
    throw std::invalid_argument("pointwise_interval: Sigma and Phi_L not conformable");
  }
  Eigen::Map<const Eigen::VectorXd> ph(phi.data(), static_cast<Eigen::Index>(phi.size()));
  const double v = ph.dot(sigma.m * ph);
  if (v < -1e-10) throw std::runtime_error("pointwise_interval: negative variance (numerical failure)");
  const double vc = std::max(0.0, v);
  const double z = (level <= 0.0) ? 0.0 : normal_quantile(0.5 + level / 2.0);
  const double c = vp_eval(model, t);
  const double hw = z * std::sqrt(vc);
  return {c - hw, c + hw, vc};
}

BandResult uniform_band_gaussian(const FourierModel& model, const SigmaMatrix& sigma,
                                 const Rates& rate, double level, int grid_per_axis,
                                 int n_draws, std::uint64_t seed, int threads) {
  if (grid_per_axis <= 0) grid_per_axis = (model.dim == 1) ? 512 : 64;
  if (n_draws <= 0) n_draws = 2000;
  BandResult out;
  out.method = "gaussian";
  out.level = level;
  out.seed = seed;
  out.r1 = rate.r1;
  out.r2 = rate.r2;

  out.grid = midpoint_grid(model.dim, grid_per_axis);
  const Eigen::MatrixXd phig = phi_on_grid(model.dim, model.level, out.grid);
  const std::size_t g = static_cast<std::size_t>(phig.rows());

  const Eigen::MatrixXd root = symmetric_sqrt(sigma.m, out.clip_magnitude);
  const Eigen::Index p = root.rows();

  std::vector<double> sups(static_cast<std::size_t>(n_draws));
  std::vector<double> sups_coarse(static_cast<std::size_t>(n_draws));
  parallel_for(static_cast<std::size_t>(n_draws), [&](std::size_t d) {
    Rng rng(derive_seed(seed, Stream::gaussian_draws, d));
    Eigen::VectorXd z(p);
    for (Eigen::Index i = 0; i < p; ++i) z(i) = rng.normal();
    const Eigen::VectorXd field = phig * (root * z);
    sups[d] = field.cwiseAbs().maxCoeff();
    // refinement diagnostic: the same supremum on every second grid point
    double coarse = 0.0;
    for (Eigen::Index i = 0; i < field.size(); i += 2) {
      coarse = std::max(coarse, std::fabs(field(i)));
    }
    sups_coarse[d] = coarse;
  }, threads);
  out.critical = empirical_quantile(sups, level);
  out.critical_coarse = empirical_quantile(sups_coarse, level);
  out.half_width = out.critical;

  out.center.resize(g);
  out.lower.resize(g);
  out.upper.resize(g);
  Eigen::Map<const Eigen::VectorXd> coef(model.coefficients.data(),
                                         static_cast<Eigen::Index>(model.coefficients.size()));
  // phig entries carry the VP shell weights, so phig * a is V-hat_L on the grid
  const Eigen::VectorXd center = phig * coef;
  for (std::size_t i = 0; i < g; ++i) {
    out.center[i] = center(static_cast<Eigen::Index>(i));
    out.lower[i] = out.center[i] - out.half_width;
    out.upper[i] = out.center[i] + out.half_width;
  }
  return out;
}

double VarthetaMode::eval(std::size_t subset_size, bool dense) const {
  switch (kind) {
    case Kind::auto_select:
      return dense ? 1.0 : std::max(1.0, std::log(std::log(static_cast<double>(subset_size))));
    case Kind::one:
      return 1.0;
    case Kind::loglog:
      return std::max(1.0, std::log(std::log(static_cast<double>(subset_size))));
    case Kind::constant:
      return std::max(1.0, value);
  }
  return 1.0;
}

VarthetaMode VarthetaMode::from_string(const std::string& s, double value) {
  VarthetaMode m;
  if (s == "auto") m.kind = Kind::auto_select;
  else if (s == "one") m.kind = Kind::one;
  else if (s == "loglog") m.kind = Kind::loglog;
  else if (s == "const") { m.kind = Kind::constant; m.value = value; }
  else throw std::invalid_argument("vartheta mode must be auto|one|loglog|const");
  return m;
}

std::string VarthetaMode::to_string() const {
  switch (kind) {
    case Kind::auto_select: return "auto";
    case Kind::one: return "one";
    case Kind::loglog: return "loglog";
    case Kind::constant: return "const";
  }
  return "auto";
}

namespace {

// tau_A = min(vartheta |A|^{alpha/(2 alpha + D)}, |A| / sqrt(sum_i cnt_i (cnt_i - 1)))
double tau_of(std::size_t size, double pair_sum, double alpha, int dim, double vartheta) {
  const double first = vartheta * std::pow(static_cast<double>(size),
                                           alpha / (2.0 * alpha + dim));
  const double second = pair_sum > 0.0
      ? static_cast<double>(size) / std::sqrt(pair_sum)
      : std::numeric_limits<double>::infinity();
  return std::min(first, second);
}

FunctionalDataset subset_dataset(const FunctionalDataset& data,
                                 const std::vector<std::size_t>& flat_ids) {
  // flat observation index -> (curve, within)
  FunctionalDataset out;
  out.dim = data.dim;
  out.seed = data.seed;
  std::vector<std::size_t> first_of(data.curves.size() + 1, 0);
  for (std::size_t i = 0; i < data.curves.size(); ++i) {
    first_of[i + 1] = first_of[i] + data.curves[i].count(data.dim);
  }
  std::vector<std::vector<std::size_t>> per_curve(data.curves.size());
  for (std::size_t id : flat_ids) {
    const std::size_t i = static_cast<std::size_t>(
        std::upper_bound(first_of.begin(), first_of.end(), id) - first_of.begin() - 1);
    per_curve[i].push_back(id - first_of[i]);
  }
  for (std::size_t i = 0; i < per_curve.size(); ++i) {
    if (per_curve[i].empty()) continue;
    std::sort(per_curve[i].begin(), per_curve[i].end());
    Curve c;
    for (std::size_t m : per_curve[i]) {
      for (int d = 0; d < data.dim; ++d) {
        c.t.push_back(data.curves[i].t[m * static_cast<std::size_t>(data.dim) + static_cast<std::size_t>(d)]);
      }
      c.y.push_back(data.curves[i].y[m]);
    }
    out.curves.push_back(std::move(c));
  }
  return out;
}

}  // namespace

BandResult subsampling_bands(const FunctionalDataset& data, const DesignDensity& density,
                             const SubsamplingConfig& config) {
  const std::size_t m_bar = data.total_obs();
  if (m_bar < 8) throw std::invalid_argument("subsampling_bands: Mbar >= 8 required");
  const double rho = config.rho > 0.0 ? config.rho : rho_constant(data.dim);
  const int grid_res = config.grid_per_axis > 0 ? config.grid_per_axis
                                                : (data.dim == 1 ? 256 : 32);
  const int n_subsets = config.n_subsets > 0 ? config.n_subsets
                                             : 2 * static_cast<int>(data.curves.size());
  const double full_pairs = pair_count_of(data);

  const int l_full = optimal_L(config.alpha_mu, config.c_vp, config.k1, data.dim, m_bar, rho);
  int l_sub = optimal_L(config.alpha_mu, config.c_vp, config.k1, data.dim, m_bar / 2, rho);
  BandResult out;
  out.method = "subsampling";
  out.level = config.level;
  out.seed = config.seed;
  if (l_sub < 1) { l_sub = 1; out.flags.push_back("subset-L-clamped"); }

  const Rates full_rates = rates(data, l_full);
  out.r1 = full_rates.r1;
  out.r2 = full_rates.r2;
  const bool dense = full_rates.r2 < full_rates.r1;
  const double vt_full = config.vartheta.eval(m_bar, dense);
  const double tau_full = tau_of(m_bar, full_pairs, config.alpha_mu, data.dim, vt_full);
  out.tau_full = tau_full;

  WeightConfig wf = config.weights;
  wf.seed = derive_seed(config.seed, Stream::subsample, 0);
  const FitResult full_fit = fourier_coefficients(data, density, l_full, wf, config.threads);
  out.grid = midpoint_grid(data.dim, grid_res);
  const Eigen::MatrixXd phig_full = phi_on_grid(data.dim, l_full, out.grid);
  Eigen::Map<const Eigen::VectorXd> coef_full(full_fit.model.coefficients.data(),
                                              static_cast<Eigen::Index>(full_fit.model.coefficients.size()));
  const Eigen::VectorXd center = phig_full * coef_full;
  const std::size_t g = static_cast<std::size_t>(center.size());

  // subset refits
  const std::size_t half = m_bar / 2;
  Eigen::MatrixXd deltas(static_cast<Eigen::Index>(n_subsets), static_cast<Eigen::Index>(g));
  std::vector<double> sups(static_cast<std::size_t>(n_subsets));
  const Eigen::MatrixXd phig_sub = phi_on_grid(data.dim, l_sub, out.grid);

  // flat index ranges per curve for whole-curve mode
  std::vector<std::size_t> first_of(data.curves.size() + 1, 0);
  for (std::size_t i = 0; i < data.curves.size(); ++i) {
    first_of[i + 1] = first_of[i] + data.curves[i].count(data.dim);
  }

  parallel_for(static_cast<std::size_t>(n_subsets), [&](std::size_t s) {
    Rng rng(derive_seed(config.seed, Stream::subsample, s + 1));
    std::vector<std::size_t> ids;
    if (config.whole_curves) {
      // add whole curves in random order until >= half observations
      std::vector<std::size_t> perm;
      rng.sample_without_replacement<std::size_t>(data.curves.size(), data.curves.size(), perm);
      for (std::size_t i : perm) {
        if (ids.size() >= half) break;
        for (std::size_t m = first_of[i]; m < first_of[i + 1]; ++m) ids.push_back(m);
      }
    } else {
      rng.sample_without_replacement<std::size_t>(m_bar, half, ids);
    }
    FunctionalDataset sub = subset_dataset(data, ids);
    const double sub_pairs = pair_count_of(sub);
    const std::size_t sub_size = sub.total_obs();
    const double vt = config.vartheta.eval(sub_size, dense);
    const double tau_a = tau_of(sub_size, sub_pairs, config.alpha_mu, data.dim, vt);

    WeightConfig ws = config.weights;
    ws.seed = derive_seed(config.seed, Stream::mc_volumes, s + 1);
    const FitResult fit = fourier_coefficients(sub, density, l_sub, ws, 1);
    Eigen::Map<const Eigen::VectorXd> coef(fit.model.coefficients.data(),
                                           static_cast<Eigen::Index>(fit.model.coefficients.size()));
    const Eigen::VectorXd est = phig_sub * coef;
    double sup = 0.0;
    for (std::size_t r = 0; r < g; ++r) {
      const double d = tau_a * (est(static_cast<Eigen::Index>(r)) - center(static_cast<Eigen::Index>(r)));
      deltas(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(r)) = d;
      sup = std::max(sup, std::fabs(d));
    }
    sups[s] = sup;
  }, config.threads);

  // uniform band: mu-hat -/+ c_inf(1-alpha)/tau_full
  out.critical = empirical_quantile(sups, config.level);
  out.half_width = out.critical / tau_full;
  out.center.resize(g);
  out.lower.resize(g);
  out.upper.resize(g);
  out.ci_lower.resize(g);
  out.ci_upper.resize(g);
  const double a2 = (1.0 - config.level) / 2.0;
  std::vector<double> col(static_cast<std::size_t>(n_subsets));
  for (std::size_t r = 0; r < g; ++r) {
    out.center[r] = center(static_cast<Eigen::Index>(r));
    out.lower[r] = out.center[r] - out.half_width;
    out.upper[r] = out.center[r] + out.half_width;
    for (int s = 0; s < n_subsets; ++s) {
      col[static_cast<std::size_t>(s)] = deltas(s, static_cast<Eigen::Index>(r));
    }
    // CI(t) = [mu* - c(t, 1-a/2)/tau, mu* - c(t, a/2)/tau]
    out.ci_lower[r] = out.center[r] - empirical_quantile(col, 1.0 - a2) / tau_full;
    out.ci_upper[r] = out.center[r] - empirical_quantile(col, a2) / tau_full;
  }
  return out;
}

}  // namespace fdavp
