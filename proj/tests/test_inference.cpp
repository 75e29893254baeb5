#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "fdavp/inference.hpp"
#include "fdavp/parallel.hpp"

using namespace fdavp;

namespace {

ScalarField constant_field(double v) {
  return [v](std::span<const double>) { return v; };
}

Kernel zero_kernel() {
  return [](std::span<const double>, std::span<const double>) { return 0.0; };
}

Kernel fbm_kernel(double h) {
  const CovarianceSpec cov = CovarianceSpec::fbm(h);
  return [cov](std::span<const double> s, std::span<const double> t) { return cov.eval(s, t); };
}

FunctionalDataset dense_dataset(int n_curves, int m_per, std::uint64_t seed,
                                double mean_shift = 0.0) {
  SimConfig cfg;
  cfg.dim = 1;
  cfg.n_curves = n_curves;
  cfg.counts = CountLaw::fixed(m_per);
  cfg.mean = MeanSpec::trig({{std::vector<int>{0}, 1.0 + mean_shift},
                             {std::vector<int>{1}, 0.5},
                             {std::vector<int>{4}, 0.3}});
  cfg.cov = CovarianceSpec::fbm(0.5);
  cfg.noise = NoiseSpec::gaussian_const(0.5);
  cfg.seed = seed;
  cfg.truth_channel = false;
  cfg.threads = 1;
  return simulate(cfg);
}

}  // namespace

TEST_CASE("rates") {
  SimConfig cfg;
  cfg.dim = 1;
  cfg.n_curves = 100;
  cfg.counts = CountLaw::fixed(10);
  cfg.seed = 70;
  cfg.truth_channel = false;
  const auto data = simulate(cfg);
  const auto r = rates(data, 6);
  CHECK(r.r1 == doctest::Approx(std::sqrt(1000.0 / 6.0)).epsilon(1e-12));
  CHECK(r.r2 == doctest::Approx(1000.0 / std::sqrt(9000.0)).epsilon(1e-12));

  cfg.counts = CountLaw::fixed(1);
  cfg.n_curves = 1000;
  const auto singles = simulate(cfg);
  const auto rs = rates(singles, 6);
  CHECK(std::isinf(rs.r2));
  CHECK(rs.used() == rs.r1);
}

TEST_CASE("normal quantile") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963985).epsilon(1e-8));
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK(normal_quantile(0.00001) == doctest::Approx(-4.264890794).epsilon(1e-6));
}

TEST_CASE("sigma oracle: orthonormality, zero pairs, fbm double integral") {
  const auto uni = DesignDensity::uniform(1);
  // constant sigma^2 + gamma = v, no pair term: Sigma = (rho v / Mbar) I
  {
    const double v = 0.8;
    const std::size_t m_bar = 500;
    const auto s = sigma_matrix_oracle(1, 2, m_bar, 0.0, constant_field(v), zero_kernel(), uni);
    const double scale = 2.5 * v / static_cast<double>(m_bar);
    for (Eigen::Index i = 0; i < s.m.rows(); ++i) {
      for (Eigen::Index j = 0; j < s.m.cols(); ++j) {
        CHECK(std::fabs(s.m(i, j) - (i == j ? scale : 0.0)) < 1e-6 * scale + 1e-15);
      }
    }
  }
  // fbm(0.5): the (0,0) pair factor carries Int Int gamma = 1/3
  {
    const std::size_t m_bar = 1000;
    const double pairs = 200.0;
    const auto base = sigma_matrix_oracle(1, 2, m_bar, 0.0, constant_field(0.0),
                                          fbm_kernel(0.5), uni, 0.0, 2048);
    const auto full = sigma_matrix_oracle(1, 2, m_bar, pairs, constant_field(0.0),
                                          fbm_kernel(0.5), uni, 0.0, 2048);
    const double factor = pairs / (1000.0 * 999.0);
    const double entry = (full.m(0, 0) - base.m(0, 0)) / factor;
    CHECK(entry == doctest::Approx(1.0 / 3.0).epsilon(3e-4));
  }
  // symmetry and PSD after clipping on a composite instance
  {
    const auto s = sigma_matrix_oracle(1, 3, 800, 100.0,
                                       [](std::span<const double> t) { return 0.25 + t[0]; },
                                       fbm_kernel(0.4), uni);
    CHECK((s.m - s.m.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.m);
    CHECK(es.eigenvalues().minCoeff() > -1e-8);
  }
}

TEST_CASE("pointwise interval") {
  FourierModel model(1, 2);
  model.set_coefficient(std::vector<int>{0}, 1.0);
  const auto uni = DesignDensity::uniform(1);
  const auto sigma = sigma_matrix_oracle(1, 2, 400, 0.0, constant_field(0.5), zero_kernel(), uni);

  const std::vector<double> t{0.4};
  // level 0 collapses to the point estimate
  const auto zero = pointwise_interval(model, sigma, t, 0.0);
  CHECK(zero.lower == zero.upper);
  CHECK(zero.lower == doctest::Approx(vp_eval(model, t)));

  // Sigma = c I: v(t) = c ||Phi_L(t)||^2
  const auto iv = pointwise_interval(model, sigma, t, 0.95);
  const auto phi = phi_vector(1, 2, t);
  double norm2 = 0.0;
  for (double p : phi) norm2 += p * p;
  const double c = sigma.m(0, 0);
  CHECK(iv.variance == doctest::Approx(c * norm2).epsilon(1e-6));
  CHECK(iv.upper - iv.lower ==
        doctest::Approx(2.0 * normal_quantile(0.975) * std::sqrt(iv.variance)).epsilon(1e-10));

  // conformability guard
  const auto sigma_l3 = sigma_matrix_oracle(1, 3, 400, 0.0, constant_field(0.5), zero_kernel(), uni);
  CHECK_THROWS(pointwise_interval(model, sigma_l3, t, 0.95));
}

TEST_CASE("quadratic form via the symmetric root matches Phi' Sigma Phi") {
  const auto uni = DesignDensity::uniform(1);
  const auto sigma = sigma_matrix_oracle(1, 3, 600, 150.0,
                                         [](std::span<const double> t) { return 0.3 + 0.2 * t[0]; },
                                         fbm_kernel(0.5), uni);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma.m);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd root = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
                               es.eigenvectors().transpose();
  Rng rng(71);
  for (int r = 0; r < 20; ++r) {
    const std::vector<double> t{rng.uniform()};
    const auto phi = phi_vector(1, 3, t);
    Eigen::Map<const Eigen::VectorXd> ph(phi.data(), static_cast<Eigen::Index>(phi.size()));
    const double direct = ph.dot(sigma.m * ph);
    const double via_root = (root * ph).squaredNorm();
    CHECK(std::fabs(direct - via_root) < 1e-8 * std::max(1.0, std::fabs(direct)));
  }
}

TEST_CASE("variance regime split against the limit law") {
  const auto uni = DesignDensity::uniform(1);
  // sparse branch: M_i = 1; r1^2 v(t) within 15% of rho * 3 * (sigma^2+gamma)/f
  {
    const std::size_t m_bar = 4000;
    auto g = [](std::span<const double> t) { return 1.0 + 0.2 * t[0]; };
    for (int L : {8, 16, 32}) {
      const auto sigma = sigma_matrix_oracle(1, L, m_bar, 0.0, g, zero_kernel(), uni);
      const double r1_sq = static_cast<double>(m_bar) / L;
      for (int i = 1; i <= 10; ++i) {
        const std::vector<double> t{0.08 + 0.84 * (i - 1) / 9.0};
        const auto phi = phi_vector(1, L, t);
        Eigen::Map<const Eigen::VectorXd> ph(phi.data(), static_cast<Eigen::Index>(phi.size()));
        const double v = ph.dot(sigma.m * ph);
        const double target = 2.5 * 3.0 * g(t);
        CHECK(r1_sq * v / target > 0.85);
        CHECK(r1_sq * v / target < 1.15);
      }
    }
  }
  // dense branch: N fixed, M_i large; r2^2 v(t) within 15% of gamma(t,t)
  {
    const std::size_t m_bar = 10000;
    const double pairs = 5.0 * 2000.0 * 1999.0;
    const double r2_sq = static_cast<double>(m_bar) * m_bar / pairs;
    for (int L : {8, 16}) {
      const auto sigma = sigma_matrix_oracle(1, L, m_bar, pairs, constant_field(0.25),
                                             fbm_kernel(0.5), uni);
      for (double t0 : {0.3, 0.5, 0.7}) {
        const std::vector<double> t{t0};
        const auto phi = phi_vector(1, L, t);
        Eigen::Map<const Eigen::VectorXd> ph(phi.data(), static_cast<Eigen::Index>(phi.size()));
        const double v = ph.dot(sigma.m * ph);
        CHECK(r2_sq * v / t0 > 0.85);
        CHECK(r2_sq * v / t0 < 1.15);
      }
    }
  }
}

TEST_CASE("gaussian band: degenerate Sigma, domination, pivotality") {
  const auto uni = DesignDensity::uniform(1);
  FourierModel model(1, 2);
  model.set_coefficient(std::vector<int>{0}, 2.0);
  const auto data = dense_dataset(50, 10, 72);
  const auto rate = rates(data, 2);

  // Sigma = 0 -> zero-width band
  const auto zero = sigma_matrix_oracle(1, 2, 500, 0.0, constant_field(0.0), zero_kernel(), uni);
  const auto bz = uniform_band_gaussian(model, zero, rate, 0.95, 128, 200, 5);
  CHECK(bz.half_width == doctest::Approx(0.0));

  const auto sigma = sigma_matrix_oracle(1, 2, 500, 0.0, constant_field(0.5), zero_kernel(), uni);
  const auto band = uniform_band_gaussian(model, sigma, rate, 0.95, 128, 500, 5);
  // band half-width dominates the pointwise half-width at the same level
  for (int i = 0; i < 128; i += 17) {
    const std::vector<double> t{band.grid[static_cast<std::size_t>(i)]};
    const auto iv = pointwise_interval(model, sigma, t, 0.95);
    CHECK(band.half_width >= 0.5 * (iv.upper - iv.lower) - 1e-12);
    CHECK(band.lower[static_cast<std::size_t>(i)] <= band.center[static_cast<std::size_t>(i)]);
    CHECK(band.center[static_cast<std::size_t>(i)] <= band.upper[static_cast<std::size_t>(i)]);
  }

  // critical value ignores the mean: shift the model by +5, same seed
  FourierModel shifted = model;
  shifted.set_coefficient(std::vector<int>{0}, 7.0);
  const auto band2 = uniform_band_gaussian(shifted, sigma, rate, 0.95, 128, 500, 5);
  CHECK(band2.critical == band.critical);
  CHECK(band2.center[0] == doctest::Approx(band.center[0] + 5.0).epsilon(1e-12));
}

TEST_CASE("subsampling: degenerate single subset and quantile monotonicity") {
  const auto uni = DesignDensity::uniform(1);
  const auto data = dense_dataset(40, 10, 73);
  SubsamplingConfig cfg;
  cfg.alpha_mu = 1.0;
  cfg.k1 = 0.75;
  cfg.level = 0.5;
  cfg.n_subsets = 1;
  cfg.seed = 99;
  cfg.grid_per_axis = 64;
  cfg.threads = 1;
  const auto one = subsampling_bands(data, uni, cfg);
  // with a single subset every quantile equals the single normalized sup
  CHECK(one.half_width == doctest::Approx(one.critical / one.tau_full));
  CHECK(one.critical > 0.0);

  cfg.n_subsets = 40;
  cfg.level = 0.5;
  const auto lo = subsampling_bands(data, uni, cfg);
  cfg.level = 0.95;
  const auto hi = subsampling_bands(data, uni, cfg);
  CHECK(hi.half_width >= lo.half_width);  // empirical CDF is nondecreasing
  for (std::size_t i = 0; i < hi.center.size(); i += 13) {
    CHECK(hi.ci_lower[i] <= hi.ci_upper[i]);
  }
}

TEST_CASE("gaussian and subsampling critical values agree in the dense regime") {
  const auto uni = DesignDensity::uniform(1);
  const auto data = dense_dataset(100, 40, 74);
  const int L = optimal_L(1.0, 1.0, 0.75, 1, data.total_obs());
  const auto fit = fourier_coefficients(data, uni, L, {}, 0);
  const auto sigma = sigma_matrix_oracle(
      1, L, data.total_obs(), 100.0 * 40.0 * 39.0, constant_field(0.25), fbm_kernel(0.5), uni);
  const auto gband = uniform_band_gaussian(fit.model, sigma, rates(data, L), 0.95, 256, 2000, 7);

  SubsamplingConfig cfg;
  cfg.alpha_mu = 1.0;
  cfg.k1 = 0.75;
  cfg.level = 0.95;
  cfg.n_subsets = 400;
  cfg.seed = 7;
  cfg.grid_per_axis = 256;
  const auto sband = subsampling_bands(data, uni, cfg);
  const double rel = std::fabs(sband.half_width - gband.half_width) / gband.half_width;
  CHECK(rel < 0.25);
}

TEST_CASE("plug-in sigma tracks the oracle diagonal") {
  const auto uni = DesignDensity::uniform(1);
  const auto data = dense_dataset(150, 30, 75);
  const int L = 4;
  const auto oracle = sigma_matrix_oracle(
      1, L, data.total_obs(), 150.0 * 30.0 * 29.0, constant_field(0.25), fbm_kernel(0.5), uni);
  const auto plugin = sigma_matrix_plugin(data, uni, L);
  CHECK(plugin.mode == "plugin");
  const std::vector<double> t{0.5};
  const auto phi = phi_vector(1, L, t);
  Eigen::Map<const Eigen::VectorXd> ph(phi.data(), static_cast<Eigen::Index>(phi.size()));
  const double vo = ph.dot(oracle.m * ph);
  const double vp = ph.dot(plugin.m * ph);
  CHECK(vp / vo > 0.6);
  CHECK(vp / vo < 1.6);
}
