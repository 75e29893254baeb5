#include <doctest.h>

#include <cmath>

#include "fdavp/estimate.hpp"
#include "fdavp/parallel.hpp"

using namespace fdavp;

namespace {

FunctionalDataset quick_data(int n_curves, int m_per, const MeanSpec& mean,
                             const CovarianceSpec& cov, const NoiseSpec& noise,
                             std::uint64_t seed) {
  SimConfig cfg;
  cfg.dim = 1;
  cfg.n_curves = n_curves;
  cfg.counts = CountLaw::fixed(m_per);
  cfg.mean = mean;
  cfg.cov = cov;
  cfg.noise = noise;
  cfg.seed = seed;
  cfg.truth_channel = false;
  cfg.threads = 1;
  return simulate(cfg);
}

}  // namespace

TEST_CASE("fourier_coefficients: exactness for a constant mean") {
  const auto data = quick_data(10, 5, MeanSpec::trig({{std::vector<int>{0}, 2.5}}),
                               CovarianceSpec::zero(), NoiseSpec::none(), 41);
  const auto fit = fourier_coefficients(data, DesignDensity::uniform(1), 2);
  CHECK(fit.model.coefficient(std::vector<int>{0}) == doctest::Approx(2.5).epsilon(1e-10));
}

TEST_CASE("fourier_coefficients: unbiasedness screen") {
  // mu = phi_1, noiseless, cov zero: mean(a1-hat) = 1 and mean(a2-hat) = 0
  const int reps = 300;
  std::vector<double> a1(reps), a2(reps);
  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
    const auto data = quick_data(100, 5, MeanSpec::trig({{std::vector<int>{1}, 1.0}}),
                                 CovarianceSpec::zero(), NoiseSpec::none(),
                                 derive_seed(42, Stream::replication, r));
    const auto fit = fourier_coefficients(data, DesignDensity::uniform(1), 2, {}, 1);
    a1[r] = fit.model.coefficient(std::vector<int>{1});
    a2[r] = fit.model.coefficient(std::vector<int>{2});
  });
  auto mean_se = [&](const std::vector<double>& v) {
    double m = 0.0, s2 = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double x : v) s2 += (x - m) * (x - m);
    return std::pair<double, double>(m, std::sqrt(s2 / (v.size() - 1.0) / v.size()));
  };
  const auto [m1, se1] = mean_se(a1);
  const auto [m2, se2] = mean_se(a2);
  CHECK(std::fabs(m1 - 1.0) <= 3.0 * se1);
  CHECK(std::fabs(m2) <= 3.0 * se2);
}

TEST_CASE("fourier_coefficients: rejects a vanishing density") {
  const auto data = quick_data(5, 4, MeanSpec::zero(), CovarianceSpec::zero(),
                               NoiseSpec::none(), 43);
  DesignDensity bad = DesignDensity::uniform(1);
  bad.pdf = [](std::span<const double> t) { return t[0] > 0.5 ? 0.0 : 2.0; };
  CHECK_THROWS(fourier_coefficients(data, bad, 1));
}

TEST_CASE("mean_estimator reproduces trig polynomials") {
  const auto mean = MeanSpec::trig({{std::vector<int>{0}, 1.0},
                                    {std::vector<int>{1}, 0.5},
                                    {std::vector<int>{4}, -0.7}});
  FourierModel model(1, 2);
  model.set_coefficient(std::vector<int>{0}, 1.0);
  model.set_coefficient(std::vector<int>{1}, 0.5);
  model.set_coefficient(std::vector<int>{4}, -0.7);
  const auto est = mean_estimator(model);
  for (int g = 0; g <= 100; ++g) {
    const std::vector<double> t{g / 100.0};
    CHECK(est(t) == doctest::Approx(mean.eval(t)).epsilon(1e-12));
  }
}

TEST_CASE("optimal_L formula") {
  // D=1, alpha=1, Cvp=1, K1=1, Mbar=1000: C* = (4/15)^{1/3}, L* = 6
  CHECK(optimal_L(1.0, 1.0, 1.0, 1, 1000) == 6);
  // power law: scaling Mbar by 2^{2a+D} doubles L* (+/- 1 from flooring)
  const int base = optimal_L(1.0, 1.0, 1.0, 1, 1000);
  const int doubled = optimal_L(1.0, 1.0, 1.0, 1, 8000);
  CHECK(std::abs(doubled - 2 * base) <= 1);
  // enormous K1 clamps at 1
  CHECK(optimal_L(1.0, 1.0, 1e12, 1, 1000) == 1);
  CHECK_THROWS(optimal_L(-1.0, 1.0, 1.0, 1, 1000));
}

TEST_CASE("rho: closed form for D=1 and MC calibration") {
  CHECK(rho_constant(1) == 2.5);
  const double est = calibrate_rho(1, 200, 400, 55);
  CHECK(est == doctest::Approx(2.5).epsilon(0.06));
}

TEST_CASE("estimate_k1 plug-in") {
  // white noise around a constant: K1 = sigma^2 = 1
  {
    const auto data = quick_data(100, 100, MeanSpec::zero(), CovarianceSpec::zero(),
                                 NoiseSpec::gaussian_const(1.0), 56);
    const double k1 = estimate_k1(data, DesignDensity::uniform(1));
    CHECK(k1 == doctest::Approx(1.0).epsilon(0.05));
  }
  // noiseless smooth mean recovered exactly: K1-hat -> 0
  {
    const auto data = quick_data(50, 40, MeanSpec::trig({{std::vector<int>{2}, 1.0}}),
                                 CovarianceSpec::zero(), NoiseSpec::none(), 57);
    CHECK(estimate_k1(data, DesignDensity::uniform(1)) < 1e-3);
  }
  // fbm(0.5) + sigma^2 = 0.25: K1 = int (0.25 + t) dt = 0.75, mean over reps
  {
    const int reps = 50;
    std::vector<double> vals(reps);
    parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
      const auto data = quick_data(100, 100, MeanSpec::zero(), CovarianceSpec::fbm(0.5),
                                   NoiseSpec::gaussian_const(0.5),
                                   derive_seed(58, Stream::replication, r));
      vals[r] = estimate_k1(data, DesignDensity::uniform(1));
    });
    double m = 0.0;
    for (double v : vals) m += v;
    m /= reps;
    CHECK(std::fabs(m - 0.75) < 0.08);
  }
}

TEST_CASE("regime report") {
  const auto sparse = quick_data(64, 1, MeanSpec::zero(), CovarianceSpec::zero(),
                                 NoiseSpec::none(), 59);
  const auto rs = regime(sparse, 1.0);
  CHECK(rs.dense_term == 0.0);
  CHECK(rs.label == "sparse");

  const auto dense = quick_data(10, 1000, MeanSpec::zero(), CovarianceSpec::zero(),
                                NoiseSpec::none(), 60);
  const auto rd = regime(dense, 1.0);
  CHECK(rd.dense_term == doctest::Approx(10.0 * 1000.0 * 999.0 / (10000.0 * 9999.0)).epsilon(1e-12));
  CHECK(rd.sparse_term == doctest::Approx(std::pow(10000.0, -2.0 / 3.0)).epsilon(1e-12));
  CHECK(rd.label == "dense");

  // boundary when the two terms are within a factor 2: dense term here is
  // 40*20/(200*199) = 0.0201 and 200^{-2a/(2a+1)} = 0.020 at a = 1.4
  const auto probe = quick_data(40, 5, MeanSpec::zero(), CovarianceSpec::zero(),
                                NoiseSpec::none(), 61);
  CHECK(regime(probe, 1.4).label == "boundary");
}

TEST_CASE("vp estimator beats the raw partial sum head-to-head") {
  // weierstrass(0.7) dense data; at L = 3 the VP window keeps the k = 8
  // frequency (damped) that S_3 truncates away
  const int reps = 100;
  std::vector<int> wins(reps, 0);
  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
    const auto mean = MeanSpec::weier(0.7, 12, 1.0);
    const auto data = quick_data(200, 50, mean, CovarianceSpec::fbm(0.5),
                                 NoiseSpec::gaussian_const(0.5),
                                 derive_seed(62, Stream::replication, r));
    const auto fit = fourier_coefficients(data, DesignDensity::uniform(1), 3, {}, 1);
    auto mu = [&](std::span<const double> t) { return mean.eval(t); };
    const double vp_err = empirical_l2_error(
        [&](std::span<const double> t) { return vp_eval(fit.model, t); }, mu, 1);
    const double sl_err = empirical_l2_error(
        [&](std::span<const double> t) {
          return partial_sum_eval(fit.model.indices, fit.model.coefficients, 3, t);
        },
        mu, 1);
    wins[r] = vp_err < sl_err ? 1 : 0;
  });
  int total = 0;
  for (int w : wins) total += w;
  CHECK(total >= 70);
}

TEST_CASE("risk decomposition sanity") {
  // cov = 0, sigma = 0: risk equals squared VP bias plus coefficient noise,
  // and shrinks as the noise vanishes
  const auto mean = MeanSpec::weier(0.7, 12, 1.0);
  auto mu = [&](std::span<const double> t) { return mean.eval(t); };
  double risk_noisy = 0.0, risk_clean = 0.0;
  for (int r = 0; r < 10; ++r) {
    const auto seed = derive_seed(63, Stream::replication, static_cast<std::uint64_t>(r));
    const auto clean = quick_data(100, 20, mean, CovarianceSpec::zero(), NoiseSpec::none(), seed);
    const auto noisy = quick_data(100, 20, mean, CovarianceSpec::zero(),
                                  NoiseSpec::gaussian_const(1.0), seed);
    const auto fc = fourier_coefficients(clean, DesignDensity::uniform(1), 4, {}, 1);
    const auto fn = fourier_coefficients(noisy, DesignDensity::uniform(1), 4, {}, 1);
    risk_clean += empirical_l2_error(
        [&](std::span<const double> t) { return vp_eval(fc.model, t); }, mu, 1);
    risk_noisy += empirical_l2_error(
        [&](std::span<const double> t) { return vp_eval(fn.model, t); }, mu, 1);
  }
  CHECK(risk_clean < risk_noisy);
  // clean risk is bias-dominated: compare against the exact-coefficient bias
  FourierModel exact(1, 4);
  for (int j = 1; j <= 12; ++j) {
    const int k = 2 << j;
    if (k <= 14) exact.set_coefficient(std::vector<int>{k}, std::pow(2.0, -j * 0.7) / std::sqrt(2.0));
  }
  const double bias2 = empirical_l2_error(
      [&](std::span<const double> t) { return vp_eval(exact, t); }, mu, 1);
  CHECK(risk_clean / 10.0 < 4.0 * bias2 + 0.01);
}
