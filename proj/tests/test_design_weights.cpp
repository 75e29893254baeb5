#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fdavp/design_weights.hpp"
#include "fdavp/parallel.hpp"

using namespace fdavp;

namespace {

// brute-force oracle for degrees: O(n^2) scan with the same tie rule
std::vector<int> degrees_brute(const PooledDesign& d) {
  const std::size_t n = d.size();
  std::vector<int> deg(n, 0);
  for (std::size_t l = 0; l < n; ++l) {
    double best = 1e300;
    std::size_t best_j = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == l) continue;
      double s = 0.0;
      for (int dd = 0; dd < d.dim; ++dd) {
        const double diff = d.point(l)[static_cast<std::size_t>(dd)] - d.point(j)[static_cast<std::size_t>(dd)];
        s += diff * diff;
      }
      const bool tie_better = s == best && best_j < n &&
          std::lexicographical_compare(d.point(j).begin(), d.point(j).end(),
                                       d.point(best_j).begin(), d.point(best_j).end());
      if (s < best || tie_better) {
        best = s;
        best_j = j;
      }
    }
    deg[best_j] += 1;
  }
  return deg;
}

PooledDesign design_1d(std::vector<double> pts) {
  return PooledDesign::from_points(1, std::move(pts));
}

PooledDesign random_design(int dim, std::size_t n, Rng& rng) {
  std::vector<double> pts(n * static_cast<std::size_t>(dim));
  for (auto& v : pts) v = rng.uniform();
  return PooledDesign::from_points(dim, std::move(pts));
}

}  // namespace

TEST_CASE("degrees: closed-form example and brute-force agreement") {
  // explicit order-statistic formulas give (0, 2, 1, 1, 1) here:
  // d1 = 1{S2 <= (S1+S3)/2} = 1{0.3 <= 0.25} = 0,
  // d3 = 1{0.25 <= 0.3} + 1{0.7 <= 0.65} = 1, d5 = 1{0.7 >= 0.65} = 1
  const auto d = degrees(design_1d({0.1, 0.3, 0.4, 0.7, 0.9}));
  CHECK(d == std::vector<int>{0, 2, 1, 1, 1});

  CHECK(degrees(design_1d({0.2, 0.9})) == std::vector<int>{1, 1});

  Rng rng(21);
  for (int r = 0; r < 20; ++r) {
    const auto des = random_design(1, 40, rng);
    const auto got = degrees(des);
    CHECK(got == degrees_brute(des));
    CHECK(std::accumulate(got.begin(), got.end(), 0) == 40);
  }
  // D = 2, both below and above the bucket-grid cutoff at n = 500
  for (std::size_t n : {60u, 700u}) {
    const auto des = random_design(2, n, rng);
    const auto got = degrees(des);
    CHECK(got == degrees_brute(des));
    CHECK(std::accumulate(got.begin(), got.end(), 0) == static_cast<int>(n));
  }
}

TEST_CASE("exact 1d volumes: hand values and partition identity") {
  const auto density = DesignDensity::uniform(1);
  const auto c = cumulative_volumes_exact_1d(design_1d({0.1, 0.3, 0.4, 0.7, 0.9}), density);
  REQUIRE(c.size() == 5);
  CHECK(c[0] == doctest::Approx(0.85).epsilon(1e-12));
  CHECK(c[1] == doctest::Approx(0.95).epsilon(1e-12));
  CHECK(c[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c[3] == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(c[4] == doctest::Approx(0.95).epsilon(1e-12));

  Rng rng(22);
  for (int r = 0; r < 50; ++r) {
    const std::size_t n = 5 + rng.bits() % 200;
    const auto des = random_design(1, n, rng);
    const auto vols = cumulative_volumes_exact_1d(des, density);
    CHECK(std::accumulate(vols.begin(), vols.end(), 0.0) ==
          doctest::Approx(static_cast<double>(n)).epsilon(1e-10));
  }
  // non-uniform density through its cdf
  const auto beta = DesignDensity::product_beta(1, 2.0, 2.0);
  for (int r = 0; r < 20; ++r) {
    const auto des = random_design(1, 60, rng);
    const auto vols = cumulative_volumes_exact_1d(des, beta);
    CHECK(std::accumulate(vols.begin(), vols.end(), 0.0) ==
          doctest::Approx(60.0).epsilon(1e-10));
  }
  // small-n direct route still partitions
  for (std::size_t n : {2u, 3u, 4u}) {
    const auto des = random_design(1, n, rng);
    const auto vols = cumulative_volumes_exact_1d(des, density);
    CHECK(std::accumulate(vols.begin(), vols.end(), 0.0) ==
          doctest::Approx(static_cast<double>(n)).epsilon(1e-10));
  }
}

TEST_CASE("mc volumes: exact total, degenerate n=2, cross-validation") {
  const auto density = DesignDensity::uniform(1);
  Rng rng(23);

  const auto pair = design_1d({0.2, 0.9});
  const auto c2 = cumulative_volumes_mc(pair, density, 5000, 7);
  CHECK(c2[0] == doctest::Approx(1.0));
  CHECK(c2[1] == doctest::Approx(1.0));

  for (int r = 0; r < 5; ++r) {
    const std::size_t n = 10 + rng.bits() % 50;
    const auto des = random_design(1, n, rng);
    const auto vols = cumulative_volumes_mc(des, density, 20000, 1000 + r);
    CHECK(std::accumulate(vols.begin(), vols.end(), 0.0) ==
          doctest::Approx(static_cast<double>(n)).epsilon(1e-9));
  }

  // per-point agreement with the exact route: n = 50, Q = 1e6, 20 designs.
  // The per-point MC standard error is ~0.007 for typical cells and up to
  // ~0.012 for wide ones, so 0.02 is a 2-3 sigma bound: allow the binomial
  // tail and cap the worst deviation instead of demanding zero exceedances.
  std::vector<int> fails(20, 0);
  std::vector<double> worst(20, 0.0);
  parallel_for(20, [&](std::size_t r) {
    Rng local(derive_seed(23, Stream::replication, r));
    std::vector<double> pts(50);
    for (auto& v : pts) v = local.uniform();
    const auto des = PooledDesign::from_points(1, std::move(pts));
    const auto exact = cumulative_volumes_exact_1d(des, density);
    const auto mc = cumulative_volumes_mc(des, density, 1000000, 77 + r, 1);
    for (std::size_t j = 0; j < 50; ++j) {
      const double diff = std::fabs(exact[j] - mc[j]);
      if (diff > 0.02) fails[r] += 1;
      worst[r] = std::max(worst[r], diff);
    }
  });
  int exceed = 0;
  double max_diff = 0.0;
  for (int f : fails) exceed += f;
  for (double w : worst) max_diff = std::max(max_diff, w);
  CHECK(exceed <= 25);      // <= 2.5% of the 1000 point comparisons
  CHECK(max_diff < 0.05);   // > 4 sigma even for the widest cells

  // D = 2: totals exact, per-label mean 1 within 3 SE over replications
  double sum_c0 = 0.0, sum_c0_sq = 0.0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    Rng local(derive_seed(31, Stream::replication, static_cast<std::uint64_t>(r)));
    const auto des = random_design(2, 25, local);
    const auto vols = cumulative_volumes_mc(des, DesignDensity::uniform(2), 20000,
                                            static_cast<std::uint64_t>(r) + 5);
    CHECK(std::accumulate(vols.begin(), vols.end(), 0.0) ==
          doctest::Approx(25.0).epsilon(1e-9));
    sum_c0 += vols[0];
    sum_c0_sq += vols[0] * vols[0];
  }
  const double mean = sum_c0 / reps;
  const double se = std::sqrt((sum_c0_sq / reps - mean * mean) / reps);
  CHECK(std::fabs(mean - 1.0) <= 3.0 * se);
}

TEST_CASE("weights: sum rule, hand value, Prop-2 moments") {
  const auto density = DesignDensity::uniform(1);
  const auto w5 = compute_weights(design_1d({0.1, 0.3, 0.4, 0.7, 0.9}), density);
  CHECK(w5.route == "exact-1d");
  CHECK(w5.w[2] == doctest::Approx(0.2).epsilon(1e-12));

  Rng rng(24);
  for (int r = 0; r < 100; ++r) {
    const std::size_t n = 5 + rng.bits() % 150;
    const auto des = random_design(1, n, rng);
    const auto w = compute_weights(des, density);
    CHECK(std::fabs(std::accumulate(w.w.begin(), w.w.end(), 0.0) - 1.0) < 1e-10);
  }

  // E[d_l] = E[c_l] = 1 for a fixed (unordered) point label
  const int reps = 2000;
  double sd = 0.0, sd2 = 0.0, sc = 0.0, sc2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    Rng local(derive_seed(25, Stream::replication, static_cast<std::uint64_t>(r)));
    const auto des = random_design(1, 50, local);
    const auto deg = degrees(des);
    const auto vol = cumulative_volumes_exact_1d(des, density);
    sd += deg[0]; sd2 += static_cast<double>(deg[0]) * deg[0];
    sc += vol[0]; sc2 += vol[0] * vol[0];
  }
  const double md = sd / reps, mc = sc / reps;
  const double se_d = std::sqrt((sd2 / reps - md * md) / reps);
  const double se_c = std::sqrt((sc2 / reps - mc * mc) / reps);
  CHECK(std::fabs(md - 1.0) <= 3.0 * se_d);
  CHECK(std::fabs(mc - 1.0) <= 3.0 * se_c);
}

TEST_CASE("weight moment identities (reduced-scale screen)") {
  // rank-indexed second moments; the acceptance suite runs the full-size
  // version with the paper's tolerances
  const auto density = DesignDensity::uniform(1);
  const int reps = 1500;
  const std::size_t n = 200;
  double s_int = 0.0, s_r2 = 0.0, s_end = 0.0, s_one = 0.0, s_d2 = 0.0, s_cd = 0.0;
  std::size_t n_int = 0, n_r2 = 0, n_end = 0;
  for (int r = 0; r < reps; ++r) {
    Rng local(derive_seed(26, Stream::replication, static_cast<std::uint64_t>(r)));
    std::vector<double> pts(n);
    for (auto& v : pts) v = local.uniform();
    std::sort(pts.begin(), pts.end());
    const auto des = PooledDesign::from_points(1, std::move(pts));
    const auto deg = degrees(des);
    const auto vol = cumulative_volumes_exact_1d(des, density);
    for (std::size_t j = 0; j < n; ++j) {
      const double x = vol[j] - deg[j];
      if (j >= 2 && j <= n - 3) {
        s_int += x * x;
        s_one += (1.0 + x) * (1.0 + x);
        s_d2 += static_cast<double>(deg[j]) * deg[j];
        s_cd += vol[j] * deg[j];
        ++n_int;
      } else if (j == 1 || j == n - 2) {
        s_r2 += x * x;
        ++n_r2;
      } else {
        s_end += x * x;
        ++n_end;
      }
    }
  }
  CHECK(s_int / n_int == doctest::Approx(1.5).epsilon(0.10));
  CHECK(s_r2 / n_r2 == doctest::Approx(1.25).epsilon(0.12));
  CHECK(s_end / n_end == doctest::Approx(2.75).epsilon(0.10));
  CHECK(s_one / n_int == doctest::Approx(2.5).epsilon(0.08));
  CHECK(s_d2 / n_int == doctest::Approx(1.5).epsilon(0.10));
  CHECK(s_cd / n_int == doctest::Approx(0.75).epsilon(0.14));
}

TEST_CASE("integrate: exactness and unbiasedness") {
  const auto density = DesignDensity::uniform(1);
  Rng rng(27);
  const auto des = random_design(1, 80, rng);
  const auto w = compute_weights(des, density);
  std::vector<double> constant(80, 4.2);
  CHECK(integrate(constant, w) == doctest::Approx(4.2).epsilon(1e-10));
  CHECK_THROWS(integrate(std::vector<double>(79, 1.0), w));

  // E[I-hat(sin)] = 0 within 3 SE
  const int reps = 1000;
  double s = 0.0, s2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    Rng local(derive_seed(28, Stream::replication, static_cast<std::uint64_t>(r)));
    const auto d2 = random_design(1, 400, local);
    const auto ww = compute_weights(d2, density);
    std::vector<double> vals(400);
    for (std::size_t j = 0; j < 400; ++j) vals[j] = std::sin(2.0 * M_PI * d2.points[j]);
    const double ihat = integrate(vals, ww);
    s += ihat;
    s2 += ihat * ihat;
  }
  const double mean = s / reps;
  const double se = std::sqrt((s2 / reps - mean * mean) / reps);
  CHECK(std::fabs(mean) <= 3.0 * se);
}

TEST_CASE("design validation") {
  CHECK_THROWS(PooledDesign::from_points(1, {0.1, 0.3, 0.3, 0.8}));
  CHECK_THROWS(PooledDesign::from_points(1, {0.1, 1.3}));
  CHECK_THROWS(PooledDesign::from_points(2, {0.1, 0.2, 0.3}));
  CHECK_NOTHROW(validate_density(DesignDensity::uniform(2)));
  CHECK_NOTHROW(validate_density(DesignDensity::product_beta(1, 2.0, 2.0)));
  CHECK_THROWS(DesignDensity::product_beta(1, 0.5, 2.0));
  // sampler missing
  DesignDensity broken = DesignDensity::uniform(1);
  broken.sample = nullptr;
  CHECK_THROWS(cumulative_volumes_mc(design_1d({0.2, 0.5, 0.8}), broken, 100, 1));
}

TEST_CASE("two_nearest matches brute force in D=2") {
  Rng rng(29);
  const auto des = random_design(2, 800, rng);
  for (int q = 0; q < 50; ++q) {
    const std::vector<double> query{rng.uniform(), rng.uniform()};
    const auto [f, s] = two_nearest(des, query);
    // brute force
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t j = 0; j < des.size(); ++j) {
      double d2 = 0.0;
      for (int d = 0; d < 2; ++d) {
        const double diff = des.point(j)[static_cast<std::size_t>(d)] - query[static_cast<std::size_t>(d)];
        d2 += diff * diff;
      }
      all.emplace_back(d2, j);
    }
    std::sort(all.begin(), all.end());
    CHECK(f == all[0].second);
    CHECK(s == all[1].second);
  }
}
