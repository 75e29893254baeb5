#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fdavp/rng.hpp"

namespace fdavp {

// Pooled observation locations T^obs with their (curve, within-curve) labels.
struct PooledDesign {
  int dim = 1;
  std::vector<double> points;  // flat, size() * dim
  std::vector<int> curve;      // i of (i,m)
  std::vector<int> within;     // m of (i,m)

  std::size_t size() const { return curve.size(); }
  std::span<const double> point(std::size_t j) const {
    return {points.data() + j * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }

  // Validates the domain and rejects duplicate locations (degenerate Voronoi
  // geometry).  Labels default to curve j = point index, m = 0.
  static PooledDesign from_points(int dim, std::vector<double> flat_points,
                                  std::vector<int> curve = {}, std::vector<int> within = {});
};

// Known design density f_T: evaluator, optional 1-d cdf, sampler and the
// H2 bounds 0 < C0 <= f_T <= C1.
struct DesignDensity {
  int dim = 1;
  std::string kind = "custom";
  std::function<double(std::span<const double>)> pdf;
  std::function<double(double)> cdf1d;  // empty unless dim == 1 and known
  std::function<void(Rng&, std::span<double>)> sample;
  double c0 = 0.0;
  double c1 = 0.0;

  bool has_cdf() const { return static_cast<bool>(cdf1d); }
  bool has_sampler() const { return static_cast<bool>(sample); }

  static DesignDensity uniform(int dim);
  // product of Beta(a,b) marginals, a,b >= 1
  static DesignDensity product_beta(int dim, double a, double b);
};

// Checks positivity and the declared [c0, c1] bounds on a midpoint grid.
void validate_density(const DesignDensity& density, int grid_per_axis = 64);

struct WeightConfig {
  std::uint64_t mc_draws = 0;  // 0 -> max(1e5, 100 n)
  std::uint64_t seed = 0;
  int threads = 0;
};

// Per-point degree d-hat, cumulative Voronoi volume c-hat and integration
// weight w = (1 + c-hat - d-hat) / n.
struct DesignWeights {
  std::vector<int> degree;
  std::vector<double> cumvol;
  std::vector<double> w;
  std::string route;            // "exact-1d" or "mc"
  std::uint64_t mc_draws = 0;
  std::uint64_t seed = 0;
  double sum_w_residual = 0.0;  // sum(w) - 1
};

// d-hat_j = #{ l != j : nearest neighbour of T_l in S \ {T_l} is T_j },
// exact search, ties broken by lexicographic order of locations.
std::vector<int> degrees(const PooledDesign& design);

// Closed-form order-statistics volumes for D = 1 (n >= 5); direct
// leave-one-out cell summation below n = 5.
std::vector<double> cumulative_volumes_exact_1d(const PooledDesign& design,
                                                const DesignDensity& density);

// Monte Carlo volumes for any D: draw u ~ f_T and credit (n-1) to the first
// nearest design point and 1 to the second.
std::vector<double> cumulative_volumes_mc(const PooledDesign& design,
                                          const DesignDensity& density,
                                          std::uint64_t draws, std::uint64_t seed,
                                          int threads = 0);

DesignWeights compute_weights(const PooledDesign& design, const DesignDensity& density,
                              const WeightConfig& config = {});

// sum_l w_l values_l
double integrate(std::span<const double> values, const DesignWeights& weights);

// Exact first and second nearest design points of an arbitrary query point
// (used by the MC volume route and by plug-in residual smoothing).
std::pair<std::size_t, std::size_t> two_nearest(const PooledDesign& design,
                                                std::span<const double> query);

}  // namespace fdavp
