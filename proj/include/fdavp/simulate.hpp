#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fdavp/design_weights.hpp"
#include "fdavp/fourier.hpp"

namespace fdavp {

// Mean families: zero, trig polynomial in the basis span, or the Weierstrass
// type sum  amp * sum_{j=1..j_max} 2^{-j alpha} prod_d cos(2 pi 2^j t_d).
struct MeanSpec {
  enum class Kind { zero, trig_poly, weierstrass };
  Kind kind = Kind::zero;
  // trig_poly
  std::vector<std::pair<MultiIndex, double>> terms;
  // weierstrass
  double alpha = 0.5;
  int j_max = 12;
  double amplitude = 1.0;

  double eval(std::span<const double> t) const;

  static MeanSpec zero() { return {}; }
  static MeanSpec trig(std::vector<std::pair<MultiIndex, double>> terms);
  static MeanSpec weier(double alpha, int j_max = 12, double amplitude = 1.0);
};

struct CovarianceSpec {
  enum class Kind { zero, exponential, matern32, fbm };
  Kind kind = Kind::zero;
  double scale = 1.0;  // length scale (exponential / matern32)
  double hurst = 0.5;  // fbm

  double eval(std::span<const double> s, std::span<const double> t) const;
  // declared Holder exponent of t -> gamma(s, t)
  double holder_exponent() const;

  static CovarianceSpec zero() { return {}; }
  static CovarianceSpec exponential(double scale);
  static CovarianceSpec matern32(double scale);
  static CovarianceSpec fbm(double hurst);
};

struct NoiseSpec {
  enum class Law { gaussian, rademacher, student_t };
  Law law = Law::gaussian;
  double df = 5.0;  // student_t, scaled to unit variance; needs df >= 4
  std::function<double(std::span<const double>)> sigma;  // >= 0

  // D6 requires sub-gaussian moments; student-t violates it
  bool outside_d6() const { return law == Law::student_t; }

  static NoiseSpec none();
  static NoiseSpec gaussian(std::function<double(std::span<const double>)> sigma);
  static NoiseSpec gaussian_const(double s);
};

struct Curve {
  std::vector<double> t;       // M_i * D design locations
  std::vector<double> y;       // responses
  std::vector<double> latent;  // X_i(T_im) when the truth channel is on
  std::vector<double> eps;     // noise when the truth channel is on
  std::size_t count(int dim) const { return t.size() / static_cast<std::size_t>(dim); }
};

struct TruthChannel {
  std::vector<double> grid;  // flat grid points
  std::vector<double> mu;    // mean values on the grid
};

struct FunctionalDataset {
  int dim = 1;
  std::vector<Curve> curves;
  std::optional<TruthChannel> truth;
  std::uint64_t seed = 0;
  std::string meta_json;  // resolved spec echo, set by callers that configure runs

  std::size_t total_obs() const;
  PooledDesign pooled() const;
};

// per-curve observation counts: fixed m, or uniform on {m_lo..m_hi}
struct CountLaw {
  int m_lo = 1;
  int m_hi = 1;
  static CountLaw fixed(int m) { return {m, m}; }
  static CountLaw uniform(int lo, int hi) { return {lo, hi}; }
};

std::vector<std::vector<double>> sample_design(int N, int dim, const CountLaw& counts,
                                               const DesignDensity& density,
                                               std::uint64_t seed);

// Latent values X_i at each curve's own design points: jointly Gaussian with
// mean mu and covariance gamma (Cholesky with jitter ladder 1e-10 -> 1e-6).
std::vector<std::vector<double>> sample_paths(const MeanSpec& mean, const CovarianceSpec& cov,
                                              const std::vector<std::vector<double>>& designs,
                                              int dim, std::uint64_t seed, int threads = 0);

FunctionalDataset observe(std::vector<std::vector<double>> designs,
                          std::vector<std::vector<double>> latent, int dim,
                          const NoiseSpec& noise, std::uint64_t seed,
                          bool keep_truth = true);

struct SimConfig {
  int dim = 1;
  int n_curves = 10;
  CountLaw counts = CountLaw::fixed(5);
  MeanSpec mean;
  CovarianceSpec cov;
  NoiseSpec noise = NoiseSpec::none();
  DesignDensity density = DesignDensity::uniform(1);
  std::uint64_t seed = 0;
  bool truth_channel = true;
  int truth_grid = 512;  // per axis, dim 1; 64 for dim 2 handled by caller
  int threads = 0;
};

FunctionalDataset simulate(const SimConfig& config);

// midpoint-rule approximation of || f - g ||_2^2 on [0,1]^D
double empirical_l2_error(const std::function<double(std::span<const double>)>& f,
                          const std::function<double(std::span<const double>)>& g,
                          int dim, int grid_per_axis = 0);

// flat midpoint grid with res^dim points
std::vector<double> midpoint_grid(int dim, int res);

}  // namespace fdavp
