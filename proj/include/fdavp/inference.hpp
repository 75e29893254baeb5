#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fdavp/estimate.hpp"

namespace fdavp {

struct Rates {
  double r1 = 0.0;  // sqrt(Mbar / L^D)
  double r2 = 0.0;  // Mbar / sqrt(sum M_i (M_i - 1)); +inf when no pairs
  double used() const { return std::min(r1, r2); }
};

Rates rates(const FunctionalDataset& data, int L);

// standard normal quantile (Wichura AS241); q(0) = -inf handled by callers
double normal_quantile(double p);

using ScalarField = std::function<double(std::span<const double>)>;
using Kernel = std::function<double(std::span<const double>, std::span<const double>)>;

struct SigmaMatrix {
  int dim = 1;
  int level = 1;
  Eigen::MatrixXd m;    // indexed by IndexSet(dim, 4L-2), lexicographic
  std::string mode;     // oracle | plugin
  double rho = 2.5;
  int quad_nodes = 0;
};

// Leading terms of the coefficient covariance:
//   (rho/Mbar) Int (sigma^2 + gamma(t,t))/f_T phi_p phi_q dt
//   + sum M_i(M_i-1)/(Mbar(Mbar-1)) Int Int gamma(t,s) phi_p(t) phi_q(s) dt ds
SigmaMatrix sigma_matrix_oracle(int dim, int L, std::size_t m_bar, double pair_count,
                                const ScalarField& sigma2, const Kernel& gamma,
                                const DesignDensity& density, double rho = 0.0,
                                int quad_per_axis = 0, int threads = 0);

// Plug-in: diagonal sigma^2 + gamma(t,t) from pilot residuals smoothed over a
// k-nearest-neighbour window (k = ceil(Mbar^{D/(D+2)})); the double-integral
// term from empirical within-curve residual cross products.
SigmaMatrix sigma_matrix_plugin(const FunctionalDataset& data, const DesignDensity& density,
                                int L, double rho = 0.0, int quad_per_axis = 0,
                                int pilot_level = 0, int threads = 0);

struct PointwiseInterval {
  double lower = 0.0;
  double upper = 0.0;
  double variance = 0.0;
};

// mu-hat(t) -/+ z_{1-alpha/2} sqrt(Phi_L(t)' Sigma Phi_L(t))
PointwiseInterval pointwise_interval(const FourierModel& model, const SigmaMatrix& sigma,
                                     std::span<const double> t, double level);

struct BandResult {
  std::vector<double> grid;    // flat grid points
  std::vector<double> center;  // mu-hat on the grid
  std::vector<double> lower;
  std::vector<double> upper;
  double level = 0.95;
  std::string method;          // gaussian | subsampling
  double critical = 0.0;       // uniform critical value (unnormalized scale)
  double critical_coarse = 0.0;  // same quantile on the half-resolution grid
  double half_width = 0.0;
  double r1 = 0.0, r2 = 0.0;
  double clip_magnitude = 0.0;  // |most negative eigenvalue| clipped in Sigma^1/2
  std::uint64_t seed = 0;
  std::vector<std::string> flags;
  // subsampling extras: per-grid-point quantile table bounds
  std::vector<double> ci_lower, ci_upper;
  double tau_full = 0.0;
};

// Simulate || (Sigma^1/2 Z)' Phi_L ||_inf over the grid; band is
// mu-hat -/+ empirical (1-alpha)-quantile (rate factors cancel).
BandResult uniform_band_gaussian(const FourierModel& model, const SigmaMatrix& sigma,
                                 const Rates& rate, double level, int grid_per_axis,
                                 int n_draws, std::uint64_t seed, int threads = 0);

struct VarthetaMode {
  // auto: 1 in the dense regime, max(log log, 1) otherwise
  enum class Kind { auto_select, one, loglog, constant };
  Kind kind = Kind::auto_select;
  double value = 1.0;

  double eval(std::size_t subset_size, bool dense) const;
  static VarthetaMode from_string(const std::string& s, double value = 1.0);
  std::string to_string() const;
};

struct SubsamplingConfig {
  double alpha_mu = 1.0;         // regularity driving L* and tau's first branch
  double c_vp = 1.0;
  double k1 = 1.0;
  double rho = 0.0;              // 0 -> rho_constant(D)
  double level = 0.95;
  int n_subsets = 0;             // 0 -> 2N
  VarthetaMode vartheta;
  int grid_per_axis = 0;         // 0 -> 256 for D=1, 32 for D=2
  bool whole_curves = false;     // draw curves instead of flat observations
  std::uint64_t seed = 0;
  WeightConfig weights;
  int threads = 0;
};

// Full-data fit at L*(Mbar), N_s half-sample refits at L*(floor(Mbar/2)),
// tau_A-normalized deviations, empirical quantiles; CI and band per the
// subsampling construction.
BandResult subsampling_bands(const FunctionalDataset& data, const DesignDensity& density,
                             const SubsamplingConfig& config);

}  // namespace fdavp
