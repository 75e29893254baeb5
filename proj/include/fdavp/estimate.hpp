#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "fdavp/design_weights.hpp"
#include "fdavp/fourier.hpp"
#include "fdavp/simulate.hpp"

namespace fdavp {

// variance constant of the weights: exactly 5/2 for D = 1; no closed form is
// known for D >= 2, so the default carries over and calibrate_rho estimates it
double rho_constant(int dim);

// MC estimate of E[(1 + c-hat - d-hat)^2] at interior points (uniform design)
double calibrate_rho(int dim, std::size_t n, int reps, std::uint64_t seed);

struct FitResult {
  FourierModel model;
  DesignWeights weights;
};

// a-hat_k = sum omega_{i,m} Y_{i,m} phi_k(T_{i,m}) / f_T(T_{i,m}) for all
// |k|_1 <= 4L-2, one shared DesignWeights over the pooled design.
FitResult fourier_coefficients(const FunctionalDataset& data, const DesignDensity& density,
                               int L, const WeightConfig& wcfg = {}, int threads = 0);

std::function<double(std::span<const double>)> mean_estimator(const FourierModel& model);

// L* = max(1, floor(C* Mbar^{1/(2 alpha + D)})) with
// C* = {(2 alpha Cvp)(D+1)! / (D K1 rho (2^{2D+1} - 2^D))}^{1/(2 alpha + D)}
int optimal_L(double alpha, double c_vp, double k1, int dim, std::size_t m_bar,
              double rho = 0.0);

// Plug-in coefficient of difficulty: pilot fit at L0 (default
// ceil(Mbar^{1/(2+D)})), then (1/Mbar) sum r^2 / f_T^2(T).
double estimate_k1(const FunctionalDataset& data, const DesignDensity& density,
                   int pilot_level = 0, const WeightConfig& wcfg = {});

struct RegimeReport {
  double sparse_term = 0.0;  // Mbar^{-2 alpha/(2 alpha + D)}
  double dense_term = 0.0;   // sum M_i (M_i - 1) / (Mbar (Mbar - 1))
  std::string label;         // sparse | dense | boundary
};

RegimeReport regime(const FunctionalDataset& data, double alpha);

}  // namespace fdavp
