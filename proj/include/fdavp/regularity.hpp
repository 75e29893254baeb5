#pragma once

#include <string>
#include <vector>

#include "fdavp/simulate.hpp"

namespace fdavp {

enum class NeighborMode { adjacent, shell };

// Hypercube partition of [0,1)^D into K^D cells, centers (k + 1/2)/K.
struct PartitionSpec {
  int dim = 1;
  int cells_per_axis = 2;
  NeighborMode mode = NeighborMode::adjacent;
};

// Per-cell observation bookkeeping: counts and response sums, so that
// sum_(i,m) Y F_k = mean of Y over cell k (0/0 = 0 on empty cells).
struct CellStats {
  PartitionSpec partition;
  std::vector<long> count;       // K^D cells, row-major over (k_1,...,k_D)
  std::vector<double> y_sum;
  std::vector<std::vector<std::size_t>> members;  // pooled indices per cell

  double cell_mean(std::size_t cell) const {
    return count[cell] > 0 ? y_sum[cell] / static_cast<double>(count[cell]) : 0.0;
  }
};

CellStats cell_stats(const FunctionalDataset& data, const PartitionSpec& partition);

std::size_t cell_index(const PartitionSpec& partition, std::span<const int> k);

// X(K): all cells except the far corner, |k|_1 <= D(K-1) - 1; K^D - 1 entries.
std::vector<std::vector<int>> enumerate_base_cells(const PartitionSpec& partition);

// neighbours k+ of k: adjacent = k + e_d (components within range);
// shell = every vector with |k+|_1 = |k|_1 + 1 and components within range
std::vector<std::vector<int>> neighbor_cells(const PartitionSpec& partition,
                                             std::span<const int> k);

// b-hat_k: average over k+ of (cell mean difference)^2
double b_hat(const CellStats& stats, std::span<const int> k);

// mean of b-hat over X(K); cells with empty neighbour sets are excluded
double g_hat(const CellStats& stats, std::vector<int>* excluded = nullptr);

// H-hat_j = -log(g + K^{-2 H_j}) / (2 log K)
double h_hat(double g, int cells_per_axis, double h_j);

struct RegularityConfig {
  double tau = 0.6;
  double tau_prime = 0.3;
  double r_prime = 1.0;
  NeighborMode mode = NeighborMode::adjacent;
  int min_points_per_cell = 8;  // clamp K so cells average >= this
};

struct RegularityEstimate {
  int cells_per_axis = 0;        // clamped K actually used
  int cells_theoretical = 0;     // K_tau before clamping
  int j_grid = 0;                // J
  double tau = 0.6, tau_prime = 0.3, r_prime = 1.0;
  double g = 0.0;                // g-hat
  std::vector<double> h_grid;    // H_j = j/J
  std::vector<double> h_hat;     // H-hat_j
  int j0 = 0;                    // j0-hat
  double alpha = 0.0;            // alpha-hat = (j0 + 1/2)/J
  double c_hat = 0.0;            // Holder constant estimate (post holder_constant)
  int l_hat = 0;                 // plug-in L (post plug_in_L)
  std::vector<std::string> flags;
  // diagnostics (report metadata only)
  double n_cal = 0.0;            // (Mbar^-2 sum M_i^2)^-1
  double m_frak = 0.0;           // Mbar^-1 sum M_i^2
  double balance_ratio = 0.0;    // max M_i / min M_i
};

RegularityEstimate estimate_alpha(const FunctionalDataset& data,
                                  const RegularityConfig& config = {});

int plug_in_L(const RegularityEstimate& estimate, double k1, double c_vp,
              std::size_t m_bar, int dim, double rho = 0.0);

// C-hat = min(max_k sqrt(b-hat_k / v_k), cap) with v_k the pairwise-distance
// weighted sum at exponent alpha-hat - 3/(2J)
double holder_constant(const FunctionalDataset& data, const PartitionSpec& partition,
                       const RegularityEstimate& estimate, double cap = 100.0);

}  // namespace fdavp
