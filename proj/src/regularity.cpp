#include "fdavp/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fdavp/estimate.hpp"

namespace fdavp {

namespace {

int cell_coord(int cells, double x) {
  return std::clamp(static_cast<int>(x * cells), 0, cells - 1);
}

void enumerate_cells_rec(int dim, int cells, std::vector<int>& cur,
                         std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == dim) {
    out.push_back(cur);
    return;
  }
  for (int k = 0; k < cells; ++k) {
    cur.push_back(k);
    enumerate_cells_rec(dim, cells, cur, out);
    cur.pop_back();
  }
}

}  // namespace

std::size_t cell_index(const PartitionSpec& partition, std::span<const int> k) {
  std::size_t idx = 0;
  for (int d = 0; d < partition.dim; ++d) {
    idx = idx * static_cast<std::size_t>(partition.cells_per_axis) +
          static_cast<std::size_t>(k[static_cast<std::size_t>(d)]);
  }
  return idx;
}

CellStats cell_stats(const FunctionalDataset& data, const PartitionSpec& partition) {
  if (partition.dim != data.dim) throw std::invalid_argument("cell_stats: dimension mismatch");
  if (partition.cells_per_axis < 2) throw std::invalid_argument("cell_stats: need K >= 2");
  const std::size_t total =
      static_cast<std::size_t>(std::pow(partition.cells_per_axis, partition.dim));
  CellStats stats;
  stats.partition = partition;
  stats.count.assign(total, 0);
  stats.y_sum.assign(total, 0.0);
  stats.members.assign(total, {});
  std::vector<int> k(static_cast<std::size_t>(partition.dim));
  std::size_t pooled = 0;
  for (const auto& c : data.curves) {
    const std::size_t mi = c.count(data.dim);
    for (std::size_t m = 0; m < mi; ++m, ++pooled) {
      for (int d = 0; d < data.dim; ++d) {
        k[static_cast<std::size_t>(d)] = cell_coord(
            partition.cells_per_axis,
            c.t[m * static_cast<std::size_t>(data.dim) + static_cast<std::size_t>(d)]);
      }
      const std::size_t idx = cell_index(partition, k);
      stats.count[idx] += 1;
      stats.y_sum[idx] += c.y[m];
      stats.members[idx].push_back(pooled);
    }
  }
  return stats;
}

std::vector<std::vector<int>> enumerate_base_cells(const PartitionSpec& partition) {
  std::vector<std::vector<int>> all;
  std::vector<int> cur;
  enumerate_cells_rec(partition.dim, partition.cells_per_axis, cur, all);
  const int bound = partition.dim * (partition.cells_per_axis - 1) - 1;
  std::vector<std::vector<int>> out;
  out.reserve(all.size());
  for (auto& k : all) {
    int l1 = 0;
    for (int v : k) l1 += v;
    if (l1 <= bound) out.push_back(std::move(k));
  }
  return out;
}

std::vector<std::vector<int>> neighbor_cells(const PartitionSpec& partition,
                                             std::span<const int> k) {
  std::vector<std::vector<int>> out;
  if (partition.mode == NeighborMode::adjacent) {
    for (int d = 0; d < partition.dim; ++d) {
      if (k[static_cast<std::size_t>(d)] + 1 <= partition.cells_per_axis - 1) {
        std::vector<int> kp(k.begin(), k.end());
        kp[static_cast<std::size_t>(d)] += 1;
        out.push_back(std::move(kp));
      }
    }
    return out;
  }
  // shell: every cell with |k+|_1 = |k|_1 + 1
  int l1 = 0;
  for (int v : k) l1 += v;
  std::vector<std::vector<int>> all;
  std::vector<int> cur;
  enumerate_cells_rec(partition.dim, partition.cells_per_axis, cur, all);
  for (auto& kp : all) {
    int s = 0;
    for (int v : kp) s += v;
    if (s == l1 + 1) out.push_back(std::move(kp));
  }
  return out;
}

double b_hat(const CellStats& stats, std::span<const int> k) {
  const auto neighbors = neighbor_cells(stats.partition, k);
  if (neighbors.empty()) throw std::invalid_argument("b_hat: empty neighbour set");
  const double mk = stats.cell_mean(cell_index(stats.partition, k));
  double s = 0.0;
  for (const auto& kp : neighbors) {
    const double diff = mk - stats.cell_mean(cell_index(stats.partition, kp));
    s += diff * diff;
  }
  return s / static_cast<double>(neighbors.size());
}

double g_hat(const CellStats& stats, std::vector<int>* excluded) {
  const auto base = enumerate_base_cells(stats.partition);
  double total = 0.0;
  std::size_t used = 0;
  int skipped = 0;
  for (const auto& k : base) {
    if (neighbor_cells(stats.partition, k).empty()) { ++skipped; continue; }
    total += b_hat(stats, k);
    ++used;
  }
  if (excluded) excluded->push_back(skipped);
  if (used == 0) throw std::runtime_error("g_hat: no usable cells");
  return total / static_cast<double>(used);
}

double h_hat(double g, int cells_per_axis, double h_j) {
  if (g < 0.0) throw std::invalid_argument("h_hat: g >= 0");
  if (cells_per_axis < 2) throw std::invalid_argument("h_hat: K >= 2");
  const double lk = std::log(static_cast<double>(cells_per_axis));
  return -std::log(g + std::pow(static_cast<double>(cells_per_axis), -2.0 * h_j)) / (2.0 * lk);
}

RegularityEstimate estimate_alpha(const FunctionalDataset& data, const RegularityConfig& config) {
  const std::size_t n_curves = data.curves.size();
  if (n_curves < 3) throw std::invalid_argument("estimate_alpha: need N >= 3");
  const std::size_t m_bar = data.total_obs();
  const double log_n = std::log(static_cast<double>(n_curves));

  RegularityEstimate est;
  est.tau = config.tau;
  est.tau_prime = config.tau_prime;
  est.r_prime = config.r_prime;

  est.cells_theoretical = static_cast<int>(std::floor(std::exp(std::pow(log_n, config.tau))));
  const double budget = static_cast<double>(m_bar) / config.min_points_per_cell;
  const int k_cap = static_cast<int>(std::floor(std::pow(budget, 1.0 / data.dim)));
  est.cells_per_axis = std::clamp(est.cells_theoretical, 2, std::max(2, k_cap));
  if (est.cells_per_axis != est.cells_theoretical) est.flags.push_back("K-clamped");

  est.j_grid = std::max(4, static_cast<int>(std::floor(std::pow(log_n, config.r_prime))));

  PartitionSpec partition{data.dim, est.cells_per_axis, config.mode};
  const CellStats stats = cell_stats(data, partition);
  bool any_points = false;
  for (long c : stats.count) if (c > 0) { any_points = true; break; }
  if (!any_points) throw std::runtime_error("estimate_alpha: all cells empty");
  std::vector<int> excluded;
  est.g = g_hat(stats, &excluded);
  if (excluded[0] > 0) est.flags.push_back("cells-excluded");

  const double tol = std::pow(log_n, -config.tau_prime);
  est.h_grid.resize(static_cast<std::size_t>(est.j_grid));
  est.h_hat.resize(static_cast<std::size_t>(est.j_grid));
  est.j0 = 0;
  for (int j = 1; j <= est.j_grid; ++j) {
    const double hj = static_cast<double>(j) / est.j_grid;
    const double hh = h_hat(est.g, est.cells_per_axis, hj);
    est.h_grid[static_cast<std::size_t>(j - 1)] = hj;
    est.h_hat[static_cast<std::size_t>(j - 1)] = hh;
    if (std::fabs(hh - hj) <= tol) est.j0 = j;
  }
  if (est.j0 == 0) est.flags.push_back("j0-empty-acceptance");
  est.alpha = (est.j0 + 0.5) / est.j_grid;
  if (est.j0 == est.j_grid) {
    // acceptance never broke: alpha sits at or beyond the top of the grid,
    // outside the exponent domain (0,1); clamp to the last interior value
    est.alpha = (est.j_grid - 0.5) / est.j_grid;
    est.flags.push_back("alpha-grid-saturated");
  }

  // diagnostics
  double sum_mi2 = 0.0, mi_min = 1e300, mi_max = 0.0;
  for (const auto& c : data.curves) {
    const double mi = static_cast<double>(c.count(data.dim));
    sum_mi2 += mi * mi;
    mi_min = std::min(mi_min, mi);
    mi_max = std::max(mi_max, mi);
  }
  const double mb = static_cast<double>(m_bar);
  est.n_cal = mb * mb / sum_mi2;
  est.m_frak = sum_mi2 / mb;
  est.balance_ratio = mi_max / std::max(1.0, mi_min);
  if (est.balance_ratio > 20.0) est.flags.push_back("unbalanced-counts");
  return est;
}

int plug_in_L(const RegularityEstimate& estimate, double k1, double c_vp,
              std::size_t m_bar, int dim, double rho) {
  return optimal_L(estimate.alpha, c_vp, k1, dim, m_bar, rho);
}

double holder_constant(const FunctionalDataset& data, const PartitionSpec& partition,
                       const RegularityEstimate& estimate, double cap) {
  if (cap <= 0.0) throw std::invalid_argument("holder_constant: cap > 0");
  const CellStats stats = cell_stats(data, partition);
  const PooledDesign pooled = data.pooled();
  const double expo = estimate.alpha - 1.5 / estimate.j_grid;
  const auto base = enumerate_base_cells(partition);
  double best = -1.0;
  for (const auto& k : base) {
    const auto neighbors = neighbor_cells(partition, k);
    if (neighbors.empty()) continue;
    const std::size_t ck = cell_index(partition, k);
    if (stats.count[ck] == 0) continue;
    double vk = 0.0;
    for (const auto& kp : neighbors) {
      const std::size_t cp = cell_index(partition, kp);
      if (stats.count[cp] == 0) continue;
      double pair_sum = 0.0;
      for (std::size_t a : stats.members[ck]) {
        for (std::size_t b : stats.members[cp]) {
          double d2 = 0.0;
          for (int d = 0; d < data.dim; ++d) {
            const double diff = pooled.points[a * static_cast<std::size_t>(data.dim) + static_cast<std::size_t>(d)] -
                                pooled.points[b * static_cast<std::size_t>(data.dim) + static_cast<std::size_t>(d)];
            d2 += diff * diff;
          }
          pair_sum += std::pow(std::sqrt(d2), expo);
        }
      }
      vk += pair_sum / (static_cast<double>(stats.count[ck]) * static_cast<double>(stats.count[cp]));
    }
    vk /= static_cast<double>(neighbors.size());
    if (vk <= 0.0) continue;
    const double ratio = std::sqrt(b_hat(stats, k) / vk);
    best = std::max(best, ratio);
  }
  if (best < 0.0) throw std::runtime_error("holder_constant: v_k vanished for every cell");
  return std::min(best, cap);
}

}  // namespace fdavp
