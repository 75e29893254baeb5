#include "fdavp/design_weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "fdavp/parallel.hpp"

namespace fdavp {

namespace {

bool lex_less(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

double dist2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

// candidate ordering: distance first, then lexicographic location
struct Candidate {
  double d2 = std::numeric_limits<double>::infinity();
  std::size_t idx = static_cast<std::size_t>(-1);
};

bool better(const PooledDesign& design, const Candidate& a, const Candidate& b) {
  if (a.d2 != b.d2) return a.d2 < b.d2;
  if (b.idx == static_cast<std::size_t>(-1)) return true;
  if (a.idx == static_cast<std::size_t>(-1)) return false;
  return lex_less(design.point(a.idx), design.point(b.idx));
}

// Exact NN over a uniform bucket grid; falls back to brute force for small n.
class NnIndex {
 public:
  explicit NnIndex(const PooledDesign& design) : design_(design), dim_(design.dim) {
    const std::size_t n = design.size();
    brute_ = (n < 500) || dim_ == 1;
    if (brute_) return;
    cells_ = std::max<int>(1, static_cast<int>(std::floor(
        std::pow(static_cast<double>(n), 1.0 / dim_))));
    buckets_.resize(static_cast<std::size_t>(std::pow(cells_, dim_)));
    for (std::size_t j = 0; j < n; ++j) buckets_[bucket_of(design.point(j))].push_back(j);
  }

  // first and second nearest among points with index != skip_a, != skip_b
  void two_nearest(std::span<const double> q, std::size_t skip,
                   Candidate& first, Candidate& second) const {
    first = Candidate{};
    second = Candidate{};
    if (brute_) {
      for (std::size_t j = 0; j < design_.size(); ++j) {
        if (j == skip) continue;
        offer({dist2(q, design_.point(j)), j}, first, second);
      }
      return;
    }
    std::vector<int> qc(static_cast<std::size_t>(dim_));
    for (int d = 0; d < dim_; ++d) qc[static_cast<std::size_t>(d)] = cell_coord(q[static_cast<std::size_t>(d)]);
    const double h = 1.0 / cells_;
    for (int r = 0;; ++r) {
      scan_ring(q, skip, qc, r, first, second);
      // scanned box: [qc_d - r, qc_d + r] cells per axis
      double boundary = std::numeric_limits<double>::infinity();
      bool closed = true;
      for (int d = 0; d < dim_; ++d) {
        const double lo = (qc[static_cast<std::size_t>(d)] - r) * h;
        const double hi = (qc[static_cast<std::size_t>(d)] + r + 1) * h;
        if (lo > 0.0) { boundary = std::min(boundary, q[static_cast<std::size_t>(d)] - lo); closed = false; }
        if (hi < 1.0) { boundary = std::min(boundary, hi - q[static_cast<std::size_t>(d)]); closed = false; }
      }
      if (closed) return;  // whole domain scanned
      const double b2 = boundary * boundary;
      if (second.idx != static_cast<std::size_t>(-1) && second.d2 <= b2) return;
    }
  }

 private:
  int cell_coord(double x) const {
    int c = static_cast<int>(x * cells_);
    return std::clamp(c, 0, cells_ - 1);
  }
  std::size_t bucket_of(std::span<const double> p) const {
    std::size_t b = 0;
    for (int d = 0; d < dim_; ++d) b = b * static_cast<std::size_t>(cells_) + static_cast<std::size_t>(cell_coord(p[static_cast<std::size_t>(d)]));
    return b;
  }

  void offer(const Candidate& c, Candidate& first, Candidate& second) const {
    if (better(design_, c, first)) {
      second = first;
      first = c;
    } else if (better(design_, c, second)) {
      second = c;
    }
  }

  void scan_ring(std::span<const double> q, std::size_t skip, const std::vector<int>& qc,
                 int r, Candidate& first, Candidate& second) const {
    std::vector<int> cur(static_cast<std::size_t>(dim_));
    scan_ring_rec(q, skip, qc, r, 0, false, cur, first, second);
  }

  // enumerate cells with Chebyshev distance exactly r from qc
  void scan_ring_rec(std::span<const double> q, std::size_t skip, const std::vector<int>& qc,
                     int r, int d, bool extreme, std::vector<int>& cur,
                     Candidate& first, Candidate& second) const {
    if (d == dim_) {
      if (!extreme && r > 0) return;
      std::size_t b = 0;
      for (int dd = 0; dd < dim_; ++dd) b = b * static_cast<std::size_t>(cells_) + static_cast<std::size_t>(cur[static_cast<std::size_t>(dd)]);
      for (std::size_t j : buckets_[b]) {
        if (j == skip) continue;
        offer({dist2(q, design_.point(j)), j}, first, second);
      }
      return;
    }
    const int c0 = qc[static_cast<std::size_t>(d)];
    for (int c = std::max(0, c0 - r); c <= std::min(cells_ - 1, c0 + r); ++c) {
      cur[static_cast<std::size_t>(d)] = c;
      scan_ring_rec(q, skip, qc, r, d + 1, extreme || std::abs(c - c0) == r, cur, first, second);
    }
  }

  const PooledDesign& design_;
  int dim_;
  bool brute_ = true;
  int cells_ = 1;
  std::vector<std::vector<std::size_t>> buckets_;
};

// regularized incomplete beta I_x(a,b) by continued fraction
double betacf(double a, double b, double x) {
  const int max_it = 200;
  const double eps = 3e-14, fpmin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::fabs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_it; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

double beta_cdf(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lnb = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                     a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(lnb);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

PooledDesign PooledDesign::from_points(int dim, std::vector<double> flat_points,
                                       std::vector<int> curve, std::vector<int> within) {
  if (dim < 1) throw std::invalid_argument("PooledDesign: dim must be >= 1");
  if (flat_points.size() % static_cast<std::size_t>(dim) != 0) {
    throw std::invalid_argument("PooledDesign: flat point array not a multiple of dim");
  }
  PooledDesign design;
  design.dim = dim;
  design.points = std::move(flat_points);
  const std::size_t n = design.points.size() / static_cast<std::size_t>(dim);
  for (double v : design.points) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("PooledDesign: location outside [0,1]^D");
  }
  if (curve.empty()) {
    design.curve.resize(n);
    std::iota(design.curve.begin(), design.curve.end(), 0);
    design.within.assign(n, 0);
  } else {
    if (curve.size() != n || within.size() != n) {
      throw std::invalid_argument("PooledDesign: label arrays must match the point count");
    }
    design.curve = std::move(curve);
    design.within = std::move(within);
  }
  // duplicate check via lexicographic sort of point indices
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lex_less(design.point(a), design.point(b));
  });
  for (std::size_t i = 1; i < n; ++i) {
    const auto a = design.point(order[i - 1]);
    const auto b = design.point(order[i]);
    if (std::equal(a.begin(), a.end(), b.begin())) {
      throw std::invalid_argument("PooledDesign: duplicate design locations");
    }
  }
  return design;
}

DesignDensity DesignDensity::uniform(int dim) {
  DesignDensity d;
  d.dim = dim;
  d.kind = "uniform";
  d.pdf = [](std::span<const double>) { return 1.0; };
  if (dim == 1) d.cdf1d = [](double x) { return std::clamp(x, 0.0, 1.0); };
  d.sample = [dim](Rng& rng, std::span<double> out) {
    for (int i = 0; i < dim; ++i) out[static_cast<std::size_t>(i)] = rng.uniform();
  };
  d.c0 = 1.0;
  d.c1 = 1.0;
  return d;
}

DesignDensity DesignDensity::product_beta(int dim, double a, double b) {
  if (a < 1.0 || b < 1.0) throw std::invalid_argument("product_beta: need a, b >= 1");
  DesignDensity d;
  d.dim = dim;
  d.kind = "beta";
  const double lognorm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  d.pdf = [a, b, lognorm, dim](std::span<const double> t) {
    double p = 1.0;
    for (int i = 0; i < dim; ++i) {
      const double x = t[static_cast<std::size_t>(i)];
      p *= std::exp(lognorm + (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x));
    }
    return p;
  };
  if (dim == 1) d.cdf1d = [a, b](double x) { return beta_cdf(a, b, x); };
  d.sample = [a, b, dim](Rng& rng, std::span<double> out) {
    for (int i = 0; i < dim; ++i) {
      const double ga = rng.gamma(a);
      const double gb = rng.gamma(b);
      out[static_cast<std::size_t>(i)] = ga / (ga + gb);
    }
  };
  // bounds over the interior validation grid (beta pdfs vanish at the edges
  // when a,b > 1, so bounds are grid bounds, not essential sup/inf)
  const int g = 512;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  std::vector<double> t(static_cast<std::size_t>(dim));
  for (int i = 0; i < g; ++i) {
    std::fill(t.begin(), t.end(), (i + 0.5) / g);
    const double p = d.pdf(t);
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  d.c0 = lo;
  d.c1 = hi;
  return d;
}

void validate_density(const DesignDensity& density, int grid_per_axis) {
  if (!density.pdf) throw std::invalid_argument("density: evaluator missing");
  std::vector<double> t(static_cast<std::size_t>(density.dim));
  // midpoint grid along the diagonal axes; full tensor grid for dim <= 2
  const bool tensor = density.dim <= 2;
  const int g = grid_per_axis;
  const std::size_t total = tensor ? static_cast<std::size_t>(std::pow(g, density.dim))
                                   : static_cast<std::size_t>(g);
  for (std::size_t i = 0; i < total; ++i) {
    if (tensor) {
      std::size_t rest = i;
      for (int d = 0; d < density.dim; ++d) {
        t[static_cast<std::size_t>(d)] = (static_cast<double>(rest % g) + 0.5) / g;
        rest /= g;
      }
    } else {
      std::fill(t.begin(), t.end(), (static_cast<double>(i) + 0.5) / g);
    }
    const double p = density.pdf(t);
    if (!(p > 0.0)) throw std::runtime_error("density: evaluator not strictly positive on the grid");
    if (density.c0 > 0.0 && (p < density.c0 * (1.0 - 1e-9) || p > density.c1 * (1.0 + 1e-9))) {
      throw std::runtime_error("density: declared bounds violated on the grid");
    }
  }
  if (density.dim == 1 && density.has_cdf()) {
    if (std::fabs(density.cdf1d(0.0)) > 1e-12 || std::fabs(density.cdf1d(1.0) - 1.0) > 1e-12) {
      throw std::runtime_error("density: cdf must run from 0 to 1");
    }
    double prev = 0.0;
    for (int i = 1; i <= g; ++i) {
      const double c = density.cdf1d(static_cast<double>(i) / g);
      if (c < prev - 1e-12) throw std::runtime_error("density: cdf not nondecreasing");
      prev = c;
    }
  }
}

std::vector<int> degrees(const PooledDesign& design) {
  const std::size_t n = design.size();
  if (n < 2) throw std::invalid_argument("degrees: need at least 2 points");
  std::vector<int> deg(n, 0);
  if (design.dim == 1) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return design.points[a] < design.points[b];
    });
    for (std::size_t r = 0; r < n; ++r) {
      const double x = design.points[order[r]];
      // neighbour of rank r is rank r-1 or r+1; tie goes to the smaller
      // location (lexicographic rule)
      std::size_t nn;
      if (r == 0) nn = order[1];
      else if (r == n - 1) nn = order[n - 2];
      else {
        const double dl = x - design.points[order[r - 1]];
        const double dr = design.points[order[r + 1]] - x;
        nn = (dl <= dr) ? order[r - 1] : order[r + 1];
      }
      deg[nn] += 1;
    }
    return deg;
  }
  NnIndex index(design);
  std::vector<std::size_t> nn_of(n);
  parallel_for(n, [&](std::size_t l) {
    Candidate first, second;
    index.two_nearest(design.point(l), l, first, second);
    nn_of[l] = first.idx;
  });
  for (std::size_t l = 0; l < n; ++l) deg[nn_of[l]] += 1;
  return deg;
}

std::vector<double> cumulative_volumes_exact_1d(const PooledDesign& design,
                                                const DesignDensity& density) {
  if (design.dim != 1) throw std::invalid_argument("exact volumes: D = 1 only");
  if (!density.has_cdf()) throw std::invalid_argument("exact volumes: density cdf required");
  const std::size_t n = design.size();
  if (n < 2) throw std::invalid_argument("exact volumes: need at least 2 points");
  const auto& F = density.cdf1d;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return design.points[a] < design.points[b];
  });
  std::vector<double> s(n);
  for (std::size_t r = 0; r < n; ++r) s[r] = design.points[order[r]];
  std::vector<double> c_sorted(n, 0.0);

  if (n < 5) {
    // direct leave-one-out cells: midpoints of the remaining points
    for (std::size_t l = 0; l < n; ++l) {
      std::vector<double> rest;
      rest.reserve(n - 1);
      for (std::size_t r = 0; r < n; ++r) if (r != l) rest.push_back(s[r]);
      for (std::size_t j = 0; j < rest.size(); ++j) {
        const double lo = (j == 0) ? 0.0 : 0.5 * (rest[j - 1] + rest[j]);
        const double hi = (j + 1 == rest.size()) ? 1.0 : 0.5 * (rest[j] + rest[j + 1]);
        // rank of rest[j] in the full sorted list
        const std::size_t rank = (rest[j] < s[l]) ? j : j + 1;
        c_sorted[rank] += F(hi) - F(lo);
      }
    }
  } else {
    const double m = static_cast<double>(n);
    for (std::size_t j = 2; j + 2 < n; ++j) {
      c_sorted[j] = (m - 3) * (F((s[j] + s[j + 1]) / 2) - F((s[j - 1] + s[j]) / 2)) +
                    (F((s[j] + s[j + 1]) / 2) - F((s[j - 2] + s[j]) / 2)) +
                    (F((s[j] + s[j + 2]) / 2) - F((s[j - 1] + s[j]) / 2));
    }
    c_sorted[0] = (m - 2) * F((s[0] + s[1]) / 2) + F((s[0] + s[2]) / 2);
    c_sorted[1] = (m - 3) * (F((s[1] + s[2]) / 2) - F((s[0] + s[1]) / 2)) +
                  F((s[1] + s[2]) / 2) +
                  (F((s[1] + s[3]) / 2) - F((s[0] + s[1]) / 2));
    c_sorted[n - 2] = (m - 3) * (F((s[n - 2] + s[n - 1]) / 2) - F((s[n - 3] + s[n - 2]) / 2)) +
                      (1.0 - F((s[n - 3] + s[n - 2]) / 2)) +
                      (F((s[n - 2] + s[n - 1]) / 2) - F((s[n - 4] + s[n - 2]) / 2));
    c_sorted[n - 1] = (m - 2) * (1.0 - F((s[n - 2] + s[n - 1]) / 2)) +
                      (1.0 - F((s[n - 3] + s[n - 1]) / 2));
  }

  std::vector<double> c(n);
  for (std::size_t r = 0; r < n; ++r) c[order[r]] = c_sorted[r];
  return c;
}

std::vector<double> cumulative_volumes_mc(const PooledDesign& design,
                                          const DesignDensity& density,
                                          std::uint64_t draws, std::uint64_t seed,
                                          int threads) {
  if (!density.has_sampler()) throw std::invalid_argument("mc volumes: density sampler required");
  const std::size_t n = design.size();
  if (n < 2) throw std::invalid_argument("mc volumes: need at least 2 points");
  if (draws == 0) throw std::invalid_argument("mc volumes: draws must be >= 1");
  NnIndex index(design);
  // fixed chunking so the counts are identical for every thread count
  const std::size_t chunks = 64;
  std::vector<std::vector<std::int64_t>> first_counts(chunks), second_counts(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    first_counts[c].assign(n, 0);
    second_counts[c].assign(n, 0);
    const std::uint64_t lo = draws * c / chunks;
    const std::uint64_t hi = draws * (c + 1) / chunks;
    Rng rng(derive_seed(seed, Stream::mc_volumes, c));
    std::vector<double> u(static_cast<std::size_t>(design.dim));
    for (std::uint64_t q = lo; q < hi; ++q) {
      density.sample(rng, u);
      Candidate f, s;
      index.two_nearest(u, static_cast<std::size_t>(-1), f, s);
      first_counts[c][f.idx] += 1;
      second_counts[c][s.idx] += 1;
    }
  }, threads);
  std::vector<std::int64_t> f_total(n, 0), s_total(n, 0);
  for (std::size_t c = 0; c < chunks; ++c) {
    for (std::size_t j = 0; j < n; ++j) {
      f_total[j] += first_counts[c][j];
      s_total[j] += second_counts[c][j];
    }
  }
  std::vector<double> out(n);
  const double q = static_cast<double>(draws);
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = (static_cast<double>(n - 1) * static_cast<double>(f_total[j]) +
              static_cast<double>(s_total[j])) / q;
  }
  return out;
}

DesignWeights compute_weights(const PooledDesign& design, const DesignDensity& density,
                              const WeightConfig& config) {
  const std::size_t n = design.size();
  if (n < 2) throw std::invalid_argument("compute_weights: need at least 2 points");
  DesignWeights out;
  out.degree = degrees(design);
  if (design.dim == 1 && density.has_cdf()) {
    out.route = "exact-1d";
    out.cumvol = cumulative_volumes_exact_1d(design, density);
  } else {
    out.route = "mc";
    out.mc_draws = config.mc_draws ? config.mc_draws
                                   : std::max<std::uint64_t>(100000, 100 * n);
    out.seed = config.seed;
    out.cumvol = cumulative_volumes_mc(design, density, out.mc_draws, config.seed,
                                       config.threads);
  }
  out.w.resize(n);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    out.w[j] = (1.0 + out.cumvol[j] - out.degree[j]) / static_cast<double>(n);
    sum += out.w[j];
  }
  out.sum_w_residual = sum - 1.0;
  return out;
}

double integrate(std::span<const double> values, const DesignWeights& weights) {
  if (values.size() != weights.w.size()) throw std::invalid_argument("integrate: length mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) s += weights.w[j] * values[j];
  return s;
}

std::pair<std::size_t, std::size_t> two_nearest(const PooledDesign& design,
                                                std::span<const double> query) {
  NnIndex index(design);
  Candidate f, s;
  index.two_nearest(query, static_cast<std::size_t>(-1), f, s);
  return {f.idx, s.idx};
}

}  // namespace fdavp
