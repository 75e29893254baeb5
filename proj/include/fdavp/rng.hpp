#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace fdavp {

// Stream derivation: every random stage owns a stream keyed by
// (root seed, stage tag, index).  Keys are mixed through splitmix64 so that
// changing N, M_i or the replication count never reshuffles unrelated draws.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum class Stream : std::uint64_t {
  design = 1,
  paths = 2,
  noise = 3,
  mc_volumes = 4,
  gaussian_draws = 5,
  subsample = 6,
  replication = 7,
  generic = 8,
};

inline std::uint64_t derive_seed(std::uint64_t root, Stream tag, std::uint64_t index = 0) {
  std::uint64_t s = root;
  std::uint64_t a = splitmix64(s);
  s = a ^ (static_cast<std::uint64_t>(tag) * 0xda942042e4dd58b5ULL);
  std::uint64_t b = splitmix64(s);
  s = b ^ (index * 0x9e3779b97f4a7c15ULL);
  return splitmix64(s);
}

// Deterministic generator: the distribution code is owned here, so identical
// seeds give identical draws on every platform and thread layout.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  double uniform() {  // in [0,1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform_open() {  // in (0,1)
    double u;
    do { u = uniform(); } while (u <= 0.0);
    return u;
  }

  double normal() {  // Marsaglia polar, cached spare
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  double rademacher() { return (gen_() & 1ULL) ? 1.0 : -1.0; }

  // Marsaglia-Tsang; shape >= 1 is all we need (chi-square with df >= 4).
  double gamma(double shape) {
    if (shape < 1.0) throw std::invalid_argument("gamma: shape < 1 unsupported");
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // Student-t with df > 2, scaled to unit variance.
  double student_t_unit(double df) {
    const double z = normal();
    const double chi2 = 2.0 * gamma(df / 2.0);
    const double t = z / std::sqrt(chi2 / df);
    return t * std::sqrt((df - 2.0) / df);
  }

  // Fisher-Yates draw of k distinct values from {0,...,n-1}; first k of perm.
  template <typename Int>
  void sample_without_replacement(Int n, Int k, std::vector<Int>& out) {
    out.resize(static_cast<std::size_t>(n));
    for (Int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = i;
    for (Int i = 0; i < k; ++i) {
      const Int j = i + static_cast<Int>(bits() % static_cast<std::uint64_t>(n - i));
      std::swap(out[static_cast<std::size_t>(i)], out[static_cast<std::size_t>(j)]);
    }
    out.resize(static_cast<std::size_t>(k));
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fdavp
