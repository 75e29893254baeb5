#include "fdavp/fourier.hpp"

#include <algorithm>
#include <cmath>

namespace fdavp {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kSqrt2 = 1.4142135623730950488016887242097;

void enumerate_rec(int dim, int rem, MultiIndex& cur, std::vector<int>& flat,
                   std::vector<int>& l1, int used) {
  if (static_cast<int>(cur.size()) == dim) {
    flat.insert(flat.end(), cur.begin(), cur.end());
    l1.push_back(used);
    return;
  }
  for (int k = 0; k <= rem; ++k) {
    cur.push_back(k);
    enumerate_rec(dim, rem - k, cur, flat, l1, used + k);
    cur.pop_back();
  }
}
}  // namespace

IndexSet::IndexSet(int dim, int bound) : dim_(dim), bound_(bound) {
  if (dim < 1) throw std::invalid_argument("IndexSet: dim must be >= 1");
  if (bound < 0) throw std::invalid_argument("IndexSet: bound must be >= 0");
  MultiIndex cur;
  cur.reserve(static_cast<std::size_t>(dim));
  enumerate_rec(dim, bound, cur, flat_, l1_, 0);
}

std::size_t IndexSet::find(std::span<const int> k) const {
  if (static_cast<int>(k.size()) != dim_) throw std::invalid_argument("index dimension mismatch");
  // binary search over the lexicographically sorted flat list
  std::size_t lo = 0, hi = size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    const auto m = at(mid);
    const bool less = std::lexicographical_compare(m.begin(), m.end(), k.begin(), k.end());
    if (less) lo = mid + 1; else hi = mid;
  }
  if (lo < size()) {
    const auto m = at(lo);
    if (std::equal(m.begin(), m.end(), k.begin())) return lo;
  }
  return npos;
}

std::size_t index_count(int dim, int bound) {
  // binomial(bound + dim, dim)
  std::size_t r = 1;
  for (int i = 1; i <= dim; ++i) {
    r = r * static_cast<std::size_t>(bound + i) / static_cast<std::size_t>(i);
  }
  return r;
}

double basis_eval_1d(int k, double u) {
  if (k == 0) return 1.0;
  const int m = (k + 1) / 2;
  const double a = kTwoPi * m * u;
  return (k % 2 == 1) ? kSqrt2 * std::sin(a) : kSqrt2 * std::cos(a);
}

double basis_eval(std::span<const int> k, std::span<const double> t) {
  if (k.size() != t.size()) throw std::invalid_argument("basis_eval: dimension mismatch");
  double p = 1.0;
  for (std::size_t d = 0; d < k.size(); ++d) p *= basis_eval_1d(k[d], t[d]);
  return p;
}

BasisTable::BasisTable(std::span<const double> t, int max_k)
    : dim_(static_cast<int>(t.size())), stride_(max_k + 1),
      vals_(static_cast<std::size_t>(dim_) * static_cast<std::size_t>(max_k + 1)) {
  for (int d = 0; d < dim_; ++d) {
    for (int k = 0; k <= max_k; ++k) {
      vals_[static_cast<std::size_t>(d) * stride_ + k] = basis_eval_1d(k, t[static_cast<std::size_t>(d)]);
    }
  }
}

double BasisTable::value(std::span<const int> k) const {
  double p = 1.0;
  for (int d = 0; d < dim_; ++d) {
    p *= vals_[static_cast<std::size_t>(d) * stride_ + k[static_cast<std::size_t>(d)]];
  }
  return p;
}

double vp_weight(int L, int l1) {
  if (l1 <= 2 * L) return 1.0;
  if (l1 > 4 * L - 2) return 0.0;
  const int ell = (l1 - 2 * L + 1) / 2;
  return static_cast<double>(L - ell) / static_cast<double>(L);
}

double partial_sum_eval(const IndexSet& indices, std::span<const double> coeffs,
                        int L, std::span<const double> t) {
  if (indices.bound() < 2 * L) {
    throw std::invalid_argument("partial_sum_eval: coefficients missing for |k|_1 <= 2L");
  }
  if (coeffs.size() != indices.size()) {
    throw std::invalid_argument("partial_sum_eval: coefficient/index size mismatch");
  }
  BasisTable table(t, indices.bound());
  double s = 0.0;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices.l1(i) > 2 * L) continue;
    s += coeffs[i] * table.value(indices.at(i));
  }
  return s;
}

double vp_eval(const FourierModel& model, std::span<const double> t) {
  if (static_cast<int>(t.size()) != model.dim) {
    throw std::invalid_argument("vp_eval: point dimension mismatch");
  }
  const IndexSet& idx = model.indices;
  if (model.coefficients.size() != idx.size()) {
    throw std::invalid_argument("vp_eval: incomplete coefficient map");
  }
  BasisTable table(t, idx.bound());
  double s = 0.0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const double w = vp_weight(model.level, idx.l1(i));
    s += w * model.coefficients[i] * table.value(idx.at(i));
  }
  return s;
}

std::vector<double> phi_vector(int dim, int L, std::span<const double> t) {
  const IndexSet idx(dim, 4 * L - 2);
  BasisTable table(t, idx.bound());
  std::vector<double> v(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    v[i] = vp_weight(L, idx.l1(i)) * table.value(idx.at(i));
  }
  return v;
}

double theta_average(int L, int dim, std::span<const double> t) {
  const int max_bound = 2 * (2 * L - 1);
  const IndexSet idx(dim, max_bound);
  BasisTable table(t, max_bound);
  double total = 0.0;
  for (int j = 0; j < L; ++j) {
    const int bound = 2 * (L + j);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx.l1(i) > bound) continue;
      const double v = table.value(idx.at(i));
      total += v * v;
    }
  }
  return total / L;
}

}  // namespace fdavp
