#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fdavp {

// Multi-index k = (k_1,...,k_D), all components >= 0.
using MultiIndex = std::vector<int>;

inline int l1_norm(std::span<const int> k) {
  int s = 0;
  for (int v : k) s += v;
  return s;
}

// All multi-indices with |k|_1 <= bound, strictly lexicographic, no
// duplicates.  Stored flat (size() * dim values).  Lexicographic order is
// shared by every vector/matrix indexed over the basis.
class IndexSet {
 public:
  IndexSet(int dim, int bound);

  int dim() const { return dim_; }
  int bound() const { return bound_; }
  std::size_t size() const { return l1_.size(); }
  std::span<const int> at(std::size_t i) const {
    return {flat_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  int l1(std::size_t i) const { return l1_[i]; }
  // position of k in the lexicographic list, or npos
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t find(std::span<const int> k) const;

 private:
  int dim_;
  int bound_;
  std::vector<int> flat_;
  std::vector<int> l1_;
};

// binomial(J+D, D), the cardinality of IndexSet(D, J)
std::size_t index_count(int dim, int bound);

// phi_0 = 1, phi_{2m-1}(u) = sqrt(2) sin(2 pi m u), phi_{2m}(u) = sqrt(2) cos(2 pi m u)
double basis_eval_1d(int k, double u);

// product basis on [0,1]^D
double basis_eval(std::span<const int> k, std::span<const double> t);

// Per-point table of 1-d basis values phi_k(t_d) for k = 0..max_k, d = 0..D-1.
class BasisTable {
 public:
  BasisTable(std::span<const double> t, int max_k);
  double value(std::span<const int> k) const;

 private:
  int dim_;
  int stride_;
  std::vector<double> vals_;
};

// de La Vallee Poussin shell weight for |k|_1 = l1 at level L:
// 1 on |k|_1 <= 2L, (L-ell)/L on the shells |k|_1 in {2L+2ell-1, 2L+2ell},
// 0 past 4L-2.
double vp_weight(int L, int l1);

// Truncation level L, dimension D and coefficients over exactly
// IndexSet(D, 4L-2); represents mu-hat = V-hat_L.
struct FourierModel {
  int dim = 1;
  int level = 1;
  IndexSet indices;
  std::vector<double> coefficients;

  FourierModel(int D, int L)
      : dim(D), level(L), indices(D, 4 * L - 2),
        coefficients(indices.size(), 0.0) {}

  double coefficient(std::span<const int> k) const {
    const std::size_t i = indices.find(k);
    if (i == IndexSet::npos) throw std::out_of_range("coefficient index outside |k|_1 <= 4L-2");
    return coefficients[i];
  }
  void set_coefficient(std::span<const int> k, double v) {
    const std::size_t i = indices.find(k);
    if (i == IndexSet::npos) throw std::out_of_range("coefficient index outside |k|_1 <= 4L-2");
    coefficients[i] = v;
  }
};

// S_L(t) = sum_{|k|_1 <= 2L} a_k phi_k(t); coefficients must cover the ball.
double partial_sum_eval(const IndexSet& indices, std::span<const double> coeffs,
                        int L, std::span<const double> t);

// V_L via the closed-form shell weights (equality with the averaged
// definition (1/L) sum_j S_{L+j} is a test).
double vp_eval(const FourierModel& model, std::span<const double> t);

// Phi_L(t) over IndexSet(D, 4L-2): entry vp_weight(L,|k|_1) * phi_k(t).
std::vector<double> phi_vector(int dim, int L, std::span<const double> t);

// (1/L) sum_{j=0}^{L-1} sum_{|k|_1 <= 2(L+j)} phi_k^2(t), computed directly;
// oracle for the (2^{2D+1}-2^D)/(D+1)! L^D identity.
double theta_average(int L, int dim, std::span<const double> t);

}  // namespace fdavp
