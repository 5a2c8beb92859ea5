#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include "heatmorse/error.hpp"

namespace heatmorse {

using MultiIndex = std::vector<int>;

inline std::vector<long> sphere_spectrum(int n, int count) {
  if (n < 1) throw DomainError("sphere dimension must be >= 1");
  if (count < 1) throw DomainError("eigenvalue count must be >= 1");
  std::vector<long> out(count);
  for (int j = 0; j < count; ++j) out[j] = static_cast<long>(j) * (j + n - 1);
  return out;
}

inline long sphere_eigenvalue(int n, int j) { return static_cast<long>(j) * (j + n - 1); }

inline long binomial(long a, long b) {
  if (b < 0 || a < b) return 0;
  long r = 1;
  for (long i = 1; i <= b; ++i) r = r * (a - b + i) / i;
  return r;
}

/// dim E_j on S^n.
inline long harmonic_dimension(int n, int j) { return binomial(n + j, n) - binomial(n + j - 2, n); }

/// All exponent vectors of length `vars` with total degree `degree`, in
/// descending lexicographic order (x_1^degree first).
inline std::vector<MultiIndex> monomials_of_degree(int vars, int degree) {
  std::vector<MultiIndex> out;
  MultiIndex cur(vars, 0);
  auto rec = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == vars - 1) {
      cur[pos] = remaining;
      out.push_back(cur);
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      cur[pos] = e;
      self(self, pos + 1, remaining - e);
    }
  };
  if (vars > 0 && degree >= 0) rec(rec, 0, degree);
  return out;
}

/// Exact surface integral of x^alpha over the unit sphere S^n, alpha of length
/// n+1: 2 prod Gamma(b_i) / Gamma(sum b_i), b_i = (alpha_i + 1)/2, and zero when
/// any exponent is odd.
inline double sphere_monomial_integral(const MultiIndex& alpha, int n) {
  if (static_cast<int>(alpha.size()) != n + 1)
    throw DomainError("multi-index length must be n+1 for S^n");
  double log_num = 0.0;
  double total = 0.0;
  for (int a : alpha) {
    if (a < 0) throw DomainError("negative exponent in multi-index");
    if (a % 2 != 0) return 0.0;
    const double b = 0.5 * (a + 1);
    log_num += std::lgamma(b);
    total += b;
  }
  return 2.0 * std::exp(log_num - std::lgamma(total));
}

/// Homogeneous polynomial on R^{n+1}, dense over the degree-j monomials in
/// monomials_of_degree order.
class HarmonicPolynomial {
 public:
  HarmonicPolynomial() = default;
  HarmonicPolynomial(int n, int degree, std::vector<double> coeffs)
      : n_(n), degree_(degree), monomials_(monomials_of_degree(n + 1, degree)), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != monomials_.size())
      throw DomainError("harmonic polynomial coefficient count does not match degree");
  }

  int n() const { return n_; }
  int degree() const { return degree_; }
  const std::vector<MultiIndex>& monomials() const { return monomials_; }
  const std::vector<double>& coeffs() const { return coeffs_; }

  double coefficient(const MultiIndex& alpha) const {
    for (std::size_t i = 0; i < monomials_.size(); ++i)
      if (monomials_[i] == alpha) return coeffs_[i];
    return 0.0;
  }

  double operator()(const std::vector<double>& x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < monomials_.size(); ++i) {
      double term = coeffs_[i];
      for (int v = 0; v <= n_; ++v) term *= std::pow(x[v], monomials_[i][v]);
      s += term;
    }
    return s;
  }

  /// Coefficients of the ambient Laplacian, a degree-(j-2) polynomial.
  std::vector<double> laplacian_coeffs() const;

  double coeff_norm() const {
    double s = 0.0;
    for (double c : coeffs_) s += c * c;
    return std::sqrt(s);
  }

 private:
  int n_ = 0;
  int degree_ = 0;
  std::vector<MultiIndex> monomials_;
  std::vector<double> coeffs_;
};

namespace detail {

inline std::size_t monomial_position(const std::vector<MultiIndex>& table, const MultiIndex& alpha) {
  // table is sorted descending lexicographically
  auto it = std::lower_bound(table.begin(), table.end(), alpha, std::greater<>());
  return static_cast<std::size_t>(it - table.begin());
}

/// Matrix of the ambient Laplacian from degree-j to degree-(j-2) monomials.
inline Eigen::MatrixXd laplacian_map(int n, int j) {
  const auto cols = monomials_of_degree(n + 1, j);
  const auto rows = j >= 2 ? monomials_of_degree(n + 1, j - 2) : std::vector<MultiIndex>{};
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                            static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (int v = 0; v <= n; ++v) {
      const int a = cols[c][v];
      if (a < 2) continue;
      MultiIndex lowered = cols[c];
      lowered[v] -= 2;
      L(static_cast<Eigen::Index>(monomial_position(rows, lowered)), static_cast<Eigen::Index>(c)) +=
          static_cast<double>(a) * (a - 1);
    }
  }
  return L;
}

/// Null space basis from reduced row echelon form: one column per free
/// (non-pivot) variable, in column order, with a 1 in the free slot.
inline Eigen::MatrixXd rref_kernel(Eigen::MatrixXd A) {
  const Eigen::Index rows = A.rows(), cols = A.cols();
  const double tol = 1e-10 * std::max(1.0, A.cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> pivot_cols;
  Eigen::Index r = 0;
  for (Eigen::Index c = 0; c < cols && r < rows; ++c) {
    Eigen::Index best = r;
    for (Eigen::Index i = r + 1; i < rows; ++i)
      if (std::fabs(A(i, c)) > std::fabs(A(best, c))) best = i;
    if (std::fabs(A(best, c)) <= tol) continue;
    A.row(r).swap(A.row(best));
    A.row(r) /= A(r, c);
    for (Eigen::Index i = 0; i < rows; ++i)
      if (i != r && A(i, c) != 0.0) A.row(i) -= A(i, c) * A.row(r);
    pivot_cols.push_back(c);
    ++r;
  }
  std::vector<char> is_pivot(static_cast<std::size_t>(cols), 0);
  for (auto c : pivot_cols) is_pivot[static_cast<std::size_t>(c)] = 1;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(cols, cols - static_cast<Eigen::Index>(pivot_cols.size()));
  Eigen::Index k = 0;
  for (Eigen::Index f = 0; f < cols; ++f) {
    if (is_pivot[static_cast<std::size_t>(f)]) continue;
    K(f, k) = 1.0;
    for (std::size_t pr = 0; pr < pivot_cols.size(); ++pr)
      K(pivot_cols[pr], k) = -A(static_cast<Eigen::Index>(pr), f);
    ++k;
  }
  return K;
}

/// Gram matrix of degree-j monomials in L^2(S^n).
inline Eigen::MatrixXd monomial_gram(int n, int j) {
  const auto mons = monomials_of_degree(n + 1, j);
  const auto m = static_cast<Eigen::Index>(mons.size());
  Eigen::MatrixXd G(m, m);
  MultiIndex sum(n + 1);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = a; b < m; ++b) {
      for (int v = 0; v <= n; ++v) sum[v] = mons[a][v] + mons[b][v];
      G(a, b) = G(b, a) = sphere_monomial_integral(sum, n);
    }
  return G;
}

inline std::vector<HarmonicPolynomial> build_harmonic_basis(int n, int j) {
  const auto mons = monomials_of_degree(n + 1, j);
  const auto m = static_cast<Eigen::Index>(mons.size());
  Eigen::MatrixXd K = j >= 2 ? rref_kernel(laplacian_map(n, j)) : Eigen::MatrixXd::Identity(m, m);
  const Eigen::MatrixXd G = monomial_gram(n, j);
  // Orthonormalize K's columns in the G inner product, preserving column order
  // (Cholesky of the small Gram matrix is Gram-Schmidt in matrix form).
  const Eigen::MatrixXd KGK = K.transpose() * G * K;
  Eigen::LLT<Eigen::MatrixXd> llt(KGK);
  if (llt.info() != Eigen::Success) throw DomainError("harmonic kernel Gram matrix is not positive definite");
  const Eigen::MatrixXd Q = llt.matrixU().solve<Eigen::OnTheRight>(K);
  std::vector<HarmonicPolynomial> out;
  out.reserve(static_cast<std::size_t>(Q.cols()));
  for (Eigen::Index c = 0; c < Q.cols(); ++c) {
    std::vector<double> coeffs(static_cast<std::size_t>(m));
    for (Eigen::Index r = 0; r < m; ++r) coeffs[static_cast<std::size_t>(r)] = Q(r, c);
    out.emplace_back(n, j, std::move(coeffs));
  }
  return out;
}

}  // namespace detail

/// Orthonormal (in L^2(S^n)) basis of degree-j spherical harmonics. The order
/// is deterministic: element i corresponds to the i-th free monomial of the
/// Laplacian coefficient map, orthonormalized in that order.
inline const std::vector<HarmonicPolynomial>& harmonic_basis_cached(int n, int j) {
  if (n < 1) throw DomainError("sphere dimension must be >= 1");
  if (j < 0) throw DomainError("harmonic degree must be >= 0");
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<const std::vector<HarmonicPolynomial>>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{n, j}];
  if (!slot) slot = std::make_unique<const std::vector<HarmonicPolynomial>>(detail::build_harmonic_basis(n, j));
  return *slot;
}

inline std::vector<HarmonicPolynomial> harmonic_basis(int n, int j) { return harmonic_basis_cached(n, j); }

inline std::vector<double> HarmonicPolynomial::laplacian_coeffs() const {
  if (degree_ < 2) return {};
  const Eigen::MatrixXd L = detail::laplacian_map(n_, degree_);
  const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(coeffs_.data(), static_cast<Eigen::Index>(coeffs_.size()));
  const Eigen::VectorXd lc = L * c;
  return {lc.data(), lc.data() + lc.size()};
}

/// L^2(S^n) inner product of two harmonic polynomials (any degrees).
inline double sphere_inner_product(const HarmonicPolynomial& a, const HarmonicPolynomial& b) {
  if (a.n() != b.n()) throw DomainError("inner product of harmonics on different spheres");
  double s = 0.0;
  MultiIndex sum(a.n() + 1);
  for (std::size_t p = 0; p < a.monomials().size(); ++p) {
    if (a.coeffs()[p] == 0.0) continue;
    for (std::size_t q = 0; q < b.monomials().size(); ++q) {
      if (b.coeffs()[q] == 0.0) continue;
      for (int v = 0; v <= a.n(); ++v) sum[v] = a.monomials()[p][v] + b.monomials()[q][v];
      s += a.coeffs()[p] * b.coeffs()[q] * sphere_monomial_integral(sum, a.n());
    }
  }
  return s;
}

}  // namespace heatmorse
