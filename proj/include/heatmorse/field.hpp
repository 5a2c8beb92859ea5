#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <compare>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "heatmorse/error.hpp"
#include "heatmorse/manifold.hpp"
#include "heatmorse/sphere.hpp"
#include "heatmorse/torus.hpp"

namespace heatmorse {

/// Position of an orthonormal harmonic within harmonic_basis(n, level).
struct HarmonicIndex {
  int value = 0;
  friend auto operator<=>(const HarmonicIndex&, const HarmonicIndex&) = default;
};

using BasisElement = std::variant<TorusMode, HarmonicIndex>;

struct FieldTerm {
  int level = 0;
  BasisElement element;
  double coeff = 0.0;
};

/// Eigenvalue lambda_j of the given level on the manifold.
inline long level_eigenvalue(const ManifoldSpec& m, int level) {
  if (level < 0) throw DomainError("negative spectral level");
  if (m.is_sphere()) return sphere_eigenvalue(m.n(), level);
  return torus_spectrum(m.n(), level + 1).back();
}

/// Finite linear combination of Laplacian eigenfunctions on T^n or S^n.
/// Terms are kept in the order given; each basis element appears once.
class SpectralField {
 public:
  SpectralField(ManifoldSpec manifold, std::vector<FieldTerm> terms)
      : manifold_(manifold), terms_(std::move(terms)) {
    validate();
  }

  const ManifoldSpec& manifold() const { return manifold_; }
  const std::vector<FieldTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  long eigenvalue_of_level(int level) const { return level_eigenvalue(manifold_, level); }

  /// Same basis elements with new coefficients; skips revalidation.
  SpectralField with_coefficients(const std::vector<double>& coeffs) const {
    if (coeffs.size() != terms_.size()) throw DomainError("coefficient count mismatch");
    SpectralField out = *this;
    for (std::size_t i = 0; i < coeffs.size(); ++i) out.terms_[i].coeff = coeffs[i];
    return out;
  }

  std::vector<double> coefficients() const {
    std::vector<double> c;
    c.reserve(terms_.size());
    for (const auto& t : terms_) c.push_back(t.coeff);
    return c;
  }

  /// L^2 norm of one term's basis function.
  double basis_norm(const FieldTerm& t) const {
    if (const auto* mode = std::get_if<TorusMode>(&t.element)) return torus_mode_norm(*mode);
    return 1.0;
  }

  /// Coefficient in the orthonormal basis (Parseval coordinates).
  double orthonormal_coefficient(const FieldTerm& t) const { return t.coeff * basis_norm(t); }

  double l2_norm() const {
    double s = 0.0;
    for (const auto& t : terms_) {
      const double c = orthonormal_coefficient(t);
      s += c * c;
    }
    return std::sqrt(s);
  }

  double max_abs_coefficient() const {
    double m = 0.0;
    for (const auto& t : terms_) m = std::max(m, std::fabs(t.coeff));
    return m;
  }

  /// Highest level carrying a nonzero coefficient (-1 for the zero field).
  int max_level() const {
    int m = -1;
    for (const auto& t : terms_)
      if (t.coeff != 0.0) m = std::max(m, t.level);
    return m;
  }

  /// Largest |k_i| over nonzero torus terms; the polynomial degree on the sphere.
  int max_frequency() const {
    if (manifold_.is_sphere()) return std::max(0, max_level());
    int m = 0;
    for (const auto& t : terms_) {
      if (t.coeff == 0.0) continue;
      for (int k : std::get<TorusMode>(t.element).k) m = std::max(m, std::abs(k));
    }
    return m;
  }

  /// True when every nonzero term sits at level 0.
  bool is_constant() const {
    return std::all_of(terms_.begin(), terms_.end(),
                       [](const FieldTerm& t) { return t.level == 0 || t.coeff == 0.0; });
  }

  template <class Pred>
  SpectralField filtered(Pred keep) const {
    SpectralField out = *this;
    std::erase_if(out.terms_, [&](const FieldTerm& t) { return !keep(t); });
    return out;
  }

  SpectralField scaled(double s) const {
    SpectralField out = *this;
    for (auto& t : out.terms_) t.coeff *= s;
    return out;
  }

  /// Sum of two fields on the same manifold; shared basis elements are merged.
  friend SpectralField operator+(const SpectralField& a, const SpectralField& b) {
    if (!(a.manifold_ == b.manifold_)) throw DomainError("cannot add fields on different manifolds");
    SpectralField out = a;
    for (const auto& t : b.terms_) {
      auto it = std::find_if(out.terms_.begin(), out.terms_.end(), [&](const FieldTerm& u) {
        return u.level == t.level && u.element == t.element;
      });
      if (it != out.terms_.end())
        it->coeff += t.coeff;
      else
        out.terms_.push_back(t);
    }
    return out;
  }

  friend bool operator==(const SpectralField& a, const SpectralField& b) {
    if (!(a.manifold_ == b.manifold_) || a.terms_.size() != b.terms_.size()) return false;
    for (std::size_t i = 0; i < a.terms_.size(); ++i) {
      const auto &x = a.terms_[i], &y = b.terms_[i];
      if (x.level != y.level || !(x.element == y.element) || x.coeff != y.coeff) return false;
    }
    return true;
  }

 private:
  void validate() const {
    const int n = manifold_.n();
    std::set<std::pair<int, BasisElement>> seen;
    for (const auto& t : terms_) {
      if (t.level < 0) throw DomainError("negative spectral level");
      if (!std::isfinite(t.coeff)) throw DomainError("non-finite field coefficient");
      if (manifold_.is_torus()) {
        const auto* mode = std::get_if<TorusMode>(&t.element);
        if (!mode) throw DomainError("torus field term must be a torus mode");
        if (static_cast<int>(mode->k.size()) != n) throw DomainError("wave vector length differs from n");
        if (!is_canonical_wavevector(mode->k)) throw DomainError("wave vector is not in canonical form");
        if (mode->is_constant() && mode->phase == Phase::Sin) throw DomainError("sin of the zero wave vector");
        if (torus_level_of(n, mode->eigenvalue()) != t.level)
          throw DomainError("term level " + std::to_string(t.level) + " inconsistent with |k|^2 = " +
                            std::to_string(mode->eigenvalue()));
      } else {
        const auto* idx = std::get_if<HarmonicIndex>(&t.element);
        if (!idx) throw DomainError("sphere field term must be a harmonic index");
        if (idx->value < 0 || idx->value >= harmonic_dimension(n, t.level))
          throw DomainError("harmonic index " + std::to_string(idx->value) + " out of range for degree " +
                            std::to_string(t.level));
      }
      if (!seen.insert({t.level, t.element}).second) throw DomainError("basis element appears twice in field");
    }
  }

  ManifoldSpec manifold_;
  std::vector<FieldTerm> terms_;
};

// ---------------------------------------------------------------------------
// Builders

struct TorusTermSpec {
  std::vector<int> k;
  Phase phase;
  double coeff;
};

/// Builds a torus field from arbitrary (non-canonical) wave vectors; duplicate
/// elements are summed.
inline SpectralField torus_field(int n, const std::vector<TorusTermSpec>& specs) {
  std::map<TorusMode, double> acc;
  std::vector<TorusMode> order;
  for (const auto& s : specs) {
    if (static_cast<int>(s.k.size()) != n) throw DomainError("wave vector length differs from n");
    auto [mode, sign] = canonicalize(TorusMode{s.k, s.phase});
    if (mode.is_constant() && mode.phase == Phase::Sin) continue;  // sin(0) == 0
    if (!acc.contains(mode)) order.push_back(mode);
    acc[mode] += sign * s.coeff;
  }
  std::vector<FieldTerm> terms;
  for (const auto& mode : order) terms.push_back({torus_level_of(n, mode.eigenvalue()), mode, acc[mode]});
  return {ManifoldSpec::torus(n), std::move(terms)};
}

/// h = sum_k a_k cos x_k + b_k sin x_k.
inline SpectralField e1_torus_field(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw DomainError("e1 coefficient vectors must have equal nonzero length");
  const int n = static_cast<int>(a.size());
  std::vector<TorusTermSpec> specs;
  for (int i = 0; i < n; ++i) {
    std::vector<int> k(n, 0);
    k[i] = 1;
    specs.push_back({k, Phase::Cos, a[i]});
    specs.push_back({k, Phase::Sin, b[i]});
  }
  return torus_field(n, specs);
}

/// The linear form a.x restricted to S^n, where a has n+1 entries.
inline SpectralField linear_form_field(const std::vector<double>& a) {
  if (a.size() < 2) throw DomainError("linear form needs n+1 >= 2 coefficients");
  const int n = static_cast<int>(a.size()) - 1;
  const auto& basis = harmonic_basis_cached(n, 1);
  std::vector<FieldTerm> terms;
  for (int i = 0; i <= n; ++i) {
    // basis[i] = x_i / c with c = ||x_i||_{L^2}
    MultiIndex e(n + 1, 0);
    e[i] = 1;
    terms.push_back({1, HarmonicIndex{i}, a[i] / basis[i].coefficient(e)});
  }
  return {ManifoldSpec::sphere(n), std::move(terms)};
}

// ---------------------------------------------------------------------------
// Evaluation

/// Compiled torus field: terms grouped by wave vector as
/// c_k cos(k.x) + s_k sin(k.x).
class TorusEvaluator {
 public:
  explicit TorusEvaluator(const SpectralField& f) : n_(f.manifold().n()) {
    std::map<std::vector<int>, std::pair<double, double>> groups;
    for (const auto& t : f.terms()) {
      const auto& mode = std::get<TorusMode>(t.element);
      auto& g = groups[mode.k];
      (mode.phase == Phase::Cos ? g.first : g.second) += t.coeff;
    }
    for (const auto& [k, cs] : groups) {
      if (cs.first == 0.0 && cs.second == 0.0) continue;
      ks_.emplace_back(k.begin(), k.end());
      ccos_.push_back(cs.first);
      csin_.push_back(cs.second);
    }
  }

  int n() const { return n_; }
  std::size_t size() const { return ks_.size(); }

  double value(const double* x) const {
    double v = 0.0;
    for (std::size_t i = 0; i < ks_.size(); ++i) {
      const double th = phase(i, x);
      v += ccos_[i] * std::cos(th) + csin_[i] * std::sin(th);
    }
    return v;
  }

  void value_gradient_hessian(const double* x, double& v, Eigen::VectorXd& g, Eigen::MatrixXd& H) const {
    v = 0.0;
    g.setZero(n_);
    H.setZero(n_, n_);
    for (std::size_t i = 0; i < ks_.size(); ++i) {
      const double th = phase(i, x);
      const double c = std::cos(th), s = std::sin(th);
      const double f0 = ccos_[i] * c + csin_[i] * s;
      const double f1 = -ccos_[i] * s + csin_[i] * c;  // d/dth
      v += f0;
      for (int a = 0; a < n_; ++a) {
        const double ka = ks_[i][a];
        if (ka == 0.0) continue;
        g(a) += ka * f1;
        for (int b = a; b < n_; ++b) H(a, b) -= ka * ks_[i][b] * f0;
      }
    }
    for (int a = 0; a < n_; ++a)
      for (int b = 0; b < a; ++b) H(a, b) = H(b, a);
  }

  /// Largest |d^beta f(x)| over all multi-indices with |beta| <= r.
  double max_partial(const double* x, int r, const std::vector<MultiIndex>& betas) const {
    // d^m/dth^m cos = cos(th + m pi/2), likewise for sin
    std::vector<double> c(ks_.size()), s(ks_.size());
    for (std::size_t i = 0; i < ks_.size(); ++i) {
      const double th = phase(i, x);
      c[i] = std::cos(th);
      s[i] = std::sin(th);
    }
    double best = 0.0;
    for (const auto& beta : betas) {
      int order = 0;
      for (int b : beta) order += b;
      if (order > r) continue;
      double d = 0.0;
      for (std::size_t i = 0; i < ks_.size(); ++i) {
        double kb = 1.0;
        for (int a = 0; a < n_; ++a) kb *= std::pow(ks_[i][a], beta[a]);
        if (kb == 0.0) continue;
        double dc = 0.0, ds = 0.0;
        switch (order % 4) {
          case 0: dc = c[i], ds = s[i]; break;
          case 1: dc = -s[i], ds = c[i]; break;
          case 2: dc = -c[i], ds = -s[i]; break;
          default: dc = s[i], ds = -c[i]; break;
        }
        d += kb * (ccos_[i] * dc + csin_[i] * ds);
      }
      best = std::max(best, std::fabs(d));
    }
    return best;
  }

 private:
  double phase(std::size_t i, const double* x) const {
    double th = 0.0;
    for (int a = 0; a < n_; ++a) th += ks_[i][a] * x[a];
    return th;
  }

  int n_;
  std::vector<std::vector<double>> ks_;
  std::vector<double> ccos_, csin_;
};

/// Compiled sphere field: the ambient polynomial sum_alpha c_alpha x^alpha on
/// R^{n+1} obtained by expanding every harmonic term.
class SphereEvaluator {
 public:
  explicit SphereEvaluator(const SpectralField& f) : n_(f.manifold().n()) {
    std::map<MultiIndex, double> acc;
    for (const auto& t : f.terms()) {
      if (t.coeff == 0.0) continue;
      const auto& h = harmonic_basis_cached(n_, t.level)[std::get<HarmonicIndex>(t.element).value];
      for (std::size_t i = 0; i < h.monomials().size(); ++i) acc[h.monomials()[i]] += t.coeff * h.coeffs()[i];
    }
    for (const auto& [alpha, c] : acc) {
      if (c == 0.0) continue;
      exps_.push_back(alpha);
      coeffs_.push_back(c);
      for (int e : alpha) max_deg_ = std::max(max_deg_, e);
    }
  }

  int n() const { return n_; }
  int dim() const { return n_ + 1; }
  const std::vector<MultiIndex>& exponents() const { return exps_; }
  const std::vector<double>& coefficients() const { return coeffs_; }
  int max_exponent() const { return max_deg_; }

  /// Ambient value, gradient and Hessian of the polynomial at x in R^{n+1}.
  void ambient(const double* x, double& v, Eigen::VectorXd& g, Eigen::MatrixXd& H) const {
    const int d = dim();
    // pw[a][e] = x_a^e
    std::vector<std::vector<double>> pw(d, std::vector<double>(max_deg_ + 1, 1.0));
    for (int a = 0; a < d; ++a)
      for (int e = 1; e <= max_deg_; ++e) pw[a][e] = pw[a][e - 1] * x[a];
    v = 0.0;
    g.setZero(d);
    H.setZero(d, d);
    for (std::size_t t = 0; t < exps_.size(); ++t) {
      const auto& al = exps_[t];
      const double c = coeffs_[t];
      double full = c;
      for (int a = 0; a < d; ++a) full *= pw[a][al[a]];
      v += full;
      for (int a = 0; a < d; ++a) {
        if (al[a] == 0) continue;
        double ga = c * al[a] * pw[a][al[a] - 1];
        for (int b = 0; b < d; ++b)
          if (b != a) ga *= pw[b][al[b]];
        g(a) += ga;
        for (int b = a; b < d; ++b) {
          double hab;
          if (b == a) {
            if (al[a] < 2) continue;
            hab = c * al[a] * (al[a] - 1) * pw[a][al[a] - 2];
            for (int w = 0; w < d; ++w)
              if (w != a) hab *= pw[w][al[w]];
          } else {
            if (al[b] == 0) continue;
            hab = c * al[a] * al[b] * pw[a][al[a] - 1] * pw[b][al[b] - 1];
            for (int w = 0; w < d; ++w)
              if (w != a && w != b) hab *= pw[w][al[w]];
          }
          H(a, b) += hab;
        }
      }
    }
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < a; ++b) H(a, b) = H(b, a);
  }

  double value(const double* x) const {
    double v;
    Eigen::VectorXd g;
    Eigen::MatrixXd H;
    ambient(x, v, g, H);
    return v;
  }

 private:
  int n_;
  std::vector<MultiIndex> exps_;
  std::vector<double> coeffs_;
  int max_deg_ = 0;
};

/// Orthonormal basis of the tangent space at unit vector p, as the columns of
/// an (n+1) x n matrix. Deterministic in p.
inline Eigen::MatrixXd tangent_frame(const Eigen::VectorXd& p) {
  const Eigen::MatrixXd column = p;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(column);
  const Eigen::MatrixXd Q = qr.householderQ();
  return Q.rightCols(p.size() - 1);
}

/// Intrinsic derivatives of f = H|_{S^n} at unit p in the frame E:
/// grad = E^T dH, Hess = E^T D^2H E - (p . dH) I.
inline void sphere_intrinsic(const SphereEvaluator& ev, const Eigen::VectorXd& p, const Eigen::MatrixXd& E, double& v,
                             Eigen::VectorXd& grad, Eigen::MatrixXd& hess) {
  Eigen::VectorXd g;
  Eigen::MatrixXd H;
  ev.ambient(p.data(), v, g, H);
  grad = E.transpose() * g;
  hess = E.transpose() * H * E;
  hess.diagonal().array() -= p.dot(g);
}

namespace detail {

inline void require_same_manifold(const SpectralField& f, const PointOnManifold& p) {
  if (static_cast<int>(p.size()) != f.manifold().coord_dim())
    throw DomainError("manifold mismatch: point does not lie on " + f.manifold().name());
}

}  // namespace detail

inline double evaluate(const SpectralField& f, const PointOnManifold& p) {
  detail::require_same_manifold(f, p);
  if (f.manifold().is_torus()) return TorusEvaluator(f).value(p.coords().data());
  return SphereEvaluator(f).value(p.coords().data());
}

/// Gradient as a tangent vector: R^n on the torus; an ambient vector in R^{n+1}
/// orthogonal to p on the sphere.
inline Eigen::VectorXd evaluate_gradient(const SpectralField& f, const PointOnManifold& p) {
  detail::require_same_manifold(f, p);
  double v;
  Eigen::VectorXd g;
  Eigen::MatrixXd H;
  if (f.manifold().is_torus()) {
    TorusEvaluator(f).value_gradient_hessian(p.coords().data(), v, g, H);
    return g;
  }
  SphereEvaluator(f).ambient(p.coords().data(), v, g, H);
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(p.coords().data(), static_cast<Eigen::Index>(p.size()));
  return g - x.dot(g) * x;
}

/// Hessian bilinear form. On the sphere it is returned in ambient coordinates,
/// P (D^2H - (p . dH) I) P with P the tangent projector, so that
/// v^T Hess w is the intrinsic Hessian for tangent v, w.
inline Eigen::MatrixXd evaluate_hessian(const SpectralField& f, const PointOnManifold& p) {
  detail::require_same_manifold(f, p);
  double v;
  Eigen::VectorXd g;
  Eigen::MatrixXd H;
  if (f.manifold().is_torus()) {
    TorusEvaluator(f).value_gradient_hessian(p.coords().data(), v, g, H);
    return H;
  }
  SphereEvaluator(f).ambient(p.coords().data(), v, g, H);
  const auto d = static_cast<Eigen::Index>(p.size());
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(p.coords().data(), d);
  const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(d, d) - x * x.transpose();
  Eigen::MatrixXd A = H;
  A.diagonal().array() -= x.dot(g);
  return P * A * P;
}

}  // namespace heatmorse
