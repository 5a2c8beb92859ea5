#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "heatmorse/error.hpp"

namespace heatmorse {

enum class ManifoldKind { Torus, Sphere };

inline std::string to_string(ManifoldKind kind) {
  return kind == ManifoldKind::Torus ? "torus" : "sphere";
}

inline ManifoldKind manifold_kind_from_string(const std::string& s) {
  if (s == "torus") return ManifoldKind::Torus;
  if (s == "sphere") return ManifoldKind::Sphere;
  throw DomainError("unknown manifold kind '" + s + "' (expected torus or sphere)");
}

/// Flat torus T^n = R^n / (2 pi Z)^n or round unit sphere S^n in R^{n+1}.
class ManifoldSpec {
 public:
  ManifoldSpec(ManifoldKind kind, int n) : kind_(kind), n_(n) {
    if (n < 1) throw DomainError("manifold dimension must be >= 1");
  }

  static ManifoldSpec torus(int n) { return {ManifoldKind::Torus, n}; }
  static ManifoldSpec sphere(int n) { return {ManifoldKind::Sphere, n}; }

  ManifoldKind kind() const { return kind_; }
  int n() const { return n_; }
  bool is_torus() const { return kind_ == ManifoldKind::Torus; }
  bool is_sphere() const { return kind_ == ManifoldKind::Sphere; }

  /// Length of a point's coordinate vector: n angles on the torus, n+1
  /// ambient coordinates on the sphere.
  int coord_dim() const { return is_torus() ? n_ : n_ + 1; }

  /// Sum of Betti numbers; the minimal number of critical points of any
  /// Morse function on the manifold.
  long betti_sum() const { return is_torus() ? (1L << n_) : 2L; }

  /// Betti number b_i.
  long betti(int i) const {
    if (i < 0 || i > n_) return 0;
    if (is_sphere()) return (i == 0 || i == n_) ? 1 : 0;
    long b = 1;  // binomial(n, i)
    for (int m = 1; m <= i; ++m) b = b * (n_ - i + m) / m;
    return b;
  }

  long euler_characteristic() const {
    long chi = 0;
    for (int i = 0; i <= n_; ++i) chi += (i % 2 == 0 ? 1 : -1) * betti(i);
    return chi;
  }

  double volume() const {
    if (is_torus()) return std::pow(2.0 * std::numbers::pi, n_);
    // |S^n| = 2 pi^{(n+1)/2} / Gamma((n+1)/2)
    const double h = 0.5 * (n_ + 1);
    return 2.0 * std::pow(std::numbers::pi, h) / std::tgamma(h);
  }

  std::string name() const {
    return (is_torus() ? "T^" : "S^") + std::to_string(n_);
  }

  friend bool operator==(const ManifoldSpec&, const ManifoldSpec&) = default;

 private:
  ManifoldKind kind_;
  int n_;
};

inline long betti_sum(const ManifoldSpec& m) { return m.betti_sum(); }

/// A point of T^n (angles reduced into [0, 2 pi)) or S^n (unit vector).
class PointOnManifold {
 public:
  PointOnManifold(const ManifoldSpec& m, std::vector<double> coords) : coords_(std::move(coords)) {
    if (static_cast<int>(coords_.size()) != m.coord_dim())
      throw DomainError("point has " + std::to_string(coords_.size()) + " coordinates, " + m.name() +
                        " needs " + std::to_string(m.coord_dim()));
    if (m.is_torus()) {
      for (double& x : coords_) x = wrap_angle(x);
    } else {
      double norm2 = 0.0;
      for (double x : coords_) norm2 += x * x;
      const double norm = std::sqrt(norm2);
      if (norm == 0.0) throw DomainError("sphere point cannot be the origin");
      for (double& x : coords_) x /= norm;
    }
  }

  const std::vector<double>& coords() const { return coords_; }
  double operator[](std::size_t i) const { return coords_[i]; }
  std::size_t size() const { return coords_.size(); }

  static double wrap_angle(double x) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double y = std::fmod(x, two_pi);
    if (y < 0.0) y += two_pi;
    if (y >= two_pi) y -= two_pi;
    return y;
  }

 private:
  std::vector<double> coords_;
};

/// Torus: Euclidean distance between nearest lifts. Sphere: great-circle angle.
inline double manifold_distance(const ManifoldSpec& m, const std::vector<double>& a,
                                const std::vector<double>& b) {
  if (m.is_torus()) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      double d = std::fabs(a[i] - b[i]);
      d = std::fmod(d, two_pi);
      d = std::min(d, two_pi - d);
      s += d * d;
    }
    return std::sqrt(s);
  }
  // atan2 form stays accurate for nearly identical and nearly antipodal points
  double dot = 0.0, cross2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = b[i] - dot * a[i];
    cross2 += d * d;
  }
  return std::atan2(std::sqrt(cross2), dot);
}

}  // namespace heatmorse
