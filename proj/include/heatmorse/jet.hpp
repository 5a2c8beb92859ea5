#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "heatmorse/sphere.hpp"

namespace heatmorse {

/// Index set for Taylor coefficients in `vars` variables truncated at total
/// order `order`, with the precomputed product table.
class JetSpace {
 public:
  JetSpace(int vars, int order) : vars_(vars), order_(order) {
    for (int deg = 0; deg <= order; ++deg)
      for (auto& b : monomials_of_degree(vars, deg)) betas_.push_back(b);
    for (std::size_t i = 0; i < betas_.size(); ++i) position_[betas_[i]] = i;
    for (std::size_t a = 0; a < betas_.size(); ++a)
      for (std::size_t b = 0; b < betas_.size(); ++b) {
        MultiIndex s(vars);
        int deg = 0;
        for (int v = 0; v < vars; ++v) deg += (s[v] = betas_[a][v] + betas_[b][v]);
        if (deg <= order) products_.emplace_back(a, b, position_.at(s));
      }
    factorials_.resize(betas_.size());
    for (std::size_t i = 0; i < betas_.size(); ++i) {
      double f = 1.0;
      for (int e : betas_[i])
        for (int m = 2; m <= e; ++m) f *= m;
      factorials_[i] = f;
    }
  }

  static const JetSpace& get(int vars, int order) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::unique_ptr<JetSpace>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{vars, order}];
    if (!slot) slot = std::make_unique<JetSpace>(vars, order);
    return *slot;
  }

  int vars() const { return vars_; }
  int order() const { return order_; }
  std::size_t size() const { return betas_.size(); }
  const std::vector<MultiIndex>& betas() const { return betas_; }
  const std::vector<std::tuple<std::size_t, std::size_t, std::size_t>>& products() const { return products_; }
  /// beta! for converting Taylor coefficients to partial derivatives.
  double factorial(std::size_t i) const { return factorials_[i]; }
  std::size_t position(const MultiIndex& b) const { return position_.at(b); }

 private:
  int vars_, order_;
  std::vector<MultiIndex> betas_;
  std::map<MultiIndex, std::size_t> position_;
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> products_;
  std::vector<double> factorials_;
};

/// Truncated multivariate Taylor expansion about a point; coefficient i
/// multiplies delta^{beta_i}.
class Jet {
 public:
  explicit Jet(const JetSpace& space, double constant = 0.0) : space_(&space), c_(space.size(), 0.0) {
    c_[0] = constant;
  }

  static Jet variable(const JetSpace& space, int v, double at) {
    Jet j(space, at);
    if (space.order() >= 1) {
      MultiIndex e(space.vars(), 0);
      e[v] = 1;
      j.c_[space.position(e)] = 1.0;
    }
    return j;
  }

  double constant() const { return c_[0]; }
  double coeff(std::size_t i) const { return c_[i]; }
  const JetSpace& space() const { return *space_; }

  /// Partial derivative d^{beta_i} at the expansion point.
  double derivative(std::size_t i) const { return c_[i] * space_->factorial(i); }

  Jet& operator+=(const Jet& o) {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  Jet& operator*=(double s) {
    for (double& x : c_) x *= s;
    return *this;
  }
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator-(const Jet& a, const Jet& b) { return a + b * -1.0; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet out(*a.space_);
    for (const auto& [i, k, dst] : a.space_->products()) out.c_[dst] += a.c_[i] * b.c_[k];
    return out;
  }

  /// sqrt of a jet with positive constant term, via the binomial series
  /// sqrt(a0) sum_m binom(1/2, m) (h/a0)^m with h the nonconstant part.
  friend Jet sqrt(const Jet& x) {
    const double a0 = x.c_[0];
    Jet h = x;
    h.c_[0] = 0.0;
    h *= 1.0 / a0;
    Jet out(*x.space_, 1.0);
    Jet power(*x.space_, 1.0);
    double binom = 1.0;
    for (int m = 1; m <= x.space_->order(); ++m) {
      binom *= (0.5 - (m - 1)) / m;
      power = power * h;
      out += power * binom;
    }
    return out * std::sqrt(a0);
  }

 private:
  const JetSpace* space_;
  std::vector<double> c_;
};

}  // namespace heatmorse
