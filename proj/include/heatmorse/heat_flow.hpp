#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "heatmorse/defaults.hpp"
#include "heatmorse/error.hpp"
#include "heatmorse/field.hpp"
#include "heatmorse/jet.hpp"
#include "heatmorse/parallel.hpp"
#include "heatmorse/sampling.hpp"

namespace heatmorse {

/// f_t = sum_j e^{-lambda_j t} h_j, applied coefficientwise.
inline SpectralField propagate(const SpectralField& f, double t) {
  if (!(t >= 0.0)) throw DomainError("backward heat flow not supported (t = " + std::to_string(t) + ")");
  std::vector<double> c = f.coefficients();
  std::vector<long> lambda_cache;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const int level = f.terms()[i].level;
    if (level >= static_cast<int>(lambda_cache.size())) {
      lambda_cache.resize(level + 1, -1);
    }
    if (lambda_cache[level] < 0) lambda_cache[level] = f.eigenvalue_of_level(level);
    c[i] *= std::exp(-static_cast<double>(lambda_cache[level]) * t);
  }
  return f.with_coefficients(c);
}

/// f_0 split as h_0 + h_1 + (rest), with the gap lambda_2 - lambda_1.
class HeatEvolution {
 public:
  explicit HeatEvolution(SpectralField initial)
      : initial_(std::move(initial)),
        h1_(initial_.filtered([](const FieldTerm& t) { return t.level == 1; })),
        lambda1_(static_cast<double>(level_eigenvalue(initial_.manifold(), 1))),
        lambda2_(static_cast<double>(level_eigenvalue(initial_.manifold(), 2))) {
    const SpectralField constant = initial_.filtered([](const FieldTerm& t) { return t.level == 0; });
    if (!constant.empty()) {
      std::vector<double> origin(initial_.manifold().coord_dim(), 0.0);
      if (initial_.manifold().is_sphere()) origin[0] = 1.0;
      h0_ = evaluate(constant, PointOnManifold(initial_.manifold(), origin));
    }
  }

  const SpectralField& initial() const { return initial_; }
  double h0() const { return h0_; }  // value of the constant part
  const SpectralField& h1() const { return h1_; }
  double lambda1() const { return lambda1_; }
  double lambda2() const { return lambda2_; }
  double gap() const { return lambda2_ - lambda1_; }

  /// e^{lambda_1 t}(f_t - h_0) - h_1, formed from the damped higher levels
  /// directly (no cancellation): sum_{j>=2} e^{-(lambda_j - lambda_1) t} h_j.
  SpectralField renormalized_remainder(double t) const {
    if (!(t >= 0.0)) throw DomainError("backward heat flow not supported");
    SpectralField rest = initial_.filtered([](const FieldTerm& x) { return x.level >= 2; });
    std::vector<double> c = rest.coefficients();
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double lam = static_cast<double>(rest.eigenvalue_of_level(rest.terms()[i].level));
      c[i] *= std::exp(-(lam - lambda1_) * t);
    }
    return rest.with_coefficients(c);
  }

 private:
  SpectralField initial_;
  SpectralField h1_;
  double h0_ = 0.0;
  double lambda1_, lambda2_;
};

/// Sampling density for sup norms. Zero members are resolved from the field.
struct GridSpec {
  int torus_per_axis = 0;
  std::size_t sphere_samples = 0;

  static GridSpec for_field(const SpectralField& f) {
    GridSpec g;
    const int m = f.max_frequency();
    g.torus_per_axis = defaults::kTorusGridFactor * (m + 1);
    g.sphere_samples = static_cast<std::size_t>(defaults::kSphereSampleFactor) * (m + 1) * (m + 1);
    return g;
  }

  GridSpec resolved(const SpectralField& f) const {
    GridSpec auto_spec = for_field(f);
    return {torus_per_axis > 0 ? torus_per_axis : auto_spec.torus_per_axis,
            sphere_samples > 0 ? sphere_samples : auto_spec.sphere_samples};
  }

  /// Points per axis (torus) or sample count (sphere).
  long density(const ManifoldSpec& m) const {
    return m.is_torus() ? torus_per_axis : static_cast<long>(sphere_samples);
  }
};

struct CrNormEstimate {
  int r = 0;
  double value = 0.0;
  long grid_density = 0;
};

namespace detail {

inline std::vector<MultiIndex> multi_indices_up_to(int vars, int r) {
  std::vector<MultiIndex> out;
  for (int deg = 0; deg <= r; ++deg)
    for (auto& b : monomials_of_degree(vars, deg)) out.push_back(b);
  return out;
}

/// Max |partial| of order <= r of H restricted to S^n, in the graph chart of
/// the coordinate with the largest |p_i| (so chart radius stays <= sqrt(n/(n+1))).
inline double sphere_chart_max_partial(const SphereEvaluator& ev, const double* p, int r) {
  const int d = ev.dim(), n = ev.n();
  int axis = 0;
  for (int a = 1; a < d; ++a)
    if (std::fabs(p[a]) > std::fabs(p[axis])) axis = a;
  const double sign = p[axis] >= 0.0 ? 1.0 : -1.0;
  const JetSpace& space = JetSpace::get(n, r);

  std::vector<Jet> x;
  x.reserve(d);
  Jet radial(space, 1.0);
  int v = 0;
  for (int a = 0; a < d; ++a) {
    if (a == axis) {
      x.emplace_back(space);
      continue;
    }
    Jet u = Jet::variable(space, v++, p[a]);
    radial = radial - u * u;
    x.push_back(std::move(u));
  }
  x[axis] = sqrt(radial) * sign;

  const int maxe = std::max(ev.max_exponent(), 0);
  std::vector<std::vector<Jet>> pw(d);
  for (int a = 0; a < d; ++a) {
    pw[a].reserve(maxe + 1);
    pw[a].emplace_back(space, 1.0);
    for (int e = 1; e <= maxe; ++e) pw[a].push_back(pw[a].back() * x[a]);
  }
  Jet total(space);
  for (std::size_t t = 0; t < ev.exponents().size(); ++t) {
    const auto& al = ev.exponents()[t];
    Jet term(space, ev.coefficients()[t]);
    for (int a = 0; a < d; ++a)
      if (al[a] > 0) term = term * pw[a][al[a]];
    total += term;
  }
  double best = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) best = std::max(best, std::fabs(total.derivative(i)));
  return best;
}

}  // namespace detail

/// Grid estimate of the C^r norm: max over sample points and partial
/// multi-indices of order <= r. Torus: the periodic coordinate chart. Sphere:
/// the 2(n+1) hemisphere graph charts, each point taken in its dominant chart.
inline CrNormEstimate cr_norm(const SpectralField& f, int r, GridSpec grid = {}, unsigned jobs = 1) {
  if (r < 0) throw DomainError("derivative order must be >= 0");
  grid = grid.resolved(f);
  const ManifoldSpec& m = f.manifold();
  CrNormEstimate est{r, 0.0, grid.density(m)};
  const int d = m.coord_dim();
  std::vector<double> pts =
      m.is_torus() ? torus_grid(m.n(), grid.torus_per_axis) : sphere_samples(m.n(), grid.sphere_samples);
  const std::size_t count = pts.size() / d;
  std::vector<double> local(count, 0.0);
  if (m.is_torus()) {
    const TorusEvaluator ev(f);
    const auto betas = detail::multi_indices_up_to(m.n(), r);
    parallel_for(count, jobs, [&](std::size_t i) { local[i] = ev.max_partial(&pts[i * d], r, betas); });
  } else {
    const SphereEvaluator ev(f);
    parallel_for(count, jobs, [&](std::size_t i) {
      local[i] = r == 0 ? std::fabs(ev.value(&pts[i * d])) : detail::sphere_chart_max_partial(ev, &pts[i * d], r);
    });
  }
  for (double v : local) est.value = std::max(est.value, v);
  return est;
}

/// C^r norm of e^{lambda_1 t}(f_t - h_0) - h_1 on the grid resolved from f_0.
inline CrNormEstimate renormalized_residual(const HeatEvolution& ev, double t, int r, GridSpec grid = {}) {
  if (r < 0) throw DomainError("derivative order must be >= 0");
  grid = grid.resolved(ev.initial());
  return cr_norm(ev.renormalized_remainder(t), r, grid);
}

// ---------------------------------------------------------------------------
// Truncation control

struct TruncationOptions {
  double sphere_constant = defaults::kSphereConstant;
  int cap = defaults::kTruncationCap;
};

struct TruncationResult {
  int level = 1;     // keep levels 0..level
  double bound = 0;  // tail bound for the dropped levels
};

namespace detail {

/// Level-j summand of the tail bound at time t, per unit ||f_0||_{L^2}:
/// torus 2 lambda_j^{r+n} e^{-(lambda_j-lambda_2)t};
/// sphere C_n binom(n+j, n)^{1/2} (1+lambda_j)^{r/2} e^{-(lambda_j-lambda_2)t}.
inline double tail_term(const ManifoldSpec& m, int j, double lambda_j, double lambda_2, double t, int r,
                        double sphere_constant) {
  const int n = m.n();
  const double damp = std::exp(-(lambda_j - lambda_2) * t);
  if (m.is_torus()) return 2.0 * std::pow(lambda_j, r + n) * damp;
  return sphere_constant * std::sqrt(static_cast<double>(binomial(n + j, n))) * std::pow(1.0 + lambda_j, 0.5 * r) *
         damp;
}

}  // namespace detail

/// Bound on ||sum_{j>J} e^{-(lambda_j-lambda_2)t} h_j||_r for any f_0 of the
/// given L^2 norm, valid for t >= 1 (and then also bounding the dropped part of f_t).
inline double tail_bound(const ManifoldSpec& m, double f0_l2, double t, int r, int J,
                         double sphere_constant = defaults::kSphereConstant) {
  if (J < 1) throw DomainError("truncation level must be >= 1");
  if (f0_l2 == 0.0) return 0.0;
  const int n = m.n();
  std::vector<long> lam = m.is_torus() ? torus_spectrum(n, J + 64) : sphere_spectrum(n, J + 64);
  const double lambda2 = static_cast<double>(lam[2]);
  // the summand peaks near lambda = (r+n)/t; past that it decays superexponentially
  const double peak = (r + n) / std::max(t, 1e-300) + 1.0;
  double sum = 0.0;
  for (int j = J + 1;; ++j) {
    if (j >= static_cast<int>(lam.size()))
      lam = m.is_torus() ? torus_spectrum(n, 2 * j) : sphere_spectrum(n, 2 * j);
    const double lj = static_cast<double>(lam[j]);
    const double term = detail::tail_term(m, j, lj, lambda2, t, r, sphere_constant);
    sum += term;
    if (lj > peak && (term == 0.0 || term < 1e-17 * sum)) break;
  }
  return f0_l2 * sum;
}

/// Smallest J >= 1 whose tail bound at t_min is below tol.
inline TruncationResult truncation_level(double f0_l2, double t_min, int r, double tol, const ManifoldSpec& m,
                                         const TruncationOptions& opts = {}) {
  if (!(tol > 0.0)) throw DomainError("truncation tolerance must be > 0");
  if (!(t_min >= 1.0)) throw DomainError("t_min must be >= 1");
  if (r < 0) throw DomainError("derivative order must be >= 0");
  if (f0_l2 == 0.0) return {1, 0.0};
  for (int J = 1; J <= opts.cap; ++J) {
    const double b = tail_bound(m, f0_l2, t_min, r, J, opts.sphere_constant);
    if (b < tol) return {J, b};
  }
  std::ostringstream msg;
  msg << "truncation cap exceeded: J <= " << opts.cap << " only achieves tail bound "
      << tail_bound(m, f0_l2, t_min, r, opts.cap, opts.sphere_constant) << " > tol " << tol;
  throw DomainError(msg.str());
}

/// The part of f_0 that truncation at level J drops, damped to time t in the
/// normalization of the bound: sum_{j>J} e^{-(lambda_j-lambda_2)t} h_j.
inline SpectralField dropped_tail(const SpectralField& f0, int J, double t) {
  SpectralField tail = f0.filtered([J](const FieldTerm& x) { return x.level > J; });
  const double lambda2 = static_cast<double>(level_eigenvalue(f0.manifold(), 2));
  std::vector<double> c = tail.coefficients();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double lam = static_cast<double>(tail.eigenvalue_of_level(tail.terms()[i].level));
    c[i] *= std::exp(-(lam - lambda2) * t);
  }
  return tail.with_coefficients(c);
}

/// Empirical C_n: max over random unit-L^2 harmonics of degree 0..j_max of
/// ||h||_r / (binom(n+j, n)^{1/2} (1+lambda_j)^{r/2}).
inline double calibrate_sphere_constant(int n, int r, int j_max = 6, int samples_per_degree = 8,
                                        std::uint64_t seed = 1) {
  const ManifoldSpec m = ManifoldSpec::sphere(n);
  double best = 0.0;
  for (int j = 0; j <= j_max; ++j) {
    const long dim = harmonic_dimension(n, j);
    for (int s = 0; s < samples_per_degree; ++s) {
      const CounterRng rng(seed, static_cast<std::uint64_t>(j) * 1000003ULL + s);
      std::vector<FieldTerm> terms;
      double norm2 = 0.0;
      for (long i = 0; i < dim; ++i) {
        const double c = rng.normal(static_cast<std::uint64_t>(i));
        norm2 += c * c;
        terms.push_back({j, HarmonicIndex{static_cast<int>(i)}, c});
      }
      SpectralField h(m, std::move(terms));
      h = h.scaled(1.0 / std::sqrt(norm2));
      const double lam = static_cast<double>(sphere_eigenvalue(n, j));
      const double denom = std::sqrt(static_cast<double>(binomial(n + j, n))) * std::pow(1.0 + lam, 0.5 * r);
      best = std::max(best, cr_norm(h, r).value / denom);
    }
  }
  return best;
}

}  // namespace heatmorse
