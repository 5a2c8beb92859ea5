#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "heatmorse/defaults.hpp"
#include "heatmorse/error.hpp"
#include "heatmorse/field.hpp"
#include "heatmorse/parallel.hpp"
#include "heatmorse/sampling.hpp"

namespace heatmorse {

struct CensusOptions {
  double grad_tol = defaults::kGradTol;
  double merge_tol = defaults::kMergeTol;
  double deg_tol = defaults::kDegTol;
  double borderline_factor = defaults::kBorderlineFactor;
  int max_iter = defaults::kMaxNewtonIter;
  double torus_seed_factor = defaults::kTorusSeedFactor;
  double sphere_seed_factor = defaults::kSphereSeedFactor;
  unsigned jobs = 1;
};

inline nlohmann::json to_json(const CensusOptions& o) {
  return {{"grad_tol", o.grad_tol},
          {"merge_tol", o.merge_tol},
          {"deg_tol", o.deg_tol},
          {"borderline_factor", o.borderline_factor},
          {"max_iter", o.max_iter},
          {"torus_seed_factor", o.torus_seed_factor},
          {"sphere_seed_factor", o.sphere_seed_factor}};
}

enum class Confidence { Complete, Suspect };

inline std::string to_string(Confidence c) { return c == Confidence::Complete ? "complete" : "suspect"; }

struct CriticalPoint {
  std::vector<double> location;  // torus angles in [0, 2pi) or a unit vector
  double grad_residual = 0.0;
  std::vector<double> hessian_eigenvalues;  // ascending, intrinsic
  int morse_index = 0;
  bool nondegenerate = true;
};

struct MorseReport {
  std::vector<CriticalPoint> points;
  bool is_morse = false;
  long count = 0;
  std::map<int, long> index_histogram;
  bool is_minimal = false;
  long betti_sum = 0;
  Confidence confidence = Confidence::Complete;
  // diagnostics (not serialized)
  int seeds = 0;
  int unresolved_runs = 0;
  std::vector<std::string> notes;
};

inline nlohmann::json to_json(const MorseReport& r) {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [i, c] : r.index_histogram) hist[std::to_string(i)] = c;
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : r.points)
    pts.push_back({{"location", p.location},
                   {"index", p.morse_index},
                   {"grad_residual", p.grad_residual},
                   {"hessian_eigenvalues", p.hessian_eigenvalues}});
  return {{"count", r.count},           {"is_morse", r.is_morse},
          {"is_minimal", r.is_minimal}, {"betti_sum", r.betti_sum},
          {"index_histogram", hist},    {"confidence", to_string(r.confidence)},
          {"points", pts}};
}

// ---------------------------------------------------------------------------
// Levenberg-Marquardt-safeguarded Newton on the gradient system

struct NewtonSettings {
  double tol = 1e-10;
  int max_iter = 100;
  double max_step = 0.5;
};

struct NewtonOutcome {
  enum class Status { Converged, Stalled, MaxIter };
  std::vector<double> x;
  double grad_norm = 0.0;
  Status status = Status::MaxIter;
};

/// Problem concept: eval(x) -> Local{g, H, ...} in tangent coordinates at x;
/// retract(x, local, step) -> new point.
template <class Problem>
NewtonOutcome newton_solve(const Problem& problem, std::vector<double> x, const NewtonSettings& s) {
  using Status = NewtonOutcome::Status;
  auto local = problem.eval(x);
  double gn = local.g.norm();
  double mu = 0.0;
  int it = 0;
  for (; it < s.max_iter; ++it) {
    if (!std::isfinite(gn)) return {x, gn, Status::Stalled};
    if (gn <= s.tol) break;
    const Eigen::MatrixXd& H = local.H;
    const Eigen::MatrixXd HtH = H.transpose() * H;
    const double scale = std::max(HtH.diagonal().maxCoeff(), 1e-300);
    Eigen::VectorXd step;
    if (mu == 0.0) {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(H);
      if (lu.isInvertible()) {
        step = -lu.solve(local.g);
      } else {
        mu = 1e-12 * scale;
      }
    }
    if (mu > 0.0) {
      Eigen::MatrixXd A = HtH;
      A.diagonal().array() += mu;
      step = -A.ldlt().solve(H.transpose() * local.g);
    }
    const double len = step.norm();
    if (!std::isfinite(len)) return {x, gn, Status::Stalled};
    if (len > s.max_step) step *= s.max_step / len;
    auto x_new = problem.retract(x, local, step);
    auto local_new = problem.eval(x_new);
    const double gn_new = local_new.g.norm();
    if (gn_new < gn) {
      x = std::move(x_new);
      local = std::move(local_new);
      gn = gn_new;
      mu = mu < 1e-14 * scale ? 0.0 : mu / 10.0;
    } else {
      mu = std::max(10.0 * mu, 1e-10 * scale);
      if (mu > 1e12 * scale) return {x, gn, Status::Stalled};
    }
  }
  if (gn > s.tol) return {x, gn, Status::MaxIter};
  // one polishing Newton step toward machine precision
  Eigen::FullPivLU<Eigen::MatrixXd> lu(local.H);
  if (lu.isInvertible()) {
    auto x_new = problem.retract(x, local, -lu.solve(local.g));
    auto local_new = problem.eval(x_new);
    if (local_new.g.norm() < gn) {
      x = std::move(x_new);
      gn = local_new.g.norm();
    }
  }
  return {x, gn, Status::Converged};
}

namespace detail {

struct LocalDerivatives {
  Eigen::VectorXd g;
  Eigen::MatrixXd H;
  Eigen::MatrixXd frame;  // sphere only
};

struct TorusProblem {
  const TorusEvaluator* ev;
  LocalDerivatives eval(const std::vector<double>& x) const {
    LocalDerivatives d;
    double v;
    ev->value_gradient_hessian(x.data(), v, d.g, d.H);
    return d;
  }
  std::vector<double> retract(const std::vector<double>& x, const LocalDerivatives&, const Eigen::VectorXd& s) const {
    std::vector<double> y(x);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = PointOnManifold::wrap_angle(y[i] + s(static_cast<Eigen::Index>(i)));
    return y;
  }
};

struct SphereProblem {
  const SphereEvaluator* ev;
  LocalDerivatives eval(const std::vector<double>& x) const {
    LocalDerivatives d;
    const Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    d.frame = tangent_frame(p);
    double v;
    sphere_intrinsic(*ev, p, d.frame, v, d.g, d.H);
    return d;
  }
  std::vector<double> retract(const std::vector<double>& x, const LocalDerivatives& d, const Eigen::VectorXd& s) const {
    Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    p += d.frame * s;
    p.normalize();
    return {p.data(), p.data() + p.size()};
  }
};

struct Root {
  std::vector<double> x;
  double grad_norm;
};

}  // namespace detail

/// Number of Newton seeds the census uses for f.
inline std::size_t census_seed_count(const SpectralField& f, const CensusOptions& opts = {}) {
  const ManifoldSpec& m = f.manifold();
  const int freq = f.max_frequency();
  if (m.is_torus()) {
    const auto per_axis = static_cast<std::size_t>(std::ceil(opts.torus_seed_factor * (freq + 1)));
    std::size_t total = 1;
    for (int a = 0; a < m.n(); ++a) total *= per_axis;
    return total;
  }
  return static_cast<std::size_t>(std::ceil(opts.sphere_seed_factor * (freq + 1) * (freq + 1)));
}

/// Dense multi-start Newton census of the critical points of f, with
/// dedup, Hessian classification and Morse/minimality verdicts.
///
/// Tolerances are relative: the gradient test runs on f / max|coeff|, and the
/// degeneracy threshold is deg_tol times the largest Hessian entry seen at the
/// seeds. Reported residuals and eigenvalues are in the units of f.
inline MorseReport find_critical_points(const SpectralField& f, const CensusOptions& opts = {}) {
  if (f.is_constant()) throw DomainError("no isolated critical points: field is constant");
  const ManifoldSpec& m = f.manifold();
  const int n = m.n(), d = m.coord_dim();
  const double scale = f.max_abs_coefficient();
  const SpectralField unit = f.scaled(1.0 / scale);
  const int freq = unit.max_frequency();

  MorseReport report;
  report.betti_sum = m.betti_sum();

  std::vector<double> seeds;
  if (m.is_torus()) {
    seeds = torus_grid(n, static_cast<int>(std::ceil(opts.torus_seed_factor * (freq + 1))));
  } else {
    seeds = sphere_samples(n, census_seed_count(unit, opts));
  }
  const std::size_t seed_count = seeds.size() / d;
  report.seeds = static_cast<int>(seed_count);

  NewtonSettings ns;
  ns.tol = opts.grad_tol;
  ns.max_iter = opts.max_iter;
  ns.max_step = std::numbers::pi / (4.0 * (freq + 1));

  std::vector<NewtonOutcome> outcomes(seed_count);
  std::vector<double> hess_seen(seed_count, 0.0);
  std::optional<TorusEvaluator> tev;
  std::optional<SphereEvaluator> sev;
  if (m.is_torus())
    tev.emplace(unit);
  else
    sev.emplace(unit);

  auto run = [&](const auto& problem) {
    parallel_for(seed_count, opts.jobs, [&](std::size_t i) {
      std::vector<double> x0(seeds.begin() + static_cast<long>(i * d), seeds.begin() + static_cast<long>((i + 1) * d));
      hess_seen[i] = problem.eval(x0).H.cwiseAbs().maxCoeff();
      outcomes[i] = newton_solve(problem, std::move(x0), ns);
    });
  };
  if (tev)
    run(detail::TorusProblem{&*tev});
  else
    run(detail::SphereProblem{&*sev});

  const double hess_scale = std::max(*std::max_element(hess_seen.begin(), hess_seen.end()), 1e-300);
  const double deg_threshold = opts.deg_tol * hess_scale;
  const double near_ghost = std::sqrt(opts.grad_tol);

  std::vector<detail::Root> roots;
  for (const auto& o : outcomes) {
    switch (o.status) {
      case NewtonOutcome::Status::Converged:
        roots.push_back({o.x, o.grad_norm});
        break;
      case NewtonOutcome::Status::MaxIter:
      case NewtonOutcome::Status::Stalled:
        // runs parked at a positive local minimum of |grad f| are expected;
        // only a run that ends close to a root is suspicious
        if (o.grad_norm < near_ghost) ++report.unresolved_runs;
        break;
    }
  }
  if (report.unresolved_runs > 0) {
    report.confidence = Confidence::Suspect;
    report.notes.push_back(std::to_string(report.unresolved_runs) + " Newton runs unresolved");
  }

  // canonical order makes the merge independent of seed order and threads
  std::sort(roots.begin(), roots.end(), [](const detail::Root& a, const detail::Root& b) { return a.x < b.x; });
  std::vector<detail::Root> reps;
  bool borderline_merge = false;
  for (auto& r : roots) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < reps.size(); ++i) {
      const double dist = manifold_distance(m, r.x, reps[i].x);
      if (dist < best) best = dist, best_i = i;
    }
    if (best < opts.merge_tol) {
      if (r.grad_norm < reps[best_i].grad_norm) reps[best_i] = r;
    } else {
      if (best < 100.0 * opts.merge_tol) borderline_merge = true;
      reps.push_back(r);
    }
  }
  if (borderline_merge) {
    report.confidence = Confidence::Suspect;
    report.notes.push_back("distinct roots closer than 100 * merge_tol");
  }
  std::sort(reps.begin(), reps.end(), [](const detail::Root& a, const detail::Root& b) { return a.x < b.x; });

  bool borderline_degeneracy = false;
  for (const auto& r : reps) {
    CriticalPoint cp;
    cp.location = r.x;
    Eigen::MatrixXd H;
    if (tev) {
      H = detail::TorusProblem{&*tev}.eval(r.x).H;
    } else {
      H = detail::SphereProblem{&*sev}.eval(r.x).H;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()), Eigen::EigenvaluesOnly);
    double min_abs = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      const double e = es.eigenvalues()(i);
      cp.hessian_eigenvalues.push_back(e * scale);
      if (e < 0.0) ++cp.morse_index;
      min_abs = std::min(min_abs, std::fabs(e));
    }
    cp.nondegenerate = min_abs > deg_threshold;
    if (min_abs <= opts.borderline_factor * deg_threshold) borderline_degeneracy = true;
    cp.grad_residual = r.grad_norm * scale;
    report.points.push_back(std::move(cp));
  }
  if (borderline_degeneracy) {
    report.confidence = Confidence::Suspect;
    report.notes.push_back("Hessian eigenvalue within borderline factor of deg_tol");
  }

  report.count = static_cast<long>(report.points.size());
  report.is_morse = report.count > 0;
  for (const auto& p : report.points) {
    report.is_morse = report.is_morse && p.nondegenerate;
    ++report.index_histogram[p.morse_index];
  }
  report.is_minimal = report.is_morse && report.count == report.betti_sum;

  if (report.is_morse) {
    long euler = 0;
    bool weak_ok = true;
    for (int i = 0; i <= n; ++i) {
      const long c = report.index_histogram.contains(i) ? report.index_histogram.at(i) : 0;
      euler += (i % 2 == 0 ? c : -c);
      weak_ok = weak_ok && c >= m.betti(i);
    }
    if (!weak_ok || euler != m.euler_characteristic()) {
      report.confidence = Confidence::Suspect;
      report.notes.push_back("index counts violate the Morse inequalities; census likely incomplete");
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Closed-form answers for first-eigenspace fields

struct OracleResult {
  bool morse = false;
  std::string reason;
  std::vector<CriticalPoint> points;
};

/// Critical points of h = sum_k a_k cos x_k + b_k sin x_k. Each axis
/// contributes its maximum theta_k = atan2(b_k, a_k) and minimum theta_k + pi,
/// giving 2^n points; the index counts the axes sitting at their maximum.
inline OracleResult e1_torus_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw DomainError("oracle needs equal-length nonempty a, b");
  const int n = static_cast<int>(a.size());
  OracleResult out;
  for (int k = 0; k < n; ++k)
    if (a[k] * a[k] + b[k] * b[k] == 0.0) {
      out.reason = "not Morse: a_" + std::to_string(k + 1) + "^2 + b_" + std::to_string(k + 1) + "^2 = 0";
      return out;
    }
  out.morse = true;
  out.reason = "Morse: every axis has a nonzero first harmonic";
  for (long mask = 0; mask < (1L << n); ++mask) {
    CriticalPoint cp;
    for (int k = 0; k < n; ++k) {
      const bool at_min = (mask >> k) & 1;
      const double amp = std::hypot(a[k], b[k]);
      cp.location.push_back(PointOnManifold::wrap_angle(std::atan2(b[k], a[k]) + (at_min ? std::numbers::pi : 0.0)));
      cp.hessian_eigenvalues.push_back(at_min ? amp : -amp);
      if (!at_min) ++cp.morse_index;
    }
    std::sort(cp.hessian_eigenvalues.begin(), cp.hessian_eigenvalues.end());
    out.points.push_back(std::move(cp));
  }
  std::sort(out.points.begin(), out.points.end(),
            [](const CriticalPoint& p, const CriticalPoint& q) { return p.location < q.location; });
  return out;
}

/// The linear form a.x on S^n: maximum a/|a| (index n), minimum -a/|a| (index 0).
inline OracleResult e1_sphere_oracle(const std::vector<double>& a) {
  if (a.size() < 2) throw DomainError("linear form needs n+1 >= 2 coefficients");
  const int n = static_cast<int>(a.size()) - 1;
  OracleResult out;
  double norm = 0.0;
  for (double v : a) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    out.reason = "degenerate: zero linear form";
    return out;
  }
  out.morse = true;
  out.reason = "Morse: nonzero linear form";
  for (double s : {1.0, -1.0}) {
    CriticalPoint cp;
    for (double v : a) cp.location.push_back(s * v / norm);
    // intrinsic Hessian at +-a/|a| is -(p . a) I
    cp.hessian_eigenvalues.assign(n, -s * norm);
    cp.morse_index = s > 0 ? n : 0;
    out.points.push_back(std::move(cp));
  }
  return out;
}

struct GenericityVerdict {
  bool generic = false;
  std::string reason;
};

/// Torus: first-harmonic coefficients (a_k, b_k) of cos x_k, sin x_k in f.
inline std::pair<std::vector<double>, std::vector<double>> torus_e1_coefficients(const SpectralField& f) {
  const int n = f.manifold().n();
  std::vector<double> a(n, 0.0), b(n, 0.0);
  for (const auto& t : f.terms()) {
    if (t.level != 1) continue;
    const auto& mode = std::get<TorusMode>(t.element);
    for (int k = 0; k < n; ++k)
      if (mode.k[k] == 1) (mode.phase == Phase::Cos ? a : b)[k] += t.coeff;
  }
  return {a, b};
}

/// Sphere: the linear form a with E_1 projection a.x.
inline std::vector<double> sphere_e1_linear_form(const SpectralField& f) {
  const int n = f.manifold().n();
  std::vector<double> a(n + 1, 0.0);
  const auto& basis = harmonic_basis_cached(n, 1);
  for (const auto& t : f.terms()) {
    if (t.level != 1) continue;
    const auto& h = basis[std::get<HarmonicIndex>(t.element).value];
    for (int i = 0; i <= n; ++i) {
      MultiIndex e(n + 1, 0);
      e[i] = 1;
      a[i] += t.coeff * h.coefficient(e);
    }
  }
  return a;
}

/// Whether the E_1 projection of f0 is minimal Morse.
inline GenericityVerdict is_generic(const SpectralField& f0) {
  if (f0.manifold().is_torus()) {
    const auto [a, b] = torus_e1_coefficients(f0);
    for (std::size_t k = 0; k < a.size(); ++k)
      if (a[k] * a[k] + b[k] * b[k] == 0.0)
        return {false, "E1 projection vanishes on axis " + std::to_string(k + 1) + ": a_" + std::to_string(k + 1) +
                           "^2 + b_" + std::to_string(k + 1) + "^2 = 0"};
    return {true, "E1 projection is minimal Morse on every axis"};
  }
  const auto a = sphere_e1_linear_form(f0);
  if (std::all_of(a.begin(), a.end(), [](double v) { return v == 0.0; }))
    return {false, "E1 projection (linear form) is zero"};
  return {true, "E1 projection is a nonzero linear form"};
}

}  // namespace heatmorse
