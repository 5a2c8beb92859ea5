// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "heatmorse/heatmorse.hpp"
#include "oracles.hpp"

using namespace heatmorse;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void run(int id, const char* title, double limit_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs > limit_s) {
    o.pass = false;
    o.detail += " [over time limit " + std::to_string(limit_s) + " s]";
  }
  if (!o.pass) ++failures;
  std::printf("AC%-2d %s  %s (%.2f s)  %s\n", id, o.pass ? "PASS" : "FAIL", title, secs, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const std::vector<ManifoldSpec> kAllFive = {ManifoldSpec::torus(1), ManifoldSpec::torus(2), ManifoldSpec::torus(3),
                                            ManifoldSpec::sphere(1), ManifoldSpec::sphere(2)};

Outcome spectrum_correctness() {
  for (int n = 1; n <= 3; ++n) {
    const auto brute = oracle::brute_force_spectrum(n, 200);
    const auto got = torus_spectrum(n, static_cast<int>(brute.size()) + 1);
    if (!std::equal(brute.begin(), brute.end(), got.begin()) || got.back() < 200)
      return {false, "mismatch on T^" + std::to_string(n)};
  }
  return {true, "exact match for n = 1, 2, 3 below 200"};
}

Outcome eigenspace_dimensions() {
  double worst = 0.0;
  for (int n = 1; n <= 3; ++n)
    for (int j = 0; j <= 6; ++j) {
      const auto basis = harmonic_basis(n, j);
      const long expected = binomial(n + j, n) - binomial(n + j - 2, n);
      if (static_cast<long>(basis.size()) != expected)
        return {false, "S^" + std::to_string(n) + " level " + std::to_string(j) + " has " +
                           std::to_string(basis.size()) + " elements, expected " + std::to_string(expected)};
      for (std::size_t a = 0; a < basis.size(); ++a)
        for (std::size_t b = 0; b < basis.size(); ++b)
          worst = std::max(worst, std::fabs(sphere_inner_product(basis[a], basis[b]) - (a == b ? 1.0 : 0.0)));
    }
  return {worst <= 1e-10, "max |G - I| = " + fmt("%.3g", worst)};
}

Outcome eigenfunction_residual() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> gauss;
  double worst = 0.0;
  const std::vector<ManifoldSpec> spaces = {ManifoldSpec::torus(1),  ManifoldSpec::torus(2),  ManifoldSpec::torus(3),
                                            ManifoldSpec::sphere(1), ManifoldSpec::sphere(2), ManifoldSpec::sphere(3)};
  for (const auto& m : spaces) {
    const int n = m.n();
    const auto lambdas = m.is_torus() ? torus_spectrum(n, 7) : sphere_spectrum(n, 7);
    for (int trial = 0; trial < 20; ++trial) {
      const int j = 1 + static_cast<int>(rng() % 5);
      SpectralField phi = [&] {
        if (m.is_torus()) {
          const auto modes = torus_modes(n, lambdas[j]);
          return SpectralField(m, {{j, modes[rng() % modes.size()], 1.0}});
        }
        const long dim = harmonic_dimension(n, j);
        return SpectralField(m, {{j, HarmonicIndex{static_cast<int>(rng() % dim)}, 1.0}});
      }();
      const double lambda = static_cast<double>(lambdas[j]);
      double num = 0.0, den = 0.0;
      for (int s = 0; s < 16; ++s) {
        double lap, val;
        if (m.is_torus()) {
          std::vector<double> x(n);
          for (double& v : x) v = angle(rng);
          lap = oracle::torus_fd_laplacian(phi, x);
          val = evaluate(phi, PointOnManifold(m, x));
        } else {
          Eigen::VectorXd p(n + 1);
          for (int i = 0; i <= n; ++i) p[i] = gauss(rng);
          p.normalize();
          lap = oracle::sphere_fd_laplacian(phi, p);
          val = evaluate(phi, PointOnManifold(m, std::vector<double>(p.data(), p.data() + n + 1)));
        }
        num += (lap + lambda * val) * (lap + lambda * val);
        den += (lambda * val) * (lambda * val);
      }
      worst = std::max(worst, std::sqrt(num / den));
    }
  }
  return {worst < 1e-5, "max relative residual " + fmt("%.3g", worst) + " over 120 basis elements"};
}

Outcome lemma1_reproduction() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> gauss;
  double worst_loc = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 3;
    std::vector<double> a(n), b(n);
    for (int k = 0; k < n; ++k) a[k] = gauss(rng), b[k] = gauss(rng);
    const auto want = e1_torus_oracle(a, b);
    const auto got = find_critical_points(e1_torus_field(a, b));
    const auto m = ManifoldSpec::torus(n);
    if (!got.is_morse || got.count != (1L << n) || static_cast<long>(want.points.size()) != got.count)
      return {false, "trial " + std::to_string(trial) + ": count " + std::to_string(got.count)};
    for (const auto& w : want.points) {
      const CriticalPoint* best = nullptr;
      double d = INFINITY;
      for (const auto& p : got.points)
        if (double e = manifold_distance(m, w.location, p.location); e < d) d = e, best = &p;
      worst_loc = std::max(worst_loc, d);
      if (d > 1e-8 || best->morse_index != w.morse_index)
        return {false, "trial " + std::to_string(trial) + ": location error " + fmt("%.3g", d)};
    }
  }
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 3;
    std::vector<double> a(n), b(n);
    for (int k = 0; k < n; ++k) a[k] = gauss(rng), b[k] = gauss(rng);
    const int dead = static_cast<int>(rng() % n);
    a[dead] = b[dead] = 0.0;
    if (e1_torus_oracle(a, b).morse) return {false, "oracle missed a degenerate axis"};
    if (n == 1) continue;  // the zero field has no census
    if (find_critical_points(e1_torus_field(a, b)).is_morse)
      return {false, "degenerate trial " + std::to_string(trial) + " reported Morse"};
  }
  return {true, "100/100 fields match; max location error " + fmt("%.3g", worst_loc) + "; 20 degenerate fields rejected"};
}

Outcome worked_transition() {
  const auto f = torus_field(1, {{{1}, Phase::Cos, 1.0}, {{2}, Phase::Cos, 1.0}});
  const auto r = transition_time(f);
  const double target = std::log(4.0) / 3.0;
  if (!r.T_estimate) return {false, "not reached"};
  const double err = std::fabs(*r.T_estimate - target);
  return {err <= 1e-3, "T = " + fmt("%.6f", *r.T_estimate) + ", |T - ln(4)/3| = " + fmt("%.2g", err)};
}

Outcome decay_slopes() {
  const std::vector<ManifoldSpec> spaces = {ManifoldSpec::torus(1), ManifoldSpec::torus(2), ManifoldSpec::sphere(1),
                                            ManifoldSpec::sphere(2)};
  double worst = 0.0;
  for (const auto& m : spaces) {
    int used = 0;
    for (std::uint64_t seed = 1000; used < 20; ++seed) {
      const auto f0 = random_field(seed, m, 2, defaults::kRandomDecay);
      if (!is_generic(f0).generic) continue;
      ++used;
      const auto fit = decay_fit(f0, 0);
      worst = std::max(worst, fit.relative_error);
    }
  }
  const auto fit = decay_fit(torus_field(1, {{{1}, Phase::Cos, 1.0}, {{2}, Phase::Cos, 1.0}}), 0);
  const double worked = std::fabs(fit.slope + 3.0) / 3.0;
  return {worst < 0.05 && worked < 0.01,
          "max relative error " + fmt("%.3g", worst) + " over 80 fields; worked slope " + fmt("%.6f", fit.slope)};
}

Outcome headline_sweeps() {
  std::ostringstream detail;
  bool ok = true;
  for (const auto& m : kAllFive) {
    const auto s = genericity_sweep(0, 100, m);
    long generic = 0, good = 0;
    for (const auto& row : s.rows)
      if (row.generic) {
        ++generic;
        good += row.minimal && row.count == m.betti_sum();
      }
    ok = ok && generic > 0 && good == generic;
    detail << m.name() << " " << good << "/" << generic << "  ";
  }
  return {ok, detail.str()};
}

Outcome genericity_necessity() {
  const auto r = transition_time(torus_field(1, {{{2}, Phase::Cos, 1.0}}));
  bool all_four = true;
  for (long c : r.counts) all_four = all_four && c == 4;
  return {!r.T_estimate && all_four && r.t_grid.back() == 10.0,
          std::to_string(r.counts.size()) + " sampled times up to t = 10, all count 4, never minimal"};
}

Outcome stability() {
  const auto f = torus_field(2, {{{1, 0}, Phase::Cos, 1.0}, {{0, 1}, Phase::Cos, 1.0}});
  const auto r = stability_probe(f, {0.01}, 50, 12345);
  bool all_four = true;
  for (long c : r.counts[0]) all_four = all_four && c == 4;
  return {all_four && r.agreement[0] == 1.0, "agreement " + fmt("%.2f", r.agreement[0]) + " over 50 perturbations"};
}

Outcome truncation_soundness() {
  const std::vector<ManifoldSpec> spaces = {ManifoldSpec::torus(1),  ManifoldSpec::torus(2),  ManifoldSpec::torus(3),
                                            ManifoldSpec::sphere(1), ManifoldSpec::sphere(2), ManifoldSpec::sphere(3)};
  double worst = 0.0;
  long checks = 0;
  for (const auto& m : spaces) {
    const int j_max = m.n() == 3 ? 4 : 6;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto f0 = random_field(500 + seed, m, j_max, 0.5);
      for (int J : {1, 2, 3})
        for (double t : {1.0, 1.5})
          for (int r : {0, 1, 2}) {
            const double actual = cr_norm(dropped_tail(f0, J, t), r).value;
            const double bound = tail_bound(m, f0.l2_norm(), t, r, J);
            worst = std::max(worst, actual / bound);
            ++checks;
          }
    }
  }
  return {worst <= 1.0, std::to_string(checks) + " checks; max norm/bound " + fmt("%.3g", worst)};
}

}  // namespace

int main() {
  run(1, "spectrum correctness", 1, spectrum_correctness);
  run(2, "eigenspace dimensions and orthonormality", 10, eigenspace_dimensions);
  run(3, "eigenfunction residual", 30, eigenfunction_residual);
  run(4, "first-eigenspace torus census vs closed form", 60, lemma1_reproduction);
  run(5, "worked transition time", 5, worked_transition);
  run(6, "decay slopes", 60, decay_slopes);
  run(7, "genericity sweeps reach minimal Morse by t = 5", 600, headline_sweeps);
  run(8, "non-generic cos 2x never minimal", 60, genericity_necessity);
  run(9, "stability under C^0 perturbations of size 0.01", 60, stability);
  run(10, "truncation tail bounds", 120, truncation_soundness);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
