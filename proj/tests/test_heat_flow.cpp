#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "heatmorse/heatmorse.hpp"
#include "oracles.hpp"

using namespace heatmorse;

namespace {

SpectralField mix_field() { return torus_field(1, {{{1}, Phase::Cos, 1.0}, {{2}, Phase::Cos, 1.0}}); }

std::vector<double> coefficient_vector(const SpectralField& f) { return f.coefficients(); }

}  // namespace

TEST(Propagate, ZeroTimeIsIdentity) {
  const auto f = random_field(3, ManifoldSpec::sphere(2), 3, 1.0);
  EXPECT_TRUE(propagate(f, 0.0) == f);
}

TEST(Propagate, RejectsNegativeTime) {
  EXPECT_THROW(propagate(mix_field(), -0.1), DomainError);
  EXPECT_THROW(propagate(mix_field(), NAN), DomainError);
}

TEST(Propagate, ScalesEachLevelByItsEigenvalue) {
  const auto f = propagate(mix_field(), 0.5);
  const PointOnManifold p(ManifoldSpec::torus(1), {0.8});
  EXPECT_NEAR(evaluate(f, p), std::exp(-0.5) * std::cos(0.8) + std::exp(-2.0) * std::cos(1.6), 1e-15);
}

TEST(Propagate, SemigroupProperty) {
  for (const auto& m : {ManifoldSpec::torus(2), ManifoldSpec::sphere(2)}) {
    const auto f = random_field(8, m, 4, 0.5);
    const auto a = coefficient_vector(propagate(propagate(f, 0.3), 0.45));
    const auto b = coefficient_vector(propagate(f, 0.75));
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-15 * (1 + std::fabs(b[i])));
  }
}

TEST(Propagate, SolvesTheHeatEquation) {
  // d/dt f_t equals the finite-difference Laplacian of f_t
  const auto m = ManifoldSpec::torus(2);
  const auto f = random_field(4, m, 4, 0.5);
  const std::vector<double> x{0.9, 4.0};
  const double t = 0.2, h = 1e-5;
  const double dt = (evaluate(propagate(f, t + h), PointOnManifold(m, x)) -
                     evaluate(propagate(f, t - h), PointOnManifold(m, x))) / (2 * h);
  EXPECT_NEAR(dt, oracle::torus_fd_laplacian(propagate(f, t), x), 1e-6);

  const auto ms = ManifoldSpec::sphere(2);
  const auto g = random_field(5, ms, 4, 0.5);
  Eigen::VectorXd p(3);
  p << 0.2, -0.6, 0.7;
  p.normalize();
  const PointOnManifold pp(ms, {p[0], p[1], p[2]});
  const double dts = (evaluate(propagate(g, t + h), pp) - evaluate(propagate(g, t - h), pp)) / (2 * h);
  EXPECT_NEAR(dts, oracle::sphere_fd_laplacian(propagate(g, t), p), 1e-6);
}

TEST(Propagate, L2NormIsNonincreasing) {
  const auto f = random_field(6, ManifoldSpec::torus(3), 4, 0.5);
  double prev = f.l2_norm();
  for (double t = 0.05; t < 3; t += 0.05) {
    const double now = propagate(f, t).l2_norm();
    EXPECT_LE(now, prev);
    prev = now;
  }
}

TEST(HeatEvolution, SplitsConstantFirstLevelAndGap) {
  const auto f = torus_field(1, {{{0}, Phase::Cos, 2.5}, {{1}, Phase::Sin, 1.0}, {{3}, Phase::Cos, 1.0}});
  const HeatEvolution ev(f);
  EXPECT_DOUBLE_EQ(ev.h0(), 2.5);
  EXPECT_EQ(ev.h1().terms().size(), 1u);
  EXPECT_DOUBLE_EQ(ev.gap(), 3.0);
  const auto rest = ev.renormalized_remainder(1.0);
  EXPECT_NEAR(rest.terms()[0].coeff, std::exp(-8.0), 1e-18);

  const HeatEvolution sphere(SpectralField(ManifoldSpec::sphere(2), {{0, HarmonicIndex{0}, 1.0}}));
  EXPECT_NEAR(sphere.h0(), 1.0 / std::sqrt(4 * std::numbers::pi), 1e-15);
  EXPECT_DOUBLE_EQ(sphere.gap(), 4.0);
}

TEST(HeatEvolution, RemainderMatchesDefinition) {
  const auto m = ManifoldSpec::torus(2);
  const auto f = random_field(12, m, 3, 1.0);
  const HeatEvolution ev(f);
  const double t = 0.7;
  const PointOnManifold p(m, {1.0, 2.0});
  const double direct = std::exp(ev.lambda1() * t) * (evaluate(propagate(f, t), p) - ev.h0()) - evaluate(ev.h1(), p);
  EXPECT_NEAR(evaluate(ev.renormalized_remainder(t), p), direct, 1e-12);
}

TEST(CrNorm, TrigonometricModesOnCircle) {
  const auto f = torus_field(1, {{{3}, Phase::Sin, 2.0}});
  EXPECT_NEAR(cr_norm(f, 0).value, 2.0, 1e-12);
  EXPECT_NEAR(cr_norm(f, 1).value, 6.0, 1e-12);
  EXPECT_NEAR(cr_norm(f, 2).value, 18.0, 1e-12);
  EXPECT_THROW(cr_norm(f, -1), DomainError);
}

TEST(CrNorm, MixedPartialsOnTwoTorus) {
  // cos(x + 2y): the largest partial of order <= 2 is d^2/dy^2 with amplitude 4
  const auto f = torus_field(2, {{{1, 2}, Phase::Cos, 1.0}});
  EXPECT_NEAR(cr_norm(f, 2).value, 4.0, 1e-12);
}

TEST(CrNorm, SphereSupOfCoordinateFunction) {
  const auto f = linear_form_field({0.0, 0.0, 1.0});
  EXPECT_NEAR(cr_norm(f, 0).value, 1.0, 1e-12);
}

TEST(CrNorm, SphereChartDerivativesMatchFiniteDifferences) {
  // z on S^2 in the z-graph chart is sqrt(1 - u^2 - v^2)
  const auto f = linear_form_field({0.0, 0.0, 1.0});
  const SphereEvaluator ev(f);
  const double p[3] = {0.3, 0.2, std::sqrt(1 - 0.13)};
  const double got = detail::sphere_chart_max_partial(ev, p, 2);
  const double g = p[2];
  // second derivatives: -(1 - v^2)/g^3, -uv/g^3, -(1 - u^2)/g^3; first: -u/g, -v/g
  const double expected = std::max({g, 0.3 / g, 0.2 / g, (1 - 0.04) / (g * g * g), 0.06 / (g * g * g),
                                    (1 - 0.09) / (g * g * g)});
  EXPECT_NEAR(got, expected, 1e-12);
}

TEST(CrNorm, IndependentOfWorkerCount) {
  const auto f = random_field(2, ManifoldSpec::sphere(2), 4, 0.5);
  EXPECT_EQ(cr_norm(f, 2, {}, 1).value, cr_norm(f, 2, {}, 3).value);
}

TEST(CrNorm, DenserSphereGridNeverDecreasesEstimate) {
  const auto f = random_field(14, ManifoldSpec::sphere(2), 3, 0.5);
  double prev = 0.0;
  for (std::size_t samples : {100u, 400u, 1600u}) {
    GridSpec g;
    g.sphere_samples = samples;
    const double v = cr_norm(f, 1, g).value;
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(RenormalizedResidual, WorkedExampleDecaysLikeExpMinusThreeT) {
  const HeatEvolution ev(mix_field());
  for (double t : {1.0, 2.0, 4.0}) EXPECT_NEAR(renormalized_residual(ev, t, 0).value, std::exp(-3 * t), 1e-15);
}

TEST(RenormalizedResidual, SphereRatioOverUnitTimeIsExpMinusFour) {
  const auto m = ManifoldSpec::sphere(2);
  const SpectralField f(m, {{1, HarmonicIndex{2}, 1.0}, {2, HarmonicIndex{1}, 0.7}});
  const HeatEvolution ev(f);
  for (int r : {0, 1, 2}) {
    const double a = renormalized_residual(ev, 2.0, r).value, b = renormalized_residual(ev, 3.0, r).value;
    EXPECT_NEAR(b / a, std::exp(-4.0), 1e-12);
  }
}

TEST(RenormalizedResidual, MonotoneDecay) {
  const HeatEvolution ev(random_field(21, ManifoldSpec::torus(2), 4, 1.0));
  double prev = INFINITY;
  for (double t = 1.0; t <= 6.0; t += 0.5) {
    const double v = renormalized_residual(ev, t, 1).value;
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(Truncation, UnitToleranceOnCircleKeepsTwoLevels) {
  // independent sum: 2 * sum_{j > J} j^2 e^{-(j^2 - 4)}
  auto tail = [](int J) {
    double s = 0.0;
    for (int j = J + 1; j < 40; ++j) s += 2.0 * j * j * std::exp(-(j * j - 4.0));
    return s;
  };
  EXPECT_NEAR(tail(1), 8.1213, 1e-3);
  EXPECT_NEAR(tail(2), 0.1213, 1e-3);
  const auto m = ManifoldSpec::torus(1);
  EXPECT_NEAR(tail_bound(m, 1.0, 1.0, 0, 1), tail(1), 1e-12);
  EXPECT_NEAR(tail_bound(m, 1.0, 1.0, 0, 2), tail(2), 1e-12);
  const auto res = truncation_level(1.0, 1.0, 0, 1.0, m);
  EXPECT_EQ(res.level, 2);
  EXPECT_NEAR(res.bound, tail(2), 1e-12);
}

TEST(Truncation, ZeroFieldNeedsOnlyFirstLevel) {
  const auto r = truncation_level(0.0, 1.0, 2, 1e-10, ManifoldSpec::sphere(2));
  EXPECT_EQ(r.level, 1);
  EXPECT_EQ(r.bound, 0.0);
}

TEST(Truncation, CapExceededReportsAchievableBound) {
  TruncationOptions opts;
  opts.cap = 2;
  try {
    truncation_level(1.0, 1.0, 4, 1e-30, ManifoldSpec::torus(3), opts);
    FAIL() << "expected an error";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("truncation cap exceeded"), std::string::npos);
  }
}

TEST(Truncation, PreconditionsChecked) {
  const auto m = ManifoldSpec::torus(1);
  EXPECT_THROW(truncation_level(1.0, 0.5, 0, 1e-3, m), DomainError);
  EXPECT_THROW(truncation_level(1.0, 1.0, 0, 0.0, m), DomainError);
  EXPECT_THROW(tail_bound(m, 1.0, 1.0, 0, 0), DomainError);
}

TEST(Truncation, BoundDecreasesInLevelAndTime) {
  for (const auto& m : {ManifoldSpec::torus(2), ManifoldSpec::sphere(3)}) {
    EXPECT_GT(tail_bound(m, 1.0, 1.0, 2, 2), tail_bound(m, 1.0, 1.0, 2, 3));
    EXPECT_GT(tail_bound(m, 1.0, 1.0, 2, 2), tail_bound(m, 1.0, 2.0, 2, 2));
    EXPECT_NEAR(tail_bound(m, 3.0, 1.0, 2, 2), 3.0 * tail_bound(m, 1.0, 1.0, 2, 2), 1e-12);
  }
}

TEST(Truncation, DroppedTailNeverExceedsBound) {
  for (const auto& m : {ManifoldSpec::torus(1), ManifoldSpec::torus(2), ManifoldSpec::sphere(1), ManifoldSpec::sphere(2)})
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto f0 = random_field(seed, m, 6, 0.25);
      for (int J : {1, 2, 4})
        for (int r : {0, 2}) {
          const double actual = cr_norm(dropped_tail(f0, J, 1.0), r).value;
          EXPECT_LE(actual, tail_bound(m, f0.l2_norm(), 1.0, r, J)) << m.name() << " J=" << J << " r=" << r;
        }
    }
}

TEST(Truncation, DroppedTailRecombinesWithKeptLevels) {
  const auto m = ManifoldSpec::torus(2);
  const auto f0 = random_field(31, m, 5, 0.5);
  const double t = 1.3;
  const int J = 2;
  const auto kept = propagate(f0, t).filtered([J](const FieldTerm& x) { return x.level <= J; });
  const double lambda2 = static_cast<double>(level_eigenvalue(m, 2));
  const auto recombined = kept + dropped_tail(f0, J, t).scaled(std::exp(-lambda2 * t));
  const PointOnManifold p(m, {0.4, 5.5});
  EXPECT_NEAR(evaluate(recombined, p), evaluate(propagate(f0, t), p), 1e-14);
}

TEST(Truncation, DefaultSphereConstantIsCalibrated) {
  for (int n : {1, 2})
    for (int r : {0, 1, 2}) EXPECT_LE(calibrate_sphere_constant(n, r, 5, 4), defaults::kSphereConstant);
}
