#pragma once

// Command-line front end. run_cli is kept free of process state (no exit(),
// streams passed in) so the test suite can drive it directly.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "heatmorse/heatmorse.hpp"

namespace heatmorse::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline nlohmann::json defaults_json() {
  namespace d = defaults;
  return {{"torus_grid_factor", d::kTorusGridFactor},   {"sphere_sample_factor", d::kSphereSampleFactor},
          {"grad_tol", d::kGradTol},                    {"merge_tol", d::kMergeTol},
          {"deg_tol", d::kDegTol},                      {"borderline_factor", d::kBorderlineFactor},
          {"max_newton_iter", d::kMaxNewtonIter},       {"torus_seed_factor", d::kTorusSeedFactor},
          {"sphere_seed_factor", d::kSphereSeedFactor}, {"t_min", d::kTMin},
          {"sphere_constant", d::kSphereConstant},      {"truncation_cap", d::kTruncationCap},
          {"truncation_tol", d::kTruncationTol},        {"coarse_steps", d::kCoarseSteps},
          {"coarse_t_start", d::kCoarseTStart},         {"t_max", d::kTMax},
          {"refine_tol", d::kRefineTol},                {"decay_t_lo", d::kDecayTLo},
          {"decay_t_hi", d::kDecayTHi},                 {"decay_samples", d::kDecaySamples},
          {"residual_floor", d::kResidualFloor},        {"random_decay", d::kRandomDecay},
          {"random_j_max", d::kRandomJMax},             {"t_probe", d::kTProbe},
          {"perturbation_j_max", d::kPerturbationJMax}};
}

/// Options shared by most subcommands.
struct Common {
  std::string manifold = "torus";
  int n = 1;
  std::string field;
  std::vector<double> e1;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::string out;
  CensusOptions census;
};

inline std::string default_out_dir() {
  const char* env = std::getenv("HEATMORSE_OUT");
  return env && *env ? env : "heatmorse_out";
}

inline void add_space_options(CLI::App* sub, Common& c) {
  sub->add_option("--manifold", c.manifold, "torus or sphere")->check(CLI::IsMember({"torus", "sphere"}))->capture_default_str();
  sub->add_option("--n", c.n, "manifold dimension")->check(CLI::PositiveNumber)->capture_default_str();
}

inline void add_io_options(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "output directory (default $HEATMORSE_OUT or heatmorse_out)");
}

inline void add_field_options(CLI::App* sub, Common& c) {
  add_space_options(sub, c);
  sub->add_option("--field", c.field, "field-v1 JSON file");
  sub->add_option("--e1", c.e1, "first-eigenspace field: a1,b1,a2,b2,... on a torus, a1,...,a(n+1) on a sphere")
      ->delimiter(',');
}

inline void add_census_options(CLI::App* sub, Common& c) {
  sub->add_option("--jobs", c.jobs, "worker threads (0 = all cores)")->capture_default_str();
  sub->add_option("--grad-tol", c.census.grad_tol, "Newton acceptance tolerance")->capture_default_str();
  sub->add_option("--merge-tol", c.census.merge_tol, "critical point merge radius")->capture_default_str();
  sub->add_option("--deg-tol", c.census.deg_tol, "degeneracy threshold")->capture_default_str();
  sub->add_option("--max-iter", c.census.max_iter, "Newton iteration cap")->capture_default_str();
}

inline ManifoldSpec manifold_of(const Common& c) { return {manifold_kind_from_string(c.manifold), c.n}; }

inline SpectralField load_field(const CLI::App* sub, const Common& c) {
  const bool has_field = !c.field.empty(), has_e1 = !c.e1.empty();
  if (has_field == has_e1) throw UsageError("exactly one of --field or --e1 is required");
  const bool manifold_given = sub->count("--manifold") > 0 || sub->count("--n") > 0;
  if (has_field) {
    SpectralField f = read_field(c.field);
    if (manifold_given && !(f.manifold() == manifold_of(c)))
      throw DomainError("field is on " + f.manifold().name() + " but --manifold/--n ask for " + manifold_of(c).name());
    return f;
  }
  if (c.manifold == "torus") {
    if (c.e1.size() % 2 != 0) throw UsageError("--e1 on a torus needs pairs a1,b1,a2,b2,...");
    const int n = static_cast<int>(c.e1.size() / 2);
    if (sub->count("--n") > 0 && n != c.n) throw UsageError("--e1 has " + std::to_string(n) + " pairs but --n is " + std::to_string(c.n));
    std::vector<double> a, b;
    for (int k = 0; k < n; ++k) a.push_back(c.e1[2 * k]), b.push_back(c.e1[2 * k + 1]);
    return e1_torus_field(a, b);
  }
  const int n = static_cast<int>(c.e1.size()) - 1;
  if (n < 1) throw UsageError("--e1 on a sphere needs at least 2 coefficients");
  if (sub->count("--n") > 0 && n != c.n) throw UsageError("--e1 has " + std::to_string(n + 1) + " coefficients but --n is " + std::to_string(c.n));
  auto f = linear_form_field(c.e1);
  return f;
}

/// Every option of the subcommand with its resolved value.
inline nlohmann::json resolved_config(const CLI::App* sub, const Common& c) {
  nlohmann::json opts = nlohmann::json::object();
  for (const CLI::Option* o : sub->get_options()) {
    if (o->get_name() == "--help" || o->get_name() == "-h,--help") continue;
    std::string name = o->get_single_name();
    if (o->count() > 0) {
      std::string joined;
      for (const auto& r : o->results()) joined += (joined.empty() ? "" : ",") + r;
      opts[name] = joined;
    } else {
      opts[name] = o->get_default_str();
    }
  }
  opts["out"] = c.out;
  return {{"command", sub->get_name()}, {"options", opts}, {"defaults", defaults_json()},
          {"census", to_json(c.census)}, {"tool_version", defaults::kToolVersion}};
}

inline std::filesystem::path prepare_out(const CLI::App* sub, Common& c) {
  if (c.out.empty()) c.out = default_out_dir();
  std::error_code ec;
  std::filesystem::create_directories(c.out, ec);
  if (ec || !std::filesystem::is_directory(c.out)) throw DomainError("cannot create output directory '" + c.out + "'");
  const auto path = std::filesystem::path(c.out) / (sub->get_name() + "_config.json");
  std::ofstream cfg(path);
  if (!cfg) throw DomainError("cannot write '" + path.string() + "'");
  cfg << resolved_config(sub, c).dump(2) << '\n';
  return c.out;
}

inline std::string join(const std::vector<long>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"heatmorse: heat flow and Morse theory on flat tori and round spheres", "heatmorse"};
  app.require_subcommand(1);
  app.footer("Exit status: 0 success, 1 domain error, 2 usage error.\n"
             "Environment: HEATMORSE_OUT sets the default output directory.");
  Common c;

  // spectrum
  int count = 10;
  auto* spectrum = app.add_subcommand("spectrum", "print the first eigenvalues with multiplicities");
  add_space_options(spectrum, c);
  add_io_options(spectrum, c);
  spectrum->add_option("--count", count, "number of distinct eigenvalues")->check(CLI::PositiveNumber)->capture_default_str();

  // basis
  int level = 1;
  auto* basis = app.add_subcommand("basis", "write the orthonormal eigenbasis of one level as field files");
  add_space_options(basis, c);
  add_io_options(basis, c);
  basis->add_option("--level", level, "eigenvalue level j")->check(CLI::NonNegativeNumber)->capture_default_str();

  // evolve
  double t = 1.0;
  auto* evolve = app.add_subcommand("evolve", "apply the heat semigroup and write the evolved field");
  add_field_options(evolve, c);
  add_io_options(evolve, c);
  evolve->add_option("--t", t, "time")->capture_default_str();

  // census
  auto* census = app.add_subcommand("census", "find and classify critical points");
  add_field_options(census, c);
  add_io_options(census, c);
  add_census_options(census, c);

  // transition
  TransitionOptions topt;
  auto* transition = app.add_subcommand("transition", "estimate the time after which the flow is minimal Morse");
  add_field_options(transition, c);
  add_io_options(transition, c);
  add_census_options(transition, c);
  transition->add_option("--t-max", topt.t_max, "largest sampled time")->capture_default_str();
  transition->add_option("--coarse-steps", topt.coarse_steps, "log-spaced coarse times")->capture_default_str();
  transition->add_option("--refine-tol", topt.refine_tol, "bisection tolerance")->capture_default_str();
  transition->add_option("--t-start", topt.t_start, "first positive coarse time")->capture_default_str();

  // decay
  int r = 0;
  double t_lo = defaults::kDecayTLo, t_hi = defaults::kDecayTHi;
  int samples = defaults::kDecaySamples;
  auto* decay = app.add_subcommand("decay", "fit the decay rate of the renormalized residual");
  add_field_options(decay, c);
  add_io_options(decay, c);
  decay->add_option("--r", r, "derivative order of the norm")->check(CLI::NonNegativeNumber)->capture_default_str();
  decay->add_option("--t-lo", t_lo, "window start")->capture_default_str();
  decay->add_option("--t-hi", t_hi, "window end")->capture_default_str();
  decay->add_option("--samples", samples, "sample count")->capture_default_str();

  // sweep
  SweepOptions sopt;
  std::uint64_t seeds = 100;
  auto* sweep = app.add_subcommand("sweep", "census random fields at a probe time");
  add_space_options(sweep, c);
  add_io_options(sweep, c);
  add_census_options(sweep, c);
  sweep->add_option("--seed", c.seed, "first seed")->capture_default_str();
  sweep->add_option("--seeds", seeds, "number of seeds")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--j-max", sopt.j_max, "highest level of the random fields")->capture_default_str();
  sweep->add_option("--decay", sopt.decay, "coefficient decay exponent")->capture_default_str();
  sweep->add_option("--t-probe", sopt.t_probe, "probe time")->capture_default_str();

  // stability
  StabilityOptions popt;
  std::vector<double> eps{0.01};
  int trials = 50;
  auto* stability = app.add_subcommand("stability", "census under small random perturbations");
  add_field_options(stability, c);
  add_io_options(stability, c);
  add_census_options(stability, c);
  stability->add_option("--seed", c.seed, "perturbation seed")->capture_default_str();
  stability->add_option("--eps", eps, "perturbation sizes, comma separated")->delimiter(',');
  stability->add_option("--trials", trials, "perturbations per size")->check(CLI::PositiveNumber)->capture_default_str();
  stability->add_option("--r", popt.r, "derivative order of the perturbation norm")->check(CLI::NonNegativeNumber)->capture_default_str();
  stability->add_option("--perturb-j-max", popt.perturbation_j_max, "highest level of the perturbations")->capture_default_str();
  stability->add_option("--decay", popt.decay, "coefficient decay exponent")->capture_default_str();

  // plot
  std::string records;
  auto* plot = app.add_subcommand("plot", "regenerate CSV and SVG files from experiments.jsonl");
  add_io_options(plot, c);
  plot->add_option("--records", records, "records file (default <out>/experiments.jsonl)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    auto append = [&](const ExperimentRecord& rec) {
      append_record(rec, (std::filesystem::path(c.out) / "experiments.jsonl").string());
    };
    c.census.jobs = c.jobs;

    if (*spectrum) {
      prepare_out(spectrum, c);
      const ManifoldSpec m = manifold_of(c);
      const auto lambdas = m.is_torus() ? torus_spectrum(c.n, count) : sphere_spectrum(c.n, count);
      out << join(lambdas) << '\n';
      out << "level\teigenvalue\tmultiplicity\n";
      for (int j = 0; j < count; ++j) {
        const long dim = m.is_torus() ? static_cast<long>(torus_modes(c.n, lambdas[j]).size()) : harmonic_dimension(c.n, j);
        out << j << '\t' << lambdas[j] << '\t' << dim << '\n';
      }
    } else if (*basis) {
      const auto dir = prepare_out(basis, c);
      const ManifoldSpec m = manifold_of(c);
      std::vector<SpectralField> fields;
      if (m.is_torus()) {
        for (auto& mode : torus_modes(c.n, torus_spectrum(c.n, level + 1)[level]))
          fields.emplace_back(m, std::vector<FieldTerm>{{level, mode, 1.0}});
      } else {
        for (long i = 0; i < harmonic_dimension(c.n, level); ++i)
          fields.emplace_back(m, std::vector<FieldTerm>{{level, HarmonicIndex{static_cast<int>(i)}, 1.0}});
      }
      const std::string prefix = std::string(m.is_torus() ? "torus" : "sphere") + std::to_string(c.n) + "_j" + std::to_string(level);
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto path = dir / ("basis_" + prefix + "_" + std::to_string(i) + ".json");
        write_field(fields[i], path.string());
        out << path.string() << '\n';
      }
    } else if (*evolve) {
      const SpectralField f = load_field(evolve, c);
      const auto dir = prepare_out(evolve, c);
      const auto path = dir / "evolved.json";
      write_field(propagate(f, t), path.string());
      out << path.string() << '\n';
    } else if (*census) {
      const SpectralField f = load_field(census, c);
      const auto dir = prepare_out(census, c);
      const auto report = to_json(find_critical_points(f, c.census));
      std::ofstream(dir / "census.json") << report.dump(2) << '\n';
      out << report.dump(2) << '\n';
    } else if (*transition) {
      const SpectralField f = load_field(transition, c);
      prepare_out(transition, c);
      topt.census = c.census;
      const TransitionResult res = transition_time(f, topt);
      auto rec = make_record("transition", c.seed, f.manifold(), resolved_config(transition, c), to_json(res));
      rec.id = res.f0_ref;
      append(rec);
      out << "generic: " << (res.genericity.generic ? "yes" : "no") << " (" << res.genericity.reason << ")\n";
      if (res.T_estimate)
        out << "T_estimate = " << fmt17(*res.T_estimate) << '\n';
      else
        out << "T_estimate = not reached\n";
    } else if (*decay) {
      const SpectralField f = load_field(decay, c);
      prepare_out(decay, c);
      const DecayFit fit = decay_fit(f, r, t_lo, t_hi, samples);
      auto rec = make_record("decay", c.seed, f.manifold(), resolved_config(decay, c), to_json(fit));
      rec.id = field_id(f) + "_r" + std::to_string(r);
      append(rec);
      out << "slope = " << fmt17(fit.slope) << "\nexpected_gap = " << fmt17(fit.expected_gap)
          << "\nrelative_error = " << fmt17(fit.relative_error) << '\n';
    } else if (*sweep) {
      prepare_out(sweep, c);
      const ManifoldSpec m = manifold_of(c);
      sopt.census = c.census;
      const SweepSummary s = genericity_sweep(c.seed, seeds, m, sopt);
      auto rec = make_record("sweep", c.seed, m, resolved_config(sweep, c), to_json(s));
      rec.id = (m.is_torus() ? "torus" : "sphere") + std::to_string(c.n) + "_" + std::to_string(c.seed) + "-" +
               std::to_string(c.seed + seeds - 1);
      append(rec);
      out << "fraction_generic = " << fmt17(s.fraction_generic) << "\nfraction_minimal_among_generic = "
          << fmt17(s.fraction_minimal_among_generic) << "\noutliers =";
      for (auto o : s.outliers) out << ' ' << o;
      out << '\n';
    } else if (*stability) {
      const SpectralField f = load_field(stability, c);
      prepare_out(stability, c);
      popt.census = c.census;
      const StabilityResult s = stability_probe(f, eps, trials, c.seed, popt);
      auto rec = make_record("stability", c.seed, f.manifold(), resolved_config(stability, c), to_json(s));
      rec.id = field_id(f);
      append(rec);
      out << "base_count = " << s.base_count << '\n';
      for (std::size_t e = 0; e < s.epsilons.size(); ++e)
        out << "eps = " << fmt17(s.epsilons[e]) << " agreement = " << fmt17(s.agreement[e]) << '\n';
    } else if (*plot) {
      if (c.out.empty()) c.out = default_out_dir();
      if (records.empty()) records = (std::filesystem::path(c.out) / "experiments.jsonl").string();
      const auto paths = emit_plots(read_records(records), c.out);
      prepare_out(plot, c);
      for (const auto& p : paths) out << p << '\n';
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitOk;
}

}  // namespace heatmorse::cli
