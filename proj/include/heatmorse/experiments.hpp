#pragma once

#include <chrono>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "heatmorse/defaults.hpp"
#include "heatmorse/error.hpp"
#include "heatmorse/field.hpp"
#include "heatmorse/field_io.hpp"
#include "heatmorse/heat_flow.hpp"
#include "heatmorse/morse.hpp"
#include "heatmorse/parallel.hpp"
#include "heatmorse/sampling.hpp"

namespace heatmorse {

// ---------------------------------------------------------------------------
// Random initial data

/// Gaussian coefficients on every basis element of levels 0..j_max, scaled by
/// (1 + lambda_j)^{-decay}. Coefficient i is draw i of a counter-based stream
/// keyed by (seed, manifold), so a seed names the same field everywhere.
inline SpectralField random_field(std::uint64_t seed, const ManifoldSpec& m, int j_max, double decay) {
  if (j_max < 1) throw DomainError("random_field needs j_max >= 1");
  if (!(decay > 0.0)) throw DomainError("random_field needs decay > 0");
  const std::uint64_t stream = (m.is_torus() ? 0x70000000ULL : 0x50000000ULL) + static_cast<std::uint64_t>(m.n());
  const CounterRng rng(seed, stream);
  std::vector<FieldTerm> terms;
  std::uint64_t draw = 0;
  const int n = m.n();
  const auto lambdas = m.is_torus() ? torus_spectrum(n, j_max + 1) : sphere_spectrum(n, j_max + 1);
  for (int j = 0; j <= j_max; ++j) {
    const double damp = std::pow(1.0 + static_cast<double>(lambdas[j]), -decay);
    if (m.is_torus()) {
      for (auto& mode : torus_modes(n, lambdas[j])) terms.push_back({j, std::move(mode), rng.normal(draw++) * damp});
    } else {
      const long dim = harmonic_dimension(n, j);
      for (long i = 0; i < dim; ++i) terms.push_back({j, HarmonicIndex{static_cast<int>(i)}, rng.normal(draw++) * damp});
    }
  }
  return {m, std::move(terms)};
}

// ---------------------------------------------------------------------------
// Census along the heat flow

/// Content hash (FNV-1a over the serialized field), printed as 16 hex digits.
inline std::string field_id(const SpectralField& f) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : field_to_json(f).dump()) h = (h ^ c) * 0x100000001b3ULL;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// f_t, with levels above `truncation` dropped once t >= t_min (where the
/// tail bound certifies them).
inline SpectralField evolved_field(const SpectralField& f0, double t, int truncation, double t_min = defaults::kTMin) {
  SpectralField ft = propagate(f0, t);
  if (truncation > 0 && t >= t_min) ft = ft.filtered([truncation](const FieldTerm& x) { return x.level <= truncation; });
  return ft;
}

/// Truncation level for f0 at the default tolerance, or the field's own max
/// level when the cap is exceeded.
inline int default_truncation(const SpectralField& f0) {
  try {
    return truncation_level(f0.l2_norm(), defaults::kTMin, 2, defaults::kTruncationTol, f0.manifold()).level;
  } catch (const DomainError&) {
    return std::max(1, f0.max_level());
  }
}

struct TransitionOptions {
  double t_max = defaults::kTMax;
  int coarse_steps = defaults::kCoarseSteps;
  double refine_tol = defaults::kRefineTol;
  double t_start = defaults::kCoarseTStart;
  CensusOptions census;
};

struct TransitionResult {
  std::string f0_ref;
  std::vector<double> t_grid;
  std::vector<bool> minimal_flags;
  std::vector<long> counts;
  std::vector<bool> morse_flags;
  std::vector<Confidence> confidences;
  std::optional<double> T_estimate;  // nullopt: not reached
  bool refined = false;
  int truncation_level_used = 0;
  GenericityVerdict genericity;
  std::vector<std::pair<double, bool>> refinement;   // bisection samples (t, minimal)
  std::vector<std::pair<double, bool>> spot_checks;  // census at 2T and 4T
};

/// Coarse census on {0} + coarse_steps log-spaced times in [t_start, t_max],
/// then bisection on the entry edge of the final run of minimal verdicts.
inline TransitionResult transition_time(const SpectralField& f0, const TransitionOptions& opts = {}) {
  if (!(opts.t_max > 0.0)) throw DomainError("t_max must be > 0");
  if (opts.coarse_steps < 2) throw DomainError("coarse_steps must be >= 2");
  if (!(opts.refine_tol > 0.0)) throw DomainError("refine_tol must be > 0");
  TransitionResult res;
  res.f0_ref = field_id(f0);
  res.genericity = is_generic(f0);
  res.truncation_level_used = default_truncation(f0);

  const double lo = std::min(opts.t_start, opts.t_max / 100.0);
  res.t_grid.push_back(0.0);
  for (int i = 0; i < opts.coarse_steps; ++i)
    res.t_grid.push_back(lo * std::pow(opts.t_max / lo, static_cast<double>(i) / (opts.coarse_steps - 1)));
  res.t_grid.back() = opts.t_max;

  CensusOptions inner = opts.census;
  inner.jobs = 1;
  auto census = [&](double t) { return find_critical_points(evolved_field(f0, t, res.truncation_level_used), inner); };

  std::vector<MorseReport> reports(res.t_grid.size());
  parallel_for(reports.size(), opts.census.jobs, [&](std::size_t i) { reports[i] = census(res.t_grid[i]); });
  for (const auto& r : reports) {
    res.minimal_flags.push_back(r.is_minimal);
    res.counts.push_back(r.count);
    res.morse_flags.push_back(r.is_morse);
    res.confidences.push_back(r.confidence);
  }
  if (!res.minimal_flags.back()) return res;

  std::size_t first = res.minimal_flags.size() - 1;
  while (first > 0 && res.minimal_flags[first - 1]) --first;
  if (first == 0) {
    res.T_estimate = 0.0;
  } else {
    double a = res.t_grid[first - 1], b = res.t_grid[first];
    while (b - a > opts.refine_tol) {
      const double mid = 0.5 * (a + b);
      const bool minimal = census(mid).is_minimal;
      res.refinement.emplace_back(mid, minimal);
      (minimal ? b : a) = mid;
    }
    res.refined = true;
    res.T_estimate = 0.5 * (a + b);
  }
  if (*res.T_estimate > 0.0)
    for (double factor : {2.0, 4.0}) {
      const double t = factor * *res.T_estimate;
      res.spot_checks.emplace_back(t, census(t).is_minimal);
    }
  return res;
}

// ---------------------------------------------------------------------------
// Decay of the renormalized residual

struct DecayFit {
  int r = 0;
  std::vector<double> times;
  std::vector<double> residuals;
  double slope = 0.0;
  double intercept = 0.0;
  double expected_gap = 0.0;
  double relative_error = 0.0;
};

/// Ordinary least-squares slope and intercept of y against x.
inline std::pair<double, double> least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
  const auto m = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i];
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

/// Smallest eigenvalue above lambda_1 carried by a nonzero term, minus lambda_1.
inline std::optional<double> smallest_present_gap(const SpectralField& f0) {
  int level = -1;
  for (const auto& t : f0.terms())
    if (t.level >= 2 && t.coeff != 0.0 && (level < 0 || t.level < level)) level = t.level;
  if (level < 0) return std::nullopt;
  return static_cast<double>(f0.eigenvalue_of_level(level) - f0.eigenvalue_of_level(1));
}

inline DecayFit decay_fit(const SpectralField& f0, int r, double t_lo = defaults::kDecayTLo,
                          double t_hi = defaults::kDecayTHi, int samples = defaults::kDecaySamples,
                          GridSpec grid = {}) {
  const auto gap = smallest_present_gap(f0);
  if (!gap) throw DomainError("decay fit needs a nonzero term above level 1");
  if (!(t_lo >= 1.0)) throw DomainError("decay window must start at t >= 1");
  if (!(t_hi > t_lo)) throw DomainError("decay window must have t_hi > t_lo");
  if (samples < defaults::kMinDecaySamples) throw DomainError("decay fit needs at least 4 samples");
  const HeatEvolution ev(f0);
  DecayFit fit;
  fit.r = r;
  fit.expected_gap = *gap;
  for (int i = 0; i < samples; ++i) {
    const double t = t_lo + (t_hi - t_lo) * i / (samples - 1);
    const double res = renormalized_residual(ev, t, r, grid).value;
    if (!(res >= defaults::kResidualFloor)) break;  // the window shrinks to the usable prefix
    fit.times.push_back(t);
    fit.residuals.push_back(res);
  }
  if (static_cast<int>(fit.times.size()) < defaults::kMinDecaySamples)
    throw DomainError("window exhausted: fewer than 4 residuals above 1e-14 in [" + std::to_string(t_lo) + ", " +
                      std::to_string(t_hi) + "]");
  std::vector<double> logs;
  for (double v : fit.residuals) logs.push_back(std::log(v));
  std::tie(fit.slope, fit.intercept) = least_squares_line(fit.times, logs);
  fit.relative_error = std::fabs(fit.slope + fit.expected_gap) / fit.expected_gap;
  return fit;
}

// ---------------------------------------------------------------------------
// Genericity sweep

struct SweepRow {
  std::uint64_t seed = 0;
  bool generic = false;
  bool minimal = false;
  long count = 0;
  Confidence confidence = Confidence::Complete;
};

struct SweepSummary {
  std::vector<SweepRow> rows;  // ascending seed
  double fraction_generic = 0.0;
  double fraction_minimal_among_generic = 0.0;
  std::vector<std::uint64_t> outliers;  // generic but not minimal at t_probe
};

struct SweepOptions {
  int j_max = defaults::kRandomJMax;
  double decay = defaults::kRandomDecay;
  double t_probe = defaults::kTProbe;
  CensusOptions census;
};

inline SweepSummary summarize_sweep(std::vector<SweepRow> rows) {
  SweepSummary s;
  s.rows = std::move(rows);
  long generic = 0, minimal = 0;
  for (const auto& r : s.rows) {
    if (!r.generic) continue;
    ++generic;
    if (r.minimal)
      ++minimal;
    else
      s.outliers.push_back(r.seed);
  }
  s.fraction_generic = s.rows.empty() ? 0.0 : static_cast<double>(generic) / s.rows.size();
  s.fraction_minimal_among_generic = generic ? static_cast<double>(minimal) / generic : 0.0;
  return s;
}

/// Runs the sweep on the given initial fields (already keyed by seed).
inline SweepSummary genericity_sweep_fields(const std::vector<std::pair<std::uint64_t, SpectralField>>& fields,
                                            const SweepOptions& opts) {
  if (!(opts.t_probe > 0.0)) throw DomainError("t_probe must be > 0");
  std::vector<SweepRow> rows(fields.size());
  CensusOptions inner = opts.census;
  inner.jobs = 1;
  parallel_for(fields.size(), opts.census.jobs, [&](std::size_t i) {
    const auto& [seed, f0] = fields[i];
    SweepRow row;
    row.seed = seed;
    row.generic = is_generic(f0).generic;
    const SpectralField ft = evolved_field(f0, opts.t_probe, default_truncation(f0));
    if (ft.is_constant()) {
      row.minimal = false;
    } else {
      const auto rep = find_critical_points(ft, inner);
      row.minimal = rep.is_minimal;
      row.count = rep.count;
      row.confidence = rep.confidence;
    }
    rows[i] = row;
  });
  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.seed < b.seed; });
  return summarize_sweep(std::move(rows));
}

inline SweepSummary genericity_sweep(std::uint64_t seed_begin, std::uint64_t seed_count, const ManifoldSpec& m,
                                     const SweepOptions& opts = {}) {
  std::vector<std::pair<std::uint64_t, SpectralField>> fields;
  fields.reserve(seed_count);
  for (std::uint64_t s = seed_begin; s < seed_begin + seed_count; ++s)
    fields.emplace_back(s, random_field(s, m, opts.j_max, opts.decay));
  return genericity_sweep_fields(fields, opts);
}

// ---------------------------------------------------------------------------
// Stability under small perturbations

struct StabilityOptions {
  int r = 0;  // order of the norm the perturbation is scaled in
  int perturbation_j_max = defaults::kPerturbationJMax;
  double decay = defaults::kRandomDecay;
  CensusOptions census;
};

struct StabilityResult {
  long base_count = 0;
  std::vector<double> epsilons;
  std::vector<std::vector<long>> counts;  // [epsilon][trial]
  std::vector<double> agreement;          // fraction of trials with the base count, Morse
};

/// Random perturbation with no constant term and grid C^r norm eps.
inline SpectralField perturbation(std::uint64_t key, const ManifoldSpec& m, int j_max, double decay, double eps,
                                  int r = 0) {
  SpectralField p = random_field(key, m, j_max, decay).filtered([](const FieldTerm& t) { return t.level > 0; });
  if (eps == 0.0) return p.scaled(0.0);
  GridSpec dense = GridSpec::for_field(p);
  dense.torus_per_axis *= 4;
  dense.sphere_samples *= 4;
  return p.scaled(eps / cr_norm(p, r, dense).value);
}

inline StabilityResult stability_probe(const SpectralField& f, const std::vector<double>& epsilons, int trials,
                                       std::uint64_t seed, const StabilityOptions& opts = {}) {
  if (trials < 1) throw DomainError("stability probe needs at least one trial");
  CensusOptions inner = opts.census;
  inner.jobs = 1;
  const MorseReport base = find_critical_points(f, inner);
  if (!base.is_morse) throw DomainError("base field is not Morse; stability probe requires a Morse function");
  if (base.confidence != Confidence::Complete) throw DomainError("census of the base field is suspect");
  StabilityResult res;
  res.base_count = base.count;
  res.epsilons = epsilons;
  res.counts.assign(epsilons.size(), std::vector<long>(trials, 0));
  std::vector<char> agrees(epsilons.size() * trials, 0);
  parallel_for(epsilons.size() * trials, opts.census.jobs, [&](std::size_t idx) {
    const std::size_t e = idx / trials, i = idx % trials;
    if (epsilons[e] < 0.0) throw DomainError("perturbation size must be >= 0");
    const std::uint64_t key = CounterRng::mix(seed ^ CounterRng::mix(e * 0x10000ULL + i));
    const SpectralField g = f + perturbation(key, f.manifold(), opts.perturbation_j_max, opts.decay, epsilons[e], opts.r);
    const MorseReport rep = find_critical_points(g, inner);
    res.counts[e][i] = rep.count;
    agrees[idx] = rep.is_morse && rep.count == base.count;
  });
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    long ok = 0;
    for (int i = 0; i < trials; ++i) ok += agrees[e * trials + i];
    res.agreement.push_back(static_cast<double>(ok) / trials);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Records

inline constexpr const char* kRecordFormat = "heatmorse-exp-v1";

struct ExperimentRecord {
  std::string kind;  // transition | decay | sweep | stability
  std::string id;
  std::uint64_t seed = 0;
  ManifoldSpec manifold = ManifoldSpec::torus(1);
  nlohmann::json parameters = nlohmann::json::object();
  nlohmann::json outcome = nlohmann::json::object();
  std::string timestamp;
  std::string tool_version = defaults::kToolVersion;
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::json to_json(const ExperimentRecord& r) {
  return {{"record", kRecordFormat},
          {"kind", r.kind},
          {"id", r.id},
          {"seed", r.seed},
          {"manifold", manifold_to_json(r.manifold)},
          {"parameters", r.parameters},
          {"outcome", r.outcome},
          {"timestamp", r.timestamp},
          {"tool_version", r.tool_version}};
}

inline ExperimentRecord record_from_json(const nlohmann::json& j) {
  try {
    if (j.at("record").get<std::string>() != kRecordFormat) throw FormatError("unsupported record format");
    ExperimentRecord r;
    r.kind = j.at("kind").get<std::string>();
    r.id = j.value("id", std::string{});
    r.seed = j.at("seed").get<std::uint64_t>();
    r.manifold = manifold_from_json(j.at("manifold"));
    r.parameters = j.at("parameters");
    r.outcome = j.at("outcome");
    r.timestamp = j.value("timestamp", std::string{});
    r.tool_version = j.value("tool_version", std::string{});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed experiment record: ") + e.what());
  }
}

inline void append_record(const ExperimentRecord& r, const std::string& path) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw DomainError("cannot append to '" + path + "'");
  out << to_json(r).dump() << '\n';
}

inline std::vector<ExperimentRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open records file '" + path + "'");
  std::vector<ExperimentRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError("bad JSONL line in '" + path + "': " + e.what());
    }
  }
  return out;
}

inline nlohmann::json to_json(const TransitionResult& r) {
  nlohmann::json conf = nlohmann::json::array();
  for (auto c : r.confidences) conf.push_back(to_string(c));
  nlohmann::json refinement = nlohmann::json::array(), spots = nlohmann::json::array();
  for (auto [t, m] : r.refinement) refinement.push_back({{"t", t}, {"minimal", m}});
  for (auto [t, m] : r.spot_checks) spots.push_back({{"t", t}, {"minimal", m}});
  return {{"f0_ref", r.f0_ref},
          {"t_grid", r.t_grid},
          {"minimal_flags", r.minimal_flags},
          {"counts", r.counts},
          {"is_morse", r.morse_flags},
          {"confidence", conf},
          {"T_estimate", r.T_estimate ? nlohmann::json(*r.T_estimate) : nlohmann::json("not reached")},
          {"refined", r.refined},
          {"truncation_level_used", r.truncation_level_used},
          {"generic", r.genericity.generic},
          {"genericity_reason", r.genericity.reason},
          {"refinement", refinement},
          {"spot_checks", spots}};
}

inline nlohmann::json to_json(const DecayFit& f) {
  return {{"r", f.r},
          {"times", f.times},
          {"residuals", f.residuals},
          {"slope", f.slope},
          {"intercept", f.intercept},
          {"expected_gap", f.expected_gap},
          {"relative_error", f.relative_error}};
}

inline nlohmann::json to_json(const SweepSummary& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : s.rows)
    rows.push_back({{"seed", r.seed},
                    {"generic", r.generic},
                    {"minimal", r.minimal},
                    {"count", r.count},
                    {"confidence", to_string(r.confidence)}});
  return {{"rows", rows},
          {"fraction_generic", s.fraction_generic},
          {"fraction_minimal_among_generic", s.fraction_minimal_among_generic},
          {"outliers", s.outliers}};
}

inline nlohmann::json to_json(const StabilityResult& s) {
  return {{"base_count", s.base_count}, {"epsilons", s.epsilons}, {"counts", s.counts}, {"agreement", s.agreement}};
}

inline ExperimentRecord make_record(std::string kind, std::uint64_t seed, const ManifoldSpec& m,
                                    nlohmann::json parameters, nlohmann::json outcome) {
  ExperimentRecord r;
  r.kind = std::move(kind);
  r.id = std::to_string(seed);
  r.seed = seed;
  r.manifold = m;
  r.parameters = std::move(parameters);
  r.outcome = std::move(outcome);
  r.timestamp = utc_timestamp();
  return r;
}

}  // namespace heatmorse
