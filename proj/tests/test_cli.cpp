#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"

using namespace heatmorse;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "heatmorse");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("heatmorse_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_mix(const fs::path& dir) {
  const auto path = dir / "mix.json";
  write_field(torus_field(1, {{{1}, Phase::Cos, 1.0}, {{2}, Phase::Cos, 1.0}}), path.string());
  return path;
}

const std::vector<std::string> kCommands = {"spectrum", "basis",     "evolve",    "census", "transition",
                                            "decay",    "sweep",     "stability", "plot"};

}  // namespace

TEST(Cli, SpectrumOfTwoTorus) {
  const auto dir = scratch("spectrum");
  const auto r = invoke({"spectrum", "--manifold", "torus", "--n", "2", "--count", "9", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "0,1,2,4,5,8,9,10,13");
  EXPECT_NE(r.out.find("5\t8\t4"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "spectrum_config.json"));
}

TEST(Cli, SpectrumOfSphereHasHarmonicMultiplicities) {
  const auto r = invoke({"spectrum", "--manifold", "sphere", "--n", "2", "--count", "4", "--out", scratch("s2").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "0,2,6,12");
  EXPECT_NE(r.out.find("3\t12\t7"), std::string::npos);
}

TEST(Cli, CensusOfCosine) {
  const auto dir = scratch("census");
  const auto r = invoke({"census", "--manifold", "torus", "--n", "1", "--e1", "1,0", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("count").get<long>(), 2);
  EXPECT_TRUE(j.at("is_minimal").get<bool>());
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "census.json")), j);
}

TEST(Cli, SphereLinearForm) {
  const auto r = invoke({"census", "--manifold", "sphere", "--n", "2", "--e1", "0,0,1", "--out", scratch("sl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out).at("count").get<long>(), 2);
}

TEST(Cli, TransitionWorkedExample) {
  const auto dir = scratch("transition");
  const auto field = write_mix(dir);
  const auto r = invoke({"transition", "--field", field.string(), "--t-max", "2", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto pos = r.out.find("T_estimate = ");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_NEAR(std::stod(r.out.substr(pos + 13)), std::log(4.0) / 3.0, 1e-3);
  const auto recs = read_records((dir / "experiments.jsonl").string());
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].kind, "transition");
  EXPECT_EQ(recs[0].parameters.at("options").at("t-max").get<std::string>(), "2");
}

TEST(Cli, TransitionNotReachedForNonGenericField) {
  const auto dir = scratch("notreached");
  const auto path = dir / "cos2.json";
  write_field(torus_field(1, {{{2}, Phase::Cos, 1.0}}), path.string());
  const auto r = invoke({"transition", "--field", path.string(), "--t-max", "1", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("not reached"), std::string::npos);
  EXPECT_NE(r.out.find("generic: no"), std::string::npos);
}

TEST(Cli, DecaySlope) {
  const auto dir = scratch("decay");
  const auto r = invoke({"decay", "--field", write_mix(dir).string(), "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(std::stod(r.out.substr(r.out.find("slope = ") + 8)), -3.0, 0.03);
}

TEST(Cli, SweepAndStability) {
  const auto dir = scratch("sweep");
  auto r = invoke({"sweep", "--manifold", "torus", "--n", "1", "--seeds", "10", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("fraction_generic = 1"), std::string::npos);
  r = invoke({"stability", "--e1", "1,0", "--eps", "0,0.01", "--trials", "4", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("eps = 0.01 agreement = 1"), std::string::npos);
  EXPECT_EQ(read_records((dir / "experiments.jsonl").string()).size(), 2u);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("codes").string();
  EXPECT_EQ(invoke({"census", "--e1", "1,0", "--bogus", "--out", dir}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({}).code, cli::kExitUsage);
  const auto missing = invoke({"census", "--out", dir});
  EXPECT_EQ(missing.code, cli::kExitUsage);
  EXPECT_NE(missing.err.find("--field or --e1"), std::string::npos);
  EXPECT_EQ(invoke({"census", "--e1", "1,0,2", "--out", dir}).code, cli::kExitUsage);

  const auto constant = scratch("codes") / "const.json";
  write_field(torus_field(1, {{{0}, Phase::Cos, 3.0}}), constant.string());
  const auto r = invoke({"census", "--field", constant.string(), "--out", dir});
  EXPECT_EQ(r.code, cli::kExitDomain);
  EXPECT_NE(r.err.find("constant"), std::string::npos);

  EXPECT_EQ(invoke({"census", "--field", dir + "/absent.json", "--out", dir}).code, cli::kExitDomain);
  EXPECT_EQ(invoke({"transition", "--e1", "1,0", "--t-max", "0", "--out", dir}).code, cli::kExitDomain);
  EXPECT_EQ(invoke({"--help"}).code, cli::kExitOk);
}

TEST(Cli, BasisAndEvolveRoundTrip) {
  const auto dir = scratch("basis");
  const auto r = invoke({"basis", "--manifold", "sphere", "--n", "2", "--level", "2", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (int i = 0; i < 5; ++i) EXPECT_TRUE(fs::exists(dir / ("basis_sphere2_j2_" + std::to_string(i) + ".json")));
  const auto src = dir / "basis_sphere2_j2_3.json";
  const auto e = invoke({"evolve", "--field", src.string(), "--t", "0.25", "--out", dir.string()});
  ASSERT_EQ(e.code, 0) << e.err;
  const auto evolved = read_field((dir / "evolved.json").string());
  const auto expected = propagate(read_field(src.string()), 0.25);
  EXPECT_TRUE(evolved == expected);
  EXPECT_EQ(evolved.terms()[0].coeff, std::exp(-6.0 * 0.25));
}

TEST(Cli, OutputDirectoryFromEnvironment) {
  const auto dir = scratch("env");
  ::setenv("HEATMORSE_OUT", dir.string().c_str(), 1);
  const auto r = invoke({"spectrum", "--count", "3"});
  ::unsetenv("HEATMORSE_OUT");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto cfg = nlohmann::json::parse(slurp(dir / "spectrum_config.json"));
  EXPECT_EQ(cfg.at("command"), "spectrum");
  EXPECT_EQ(cfg.at("options").at("count").get<std::string>(), "3");
  EXPECT_EQ(cfg.at("tool_version"), defaults::kToolVersion);
  EXPECT_TRUE(cfg.contains("defaults"));
}

TEST(Cli, PlotRegeneratesFromRecords) {
  const auto dir = scratch("plot");
  ASSERT_EQ(invoke({"decay", "--field", write_mix(dir).string(), "--out", dir.string()}).code, 0);
  const auto r = invoke({"plot", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t csv = 0, svg = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    csv += e.path().extension() == ".csv";
    svg += e.path().extension() == ".svg";
  }
  EXPECT_EQ(csv, 1u);
  EXPECT_EQ(svg, 1u);
  const auto first = r.out;
  EXPECT_EQ(invoke({"plot", "--out", dir.string()}).out, first);
  EXPECT_EQ(invoke({"plot", "--out", scratch("plot_empty").string()}).code, cli::kExitDomain);
}

TEST(Cli, HelpListsEveryFlagInTheSource) {
  std::string help;
  for (const auto& c : kCommands) {
    const auto r = invoke({c, "--help"});
    ASSERT_EQ(r.code, 0) << c;
    help += r.out;
  }
  EXPECT_NE(invoke({"--help"}).out.find("HEATMORSE_OUT"), std::string::npos);

  auto flags_in = [&](const std::string& text, bool quoted) {
    std::set<std::string> found;
    const std::regex pattern(quoted ? R"re("(--[a-z][a-z0-9-]*)")re" : R"re((--[a-z][a-z0-9-]*))re");
    for (std::sregex_iterator it(text.begin(), text.end(), pattern), end; it != end; ++it) found.insert((*it)[1]);
    return found;
  };
  auto source = flags_in(slurp(HEATMORSE_CLI_SOURCE), true);
  auto shown = flags_in(help, false);
  shown.erase("--help");
  source.erase("--help");
  ASSERT_FALSE(source.empty());
  for (const auto& f : source) EXPECT_TRUE(shown.contains(f)) << f << " missing from help";
  for (const auto& f : shown) EXPECT_TRUE(source.contains(f)) << f << " shown but not defined";
}
