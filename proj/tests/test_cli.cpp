#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "hmf/grid_io.hpp"
#include "scenario.hpp"

using namespace hmf;
using namespace hmf::cli;
namespace fs = std::filesystem;

namespace {

const char* stable_doc = R"({
  "name": "stable-test",
  "profile": {"family": "bump-compact", "e_star": -0.5},
  "m0": 1.0,
  "quadrature_nodes": 64,
  "dispersion": {"lambda_min": 0.01, "samples": 16}
})";

const char* unstable_doc = R"({
  "name": "unstable-test",
  "profile": {"family": "psi-plus-bump", "e_star": 15.96,
              "psi_params": {"e_sharp": 15.92, "scale": 0.64}, "epsilon": 0.001},
  "m0": 16.0,
  "quadrature_nodes": 64,
  "simulation": {"n_theta": 64, "n_v": 257, "dt": 0.01, "t_end": 0.5,
                 "deltas": [1e-5, 1e-6], "snapshot_stride": 25, "delta0": 0.01}
})";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hmf_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int run(const std::string& args) {
  const std::string cmd = std::string("HMF_THREADS=1 \"") + HMF_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config_error(const std::string& text) {
  try {
    parse_scenario(text, "cfg.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Scenario, Defaults) {
  const Scenario s = parse_scenario(stable_doc, "cfg.json");
  EXPECT_EQ(s.name, "stable-test");
  EXPECT_EQ(s.output_dir, "out/stable-test");
  EXPECT_EQ(s.profile.family, ProfileFamily::bump_compact);
  EXPECT_EQ(s.profile.e_star, -0.5);
  EXPECT_EQ(s.profile.alpha, 2.0);
  EXPECT_EQ(s.quadrature_nodes, 64u);
  EXPECT_EQ(s.steps_per_period, default_steps_per_period);
  EXPECT_EQ(s.simulation.n_theta, 256u);
  EXPECT_EQ(s.simulation.n_v, 257u);
  EXPECT_EQ(s.simulation.scheme, Scheme::perturbation);
  EXPECT_FALSE(s.dispersion.lambda_max.has_value());
  EXPECT_FALSE(s.search.has_value());
  EXPECT_EQ(s.appendix_exponents, (std::vector<int>{5, 6, 7, 8}));
}

TEST(Scenario, PsiProfile) {
  const Scenario s = parse_scenario(unstable_doc, "cfg.json");
  ASSERT_TRUE(s.profile.psi.has_value());
  EXPECT_EQ(s.profile.psi->e_sharp, 15.92);
  EXPECT_EQ(s.profile.psi->scale, 0.64);
  EXPECT_EQ(*s.profile.epsilon, 1e-3);
  EXPECT_EQ(s.simulation.deltas, (std::vector<double>{1e-5, 1e-6}));
  EXPECT_EQ(s.simulation.snapshot_stride, 25u);
}

TEST(Scenario, ErrorsNameTheLine) {
  EXPECT_EQ(config_error("{\n  \"name\": \"x\",\n  \"m0\": -1\n}"), "cfg.json:3: 'm0' must be positive");
  EXPECT_EQ(config_error("{\n  \"m0\": 1\n}"), "cfg.json:?: 'name' is required");
  EXPECT_EQ(config_error("{\"name\": \"x\",\n \"simulation\": {\n \"deltas\": [1e-4, -2]}}"),
            "cfg.json:3: 'simulation.deltas[1]' must be a positive number");
  EXPECT_EQ(config_error("{\"name\": \"x\",\n\"profile\": {\"family\": \"box\", \"e_star\": 0}}"),
            "cfg.json:2: 'profile.family' unknown profile family 'box' (expected bump-compact or psi-plus-bump)");
  EXPECT_NE(config_error("{\"name\": ").find("cfg.json: "), std::string::npos);
  EXPECT_EQ(config_error("{\"name\": \"x\",\n\"simulation\": {\"scheme\": \"rk4\"}}"),
            "cfg.json:2: 'simulation.scheme' unknown scheme 'rk4' (expected perturbation or full)");
}

TEST(Scenario, HashIsStable) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a_hex(stable_doc), fnv1a_hex(std::string(stable_doc)));
}

TEST(Scenario, ProfileJsonRoundTrip) {
  const Profile p = fixture::unstable_shape();
  const Profile q = profile_from_json(profile_to_json(p));
  EXPECT_EQ(q.family, p.family);
  EXPECT_EQ(q.e_star, p.e_star);
  EXPECT_EQ(q.psi->scale, p.psi->scale);
  EXPECT_EQ(*q.epsilon, *p.epsilon);
}

TEST(Cli, SteadyWritesEquilibriumAndManifest) {
  const fs::path dir = scratch("steady");
  const fs::path cfg = write_file(dir / "stable.json", stable_doc);
  ASSERT_EQ(run("steady --config " + cfg.string() + " --out " + (dir / "out").string()), 0);
  const json eq = json::parse(slurp(dir / "out/equilibrium.json"));
  EXPECT_EQ(eq["m0"], 1.0);
  EXPECT_LE(eq["residual"].get<double>(), 1e-10);
  EXPECT_NEAR(eq["amplitude"].get<double>(), fixture::stable().profile.amplitude, 1e-12);
  const json m = json::parse(slurp(dir / "out/manifest.json"));
  EXPECT_EQ(m["command"], "steady");
  EXPECT_EQ(m["scenario_hash"], fnv1a_hex(stable_doc));
  EXPECT_EQ(m["artifacts"], (json{"equilibrium.json", "manifest.json"}));
}

TEST(Cli, StableDispersionHasNoRoot) {
  const fs::path dir = scratch("dispersion");
  const fs::path cfg = write_file(dir / "stable.json", stable_doc);
  ASSERT_EQ(run("dispersion --config " + cfg.string() + " --out " + (dir / "out").string()), 0);
  const json d = json::parse(slurp(dir / "out/dispersion.json"));
  EXPECT_FALSE(d.contains("lambda_star"));
  const std::string csv = slurp(dir / "out/dispersion.csv");
  EXPECT_EQ(csv.rfind("lambda,G\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 17);
  EXPECT_EQ(run("mode --config " + cfg.string() + " --out " + (dir / "out").string()), 1);
}

TEST(Cli, KappaMatchesLibrary) {
  const fs::path dir = scratch("kappa");
  const fs::path cfg = write_file(dir / "stable.json", stable_doc);
  ASSERT_EQ(run("kappa --config " + cfg.string() + " --out " + (dir / "out").string()), 0);
  const json k = json::parse(slurp(dir / "out/kappa.json"));
  EXPECT_EQ(k["kappa"].get<double>(), kappa(fixture::stable(), 64, 64));
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("exit");
  const fs::path bad = write_file(dir / "bad.json", "{\n  \"name\": \"x\",\n  \"m0\": 0\n}");
  EXPECT_EQ(run("steady --config " + bad.string() + " --out " + (dir / "out").string()), 2);
  const fs::path no_search = write_file(dir / "plain.json", stable_doc);
  EXPECT_EQ(run("search --config " + no_search.string() + " --out " + (dir / "out").string()), 2);
  EXPECT_EQ(run("evolve --config " + no_search.string() + " --out " + (dir / "out").string()), 2);
  EXPECT_NE(run("steady --config " + (dir / "missing.json").string()), 0);
  EXPECT_NE(run("frobnicate"), 0);
}

TEST(Cli, EvolveIsDeterministic) {
  const fs::path dir = scratch("evolve");
  const fs::path cfg = write_file(dir / "unstable.json", unstable_doc);
  ASSERT_EQ(run("evolve --config " + cfg.string() + " --out " + (dir / "a").string()), 0);
  ASSERT_EQ(run("evolve --config " + cfg.string() + " --out " + (dir / "b").string()), 0);
  const json m = json::parse(slurp(dir / "a/manifest.json"));
  for (const auto& name : m["artifacts"]) {
    const std::string n = name.get<std::string>();
    EXPECT_EQ(slurp(dir / "a" / n), slurp(dir / "b" / n)) << n;
  }
  EXPECT_EQ(m["derived"]["runs"].size(), 2u);
  EXPECT_LE(m["derived"]["runs"][0]["min_value"].get<double>(), 0.0);
  EXPECT_TRUE(fs::exists(dir / "a/linearized.csv"));
  const std::string csv = slurp(dir / "a/diagnostics_delta0.csv");
  EXPECT_EQ(csv.rfind("t,mass,kinetic,total_energy,Mx,My,L1_dev\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 52);
  const PhaseSpaceGrid snap = read_grid((dir / "a/snapshots/delta1_step000050.hmfg").string());
  EXPECT_EQ(snap.n_theta, 64u);
  EXPECT_EQ(snap.n_v, 257u);
  EXPECT_EQ(run("mode --config " + cfg.string() + " --out " + (dir / "a").string()), 0);
  EXPECT_EQ(read_grid((dir / "a/mode.hmfg").string()).n_v, 257u);
}

TEST(Scenario, ShippedConfigsParse) {
  const std::string dir = std::string(HMF_SOURCE_DIR) + "/scenarios/";
  const Scenario u = load_scenario(dir + "unstable.json");
  EXPECT_EQ(u.m0, fixture::unstable_m0);
  EXPECT_EQ(u.profile.e_star, fixture::unstable_shape().e_star);
  EXPECT_EQ(u.profile.psi->e_sharp, fixture::unstable_shape().psi->e_sharp);
  EXPECT_EQ(u.profile.psi->scale, fixture::unstable_shape().psi->scale);
  EXPECT_EQ(*u.profile.epsilon, *fixture::unstable_shape().epsilon);
  const Scenario s = load_scenario(dir + "stable.json");
  EXPECT_EQ(s.profile.e_star, fixture::stable_shape().e_star);
  EXPECT_EQ(s.simulation.scheme, Scheme::full);
  const Scenario q = load_scenario(dir + "search.json");
  ASSERT_TRUE(q.search.has_value());
  EXPECT_EQ(q.search->shapes.size(), 9u);
  bool has_fixture = false;
  for (const auto& p : q.search->shapes)
    has_fixture |= p.e_star == 15.96 && p.psi->e_sharp == 15.92 && p.psi->scale == 0.64;
  EXPECT_TRUE(has_fixture);
  EXPECT_EQ(load_scenario(dir + "appendix.json").appendix_exponents, (std::vector<int>{5, 6, 7, 8}));
}
