// hmf: scenario-driven front end for the HMF instability laboratory.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/os.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hmf/evolution.hpp"
#include "hmf/grid_io.hpp"
#include "scenario.hpp"

namespace fs = std::filesystem;
using namespace hmf;
using namespace hmf::cli;

namespace {

constexpr const char* tool_version = "1.0.0";

struct Output {
  fs::path dir;
  std::vector<std::string> artifacts;

  std::string add(const std::string& name) {
    artifacts.push_back(name);
    return (dir / name).string();
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << text;
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string g17(double x) { return fmt::format("{:.17g}", x); }

void write_diagnostics_csv(const std::string& path, const SimDiagnostics& series) {
  std::string out = "t,mass,kinetic,total_energy,Mx,My,L1_dev\n";
  for (const auto& r : series)
    out += fmt::format("{},{},{},{},{},{},{}\n", g17(r.t), g17(r.mass), g17(r.kinetic),
                       g17(r.total_energy), g17(r.Mx), g17(r.My), g17(r.L1_dev));
  write_text(path, out);
}

json optional_number(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

json base_manifest(const Scenario& s, const std::string& command) {
  return json{{"tool", "hmf"},
              {"version", tool_version},
              {"command", command},
              {"scenario", s.name},
              {"config", s.source_path},
              {"scenario_hash", fnv1a_hex(s.source_text)}};
}

void finish(const Scenario& s, const std::string& command, Output& out, json derived) {
  json m = base_manifest(s, command);
  m["derived"] = std::move(derived);
  const std::string path = out.add("manifest.json");
  m["artifacts"] = out.artifacts;
  write_json(path, m);
  for (const auto& a : out.artifacts)
    if (!fs::exists(out.dir / a)) throw Error("artifact missing after run: " + a);
}

Equilibrium steady_state(const Scenario& s) { return solve_self_consistency(s.profile, s.m0); }

double lambda_max_of(const Scenario& s) {
  return s.dispersion.lambda_max.value_or(default_lambda_max(s.m0));
}

double v_max_of(const Scenario& s, const Equilibrium& eq) {
  return s.simulation.v_max.value_or(default_v_max(eq));
}

int cmd_steady(const Scenario& s, Output& out) {
  const Equilibrium eq = steady_state(s);
  json j = equilibrium_to_json(eq);
  j["mass"] = mass(eq, s.quadrature_nodes);
  write_json(out.add("equilibrium.json"), j);
  finish(s, "steady", out, {{"m0", eq.m0}, {"residual", eq.residual}});
  fmt::print("m0 = {}  residual = {:.3e}\n", g17(eq.m0), eq.residual);
  return 0;
}

int cmd_kappa(const Scenario& s, Output& out) {
  const Equilibrium eq = steady_state(s);
  const double k = kappa(eq, s.quadrature_nodes, s.quadrature_nodes);
  write_json(out.add("kappa.json"), {{"m0", eq.m0}, {"kappa", k}, {"nodes", s.quadrature_nodes}});
  finish(s, "kappa", out, {{"m0", eq.m0}, {"kappa", k}});
  fmt::print("kappa = {}\n", g17(k));
  return 0;
}

int cmd_dispersion(const Scenario& s, Output& out) {
  const Equilibrium eq = steady_state(s);
  const DispersionEvaluator ev(eq, s.quadrature_nodes, s.steps_per_period);
  const auto scan = dispersion_scan(ev, s.dispersion.lambda_min, lambda_max_of(s), s.dispersion.samples);
  std::string csv = "lambda,G\n";
  for (const auto& p : scan) csv += g17(p.lambda) + "," + g17(p.G) + "\n";
  write_text(out.add("dispersion.csv"), csv);
  const auto root = find_growth_rate_detailed(ev, lambda_max_of(s), s.dispersion.samples);
  json j{{"m0", eq.m0}, {"lambda_max", lambda_max_of(s)}, {"samples", scan.size()}};
  json derived{{"m0", eq.m0}};
  if (root) {
    j["lambda_star"] = root->lambda_star;
    j["G_at_root"] = root->G_at_root;
    j["bracket"] = {root->bracket_lo, root->bracket_hi};
    derived["lambda_star"] = root->lambda_star;
    fmt::print("lambda* = {}  G(lambda*) = {:.3e}\n", g17(root->lambda_star), root->G_at_root);
  } else {
    fmt::print("no sign change of G on the scan: no growing mode found\n");
  }
  write_json(out.add("dispersion.json"), j);
  finish(s, "dispersion", out, derived);
  return 0;
}

struct ModeData {
  Equilibrium eq;
  double kappa = 0.0;
  double lambda_star = 0.0;
  Eigenmode mode;
};

ModeData build_mode(const Scenario& s) {
  ModeData d;
  d.eq = steady_state(s);
  d.kappa = kappa(d.eq, s.quadrature_nodes, s.quadrature_nodes);
  const DispersionEvaluator ev(d.eq, s.quadrature_nodes, s.steps_per_period);
  const auto root = find_growth_rate_detailed(ev, lambda_max_of(s), s.dispersion.samples);
  if (!root) throw Error("no growing mode: G has no sign change up to lambda_max");
  d.lambda_star = root->lambda_star;
  d.mode = eigenmode(d.eq, d.lambda_star, s.simulation.n_theta, s.simulation.n_v, v_max_of(s, d.eq), ev,
                     s.steps_per_period);
  return d;
}

int cmd_mode(const Scenario& s, Output& out) {
  const ModeData d = build_mode(s);
  write_grid(d.mode.grid, out.add("mode.hmfg"));
  write_json(out.add("mode.json"), {{"lambda_star", d.lambda_star},
                                    {"normalization", d.mode.normalization},
                                    {"n_theta", d.mode.grid.n_theta},
                                    {"n_v", d.mode.grid.n_v},
                                    {"v_max", d.mode.grid.v_max}});
  finish(s, "mode", out, {{"m0", d.eq.m0}, {"kappa", d.kappa}, {"lambda_star", d.lambda_star}});
  fmt::print("lambda* = {}  normalization = {}\n", g17(d.lambda_star), g17(d.mode.normalization));
  return 0;
}

int cmd_evolve(const Scenario& s, Output& out) {
  const auto& sim = s.simulation;
  if (sim.deltas.empty()) throw ConfigError(s.source_path + ": 'simulation.deltas' must be nonempty for evolve");
  const ModeData d = build_mode(s);
  RunSettings settings{sim.dt, sim.t_end, sim.diagnostics_stride, sim.scheme};

  json derived{{"m0", d.eq.m0}, {"kappa", d.kappa}, {"lambda_star", d.lambda_star}};
  json runs = json::array();
  std::vector<double> escaped_deltas, escaped_times;
  if (sim.snapshot_stride > 0) fs::create_directories(out.dir / "snapshots");
  for (std::size_t k = 0; k < sim.deltas.size(); ++k) {
    const double delta = sim.deltas[k];
    SnapshotHook hook;
    if (sim.snapshot_stride > 0)
      hook = [&](std::size_t step, double, const PhaseSpaceGrid& f) {
        if (step % sim.snapshot_stride != 0) return;
        write_grid(f, out.add(fmt::format("snapshots/delta{}_step{:06d}.hmfg", k, step)));
      };
    const DeltaOutcome r = run_delta(d.eq, d.mode, delta, sim.delta0, settings, hook);
    const std::string csv = fmt::format("diagnostics_delta{}.csv", k);
    write_diagnostics_csv(out.add(csv), r.series);
    json w = r.window ? json{r.window->t_lo, r.window->t_hi} : json(nullptr);
    double lowest = 0.0;
    for (const auto& row : r.series) lowest = std::min(lowest, row.min_value);
    runs.push_back({{"delta", delta},
                    {"initial_deviation", r.initial_deviation},
                    {"min_initial_value", r.min_initial_value},
                    {"min_value", lowest},
                    {"fit_window", w},
                    {"rate", optional_number(r.rate)},
                    {"rate_magnetization", optional_number(r.rate_magnetization)},
                    {"t_delta", optional_number(r.t_delta)},
                    {"diagnostics", csv}});
    if (r.t_delta) {
      escaped_deltas.push_back(delta);
      escaped_times.push_back(*r.t_delta);
    }
    fmt::print("delta = {:.1e}  rate = {}  t_delta = {}\n", delta,
               r.rate ? fmt::format("{:.6f}", *r.rate) : std::string("n/a"),
               r.t_delta ? fmt::format("{:.4f}", *r.t_delta) : std::string("not reached"));
  }
  derived["runs"] = runs;
  derived["delta0"] = sim.delta0;
  derived["scheme"] = to_string(sim.scheme);
  if (escaped_deltas.size() >= 2) {
    const EscapeFit fit = fit_escape_times(escaped_deltas, escaped_times);
    derived["escape_fit"] = {{"intercept", fit.intercept},
                             {"slope", fit.slope},
                             {"slope_times_lambda_star", fit.slope * d.lambda_star}};
  }
  if (sim.linearized) {
    const SimDiagnostics lin = run_linearized(d.eq, unit_l1_mode(d.mode), settings);
    write_diagnostics_csv(out.add("linearized.csv"), lin);
    const GrowthWindow w = linear_growth_window(d.lambda_star);
    std::optional<double> rate;
    if (w.t_hi <= lin.back().t + 1e-12) rate = fit_growth_rate(lin, w.t_lo, w.t_hi);
    derived["linearized"] = {{"fit_window", {w.t_lo, w.t_hi}}, {"rate", optional_number(rate)}};
  }
  finish(s, "evolve", out, derived);
  return 0;
}

int cmd_verify_appendix(const Scenario& s, Output& out) {
  const auto rows = separatrix_samples(s.appendix_exponents);
  const SeparatrixLimit fit = fit_separatrix_limit(rows);
  std::string csv = "e,alpha,beta,g1,alpha_g1\n";
  for (const auto& r : rows)
    csv += fmt::format("{},{},{},{},{}\n", g17(r.e), g17(r.alpha), g17(r.beta), g17(r.g1), g17(r.alpha_g1));
  write_text(out.add("appendix.csv"), csv);
  const double e8 = 1.0 - 1e-8;
  const json j{{"sqrt_shell_integral_at_1", sqrt_shell_integral(1.0)},
               {"four_sqrt2", 4.0 * std::sqrt(2.0)},
               {"beta_at_1", beta_e(1.0)},
               {"eight_sqrt2_over_3", 8.0 * std::sqrt(2.0) / 3.0},
               {"alpha_log_ratio_at_1e-8", alpha_e(e8) / (-std::sqrt(2.0) * std::log(1.0 - e8))},
               {"limit_constant", fit.constant},
               {"limit_slope", fit.slope},
               {"limit_fit_max_residual", fit.max_residual}};
  write_json(out.add("appendix.json"), j);
  finish(s, "verify-appendix", out, {{"alpha_g1_limit", fit.constant}});
  fmt::print("alpha*g1 -> {} (8*sqrt(2)/3 = {})\n", g17(fit.constant), g17(8.0 * std::sqrt(2.0) / 3.0));
  return 0;
}

int cmd_search(const Scenario& s, Output& out) {
  if (!s.search) throw ConfigError(s.source_path + ": 'search' section is required for the search command");
  const auto found = search_unstable(s.search->shapes, s.search->m_grid, s.quadrature_nodes);
  std::string csv = "shape_index,m_index,m0,kappa,amplitude\n";
  json list = json::array();
  for (const auto& c : found) {
    csv += fmt::format("{},{},{},{},{}\n", c.shape_index, c.m_index, g17(c.equilibrium.m0), g17(c.kappa),
                       g17(c.equilibrium.profile.amplitude));
    json e = equilibrium_to_json(c.equilibrium);
    e["kappa"] = c.kappa;
    e["shape_index"] = c.shape_index;
    e["m_index"] = c.m_index;
    list.push_back(e);
  }
  write_text(out.add("search.csv"), csv);
  write_json(out.add("search.json"), list);
  json derived{{"candidates", found.size()}};
  if (!found.empty()) derived["max_kappa"] = found.front().kappa;
  finish(s, "search", out, derived);
  fmt::print("{} equilibria, {} with kappa > 1\n", found.size(),
             std::count_if(found.begin(), found.end(), [](const auto& c) { return c.kappa > 1.0; }));
  return 0;
}

void set_threads(int requested) {
  int n = requested;
  if (n <= 0)
    if (const char* env = std::getenv("HMF_THREADS")) n = std::atoi(env);
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HMF steady states, dispersion relation and instability runs"};
  app.require_subcommand(1);
  std::string config;
  std::string out_dir;
  int threads = 0;

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Scenario&, Output&);
  };
  const std::vector<Command> commands = {
      {"steady", "solve the self-consistency condition and write the equilibrium", cmd_steady},
      {"kappa", "evaluate the stability criterion kappa", cmd_kappa},
      {"dispersion", "scan G(lambda) and locate the growth rate", cmd_dispersion},
      {"mode", "write the unstable eigenmode grid", cmd_mode},
      {"evolve", "delta sweep of perturbed nonlinear runs", cmd_evolve},
      {"verify-appendix", "near-separatrix constants", cmd_verify_appendix},
      {"search", "scan shapes and magnetizations for kappa > 1", cmd_search},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config, "scenario JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (default: output_dir of the scenario)");
    sub->add_option("--threads", threads, "worker threads (also HMF_THREADS)");
    subs.push_back(sub);
  }
  CLI11_PARSE(app, argc, argv);

  try {
    set_threads(threads);
    const Scenario s = load_scenario(config);
    Output out;
    out.dir = out_dir.empty() ? fs::path(s.output_dir) : fs::path(out_dir);
    fs::create_directories(out.dir);
    for (std::size_t k = 0; k < commands.size(); ++k)
      if (subs[k]->parsed()) return commands[k].run(s, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
