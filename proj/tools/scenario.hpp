#pragma once

// Scenario documents for the hmf command-line tool.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmf/evolution.hpp"
#include "hmf/profile.hpp"

namespace hmf::cli {

using json = nlohmann::json;

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct DispersionParams {
  double lambda_min = 1e-3;
  std::optional<double> lambda_max;  // default 10 √m0
  std::size_t samples = 64;
};

struct SimulationParams {
  std::size_t n_theta = 256;
  std::size_t n_v = 257;
  std::optional<double> v_max;  // default 2 √(2 (e_star + m0))
  double dt = 0.01;
  double t_end = 10.0;
  std::vector<double> deltas;
  double delta0 = 1e-2;
  std::size_t snapshot_stride = 0;  // 0 disables snapshots
  std::size_t diagnostics_stride = 1;
  bool linearized = true;
  Scheme scheme = Scheme::perturbation;
};

struct SearchParams {
  std::vector<Profile> shapes;
  std::vector<double> m_grid;
};

struct Scenario {
  std::string name;
  Profile profile;
  double m0 = 1.0;
  std::size_t quadrature_nodes = default_quadrature_nodes;
  std::size_t steps_per_period = default_steps_per_period;
  DispersionParams dispersion;
  SimulationParams simulation;
  std::optional<SearchParams> search;
  std::vector<int> appendix_exponents{5, 6, 7, 8};
  std::string output_dir;
  std::string source_text;
  std::string source_path;
};

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

namespace detail {

/// Line of the first occurrence of "key" in the document, 0 if absent.
inline std::size_t line_of_key(const std::string& text, const std::string& key) {
  const std::string quoted = "\"" + key + "\"";
  const auto pos = text.find(quoted);
  if (pos == std::string::npos) return 0;
  std::size_t line = 1;
  for (std::size_t k = 0; k < pos; ++k)
    if (text[k] == '\n') ++line;
  return line;
}

class Reader {
 public:
  Reader(const std::string& path, const std::string& text) : path_(path), text_(text) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const std::size_t line = line_of_key(text_, leaf(key));
    throw ConfigError(path_ + ":" + (line ? std::to_string(line) : std::string("?")) + ": '" + key +
                      "' " + msg);
  }

  const json& member(const json& obj, const std::string& key, const std::string& path) const {
    if (!obj.is_object()) fail(path, "must be an object");
    if (!obj.contains(key)) fail(join(path, key), "is required");
    return obj.at(key);
  }

  double number(const json& obj, const std::string& key, const std::string& path) const {
    const json& v = member(obj, key, path);
    if (!v.is_number()) fail(join(path, key), "must be a number");
    return v.get<double>();
  }

  double positive(const json& obj, const std::string& key, const std::string& path) const {
    const double x = number(obj, key, path);
    if (!(x > 0.0)) fail(join(path, key), "must be positive");
    return x;
  }

  std::size_t count(const json& obj, const std::string& key, const std::string& path) const {
    const json& v = member(obj, key, path);
    if (!v.is_number_integer() || v.get<long long>() <= 0) fail(join(path, key), "must be a positive integer");
    return v.get<std::size_t>();
  }

  std::string text(const json& obj, const std::string& key, const std::string& path) const {
    const json& v = member(obj, key, path);
    if (!v.is_string()) fail(join(path, key), "must be a string");
    return v.get<std::string>();
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  static std::string leaf(const std::string& key) {
    const auto dot = key.rfind('.');
    std::string s = dot == std::string::npos ? key : key.substr(dot + 1);
    const auto br = s.find('[');
    return br == std::string::npos ? s : s.substr(0, br);
  }

  std::string path_;
  const std::string& text_;
};

}  // namespace detail

inline json profile_to_json(const Profile& p) {
  json j{{"family", to_string(p.family)},
         {"e_star", p.e_star},
         {"amplitude", p.amplitude},
         {"alpha", p.alpha}};
  if (p.psi) j["psi_params"] = {{"e_sharp", p.psi->e_sharp}, {"scale", p.psi->scale}};
  if (p.epsilon) j["epsilon"] = *p.epsilon;
  return j;
}

inline json equilibrium_to_json(const Equilibrium& eq) {
  json j = profile_to_json(eq.profile);
  j["m0"] = eq.m0;
  j["residual"] = eq.residual;
  return j;
}

inline Profile profile_from_json(const json& j, const detail::Reader& r, const std::string& path) {
  Profile p;
  try {
    p.family = profile_family_from_string(r.text(j, "family", path));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    r.fail(detail::Reader::join(path, "family"), e.what());
  }
  p.e_star = r.number(j, "e_star", path);
  p.amplitude = j.contains("amplitude") ? r.positive(j, "amplitude", path) : 1.0;
  p.alpha = j.contains("alpha") ? r.number(j, "alpha", path) : 2.0;
  if (p.family == ProfileFamily::psi_plus_bump) {
    const std::string pp = detail::Reader::join(path, "psi_params");
    const json& psi = r.member(j, "psi_params", path);
    p.psi = PsiParams{r.number(psi, "e_sharp", pp), r.positive(psi, "scale", pp)};
    p.epsilon = r.number(j, "epsilon", path);
  }
  try {
    validate(p);
  } catch (const Error& e) {
    r.fail(path, e.what());
  }
  return p;
}

inline Profile profile_from_json(const json& j) {
  const std::string text = j.dump(2);
  const detail::Reader r("<profile>", text);
  return profile_from_json(j, r, "");
}

inline Scenario parse_scenario(const std::string& text, const std::string& path) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  const detail::Reader r(path, text);
  Scenario s;
  s.source_text = text;
  s.source_path = path;
  if (!doc.is_object()) r.fail("<root>", "must be a JSON object");
  s.name = r.text(doc, "name", "");
  s.output_dir = doc.contains("output_dir") ? r.text(doc, "output_dir", "") : std::string("out/") + s.name;
  if (doc.contains("profile")) s.profile = profile_from_json(doc.at("profile"), r, "profile");
  if (doc.contains("m0")) s.m0 = r.positive(doc, "m0", "");
  if (doc.contains("quadrature_nodes")) s.quadrature_nodes = r.count(doc, "quadrature_nodes", "");
  if (doc.contains("steps_per_period")) s.steps_per_period = r.count(doc, "steps_per_period", "");

  if (doc.contains("dispersion")) {
    const json& d = doc.at("dispersion");
    if (d.contains("lambda_min")) s.dispersion.lambda_min = r.positive(d, "lambda_min", "dispersion");
    if (d.contains("lambda_max")) s.dispersion.lambda_max = r.positive(d, "lambda_max", "dispersion");
    if (d.contains("samples")) s.dispersion.samples = r.count(d, "samples", "dispersion");
    if (s.dispersion.lambda_max && !(*s.dispersion.lambda_max > s.dispersion.lambda_min))
      r.fail("dispersion.lambda_max", "must exceed lambda_min");
  }

  if (doc.contains("simulation")) {
    const json& m = doc.at("simulation");
    const std::string p = "simulation";
    auto& sim = s.simulation;
    if (m.contains("n_theta")) sim.n_theta = r.count(m, "n_theta", p);
    if (m.contains("n_v")) sim.n_v = r.count(m, "n_v", p);
    if (sim.n_theta < 4) r.fail("simulation.n_theta", "must be at least 4");
    if (sim.n_v < 4) r.fail("simulation.n_v", "must be at least 4");
    if (m.contains("v_max")) sim.v_max = r.positive(m, "v_max", p);
    if (m.contains("dt")) sim.dt = r.positive(m, "dt", p);
    if (m.contains("t_end")) sim.t_end = r.positive(m, "t_end", p);
    if (m.contains("delta0")) sim.delta0 = r.positive(m, "delta0", p);
    if (m.contains("snapshot_stride")) {
      const json& v = m.at("snapshot_stride");
      if (!v.is_number_integer() || v.get<long long>() < 0)
        r.fail("simulation.snapshot_stride", "must be a nonnegative integer");
      sim.snapshot_stride = v.get<std::size_t>();
    }
    if (m.contains("diagnostics_stride")) sim.diagnostics_stride = r.count(m, "diagnostics_stride", p);
    if (m.contains("linearized")) {
      if (!m.at("linearized").is_boolean()) r.fail("simulation.linearized", "must be true or false");
      sim.linearized = m.at("linearized").get<bool>();
    }
    if (m.contains("scheme")) {
      try {
        sim.scheme = scheme_from_string(r.text(m, "scheme", p));
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        r.fail("simulation.scheme", e.what());
      }
    }
    if (m.contains("deltas")) {
      const json& d = m.at("deltas");
      if (!d.is_array()) r.fail("simulation.deltas", "must be an array");
      for (std::size_t k = 0; k < d.size(); ++k) {
        if (!d[k].is_number() || !(d[k].get<double>() > 0.0))
          r.fail("simulation.deltas[" + std::to_string(k) + "]", "must be a positive number");
        sim.deltas.push_back(d[k].get<double>());
      }
    }
  }

  if (doc.contains("search")) {
    const json& q = doc.at("search");
    SearchParams sp;
    const json& shapes = r.member(q, "shapes", "search");
    if (!shapes.is_array() || shapes.empty()) r.fail("search.shapes", "must be a nonempty array");
    for (std::size_t k = 0; k < shapes.size(); ++k)
      sp.shapes.push_back(profile_from_json(shapes[k], r, "search.shapes[" + std::to_string(k) + "]"));
    const json& ms = r.member(q, "m_grid", "search");
    if (!ms.is_array() || ms.empty()) r.fail("search.m_grid", "must be a nonempty array");
    for (std::size_t k = 0; k < ms.size(); ++k) {
      if (!ms[k].is_number() || !(ms[k].get<double>() > 0.0))
        r.fail("search.m_grid[" + std::to_string(k) + "]", "must be a positive number");
      sp.m_grid.push_back(ms[k].get<double>());
    }
    s.search = std::move(sp);
  }

  if (doc.contains("appendix")) {
    const json& a = doc.at("appendix");
    const json& ks = r.member(a, "exponents", "appendix");
    if (!ks.is_array() || ks.size() < 2) r.fail("appendix.exponents", "must list at least two integers");
    s.appendix_exponents.clear();
    for (std::size_t k = 0; k < ks.size(); ++k) {
      if (!ks[k].is_number_integer() || ks[k].get<int>() < 1 || ks[k].get<int>() > 8)
        r.fail("appendix.exponents[" + std::to_string(k) + "]", "must be an integer in [1, 8]");
      s.appendix_exponents.push_back(ks[k].get<int>());
    }
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path + ": cannot open config");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_scenario(ss.str(), path);
}

}  // namespace hmf::cli
