#pragma once

// Drivers for the δ-sweep: perturbed nonlinear runs, linearized runs of the
// eigenmode, growth fits and escape times.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "hmf/spectral.hpp"
#include "hmf/vlasov.hpp"

namespace hmf {

enum class Scheme { perturbation, full };

inline const char* to_string(Scheme s) { return s == Scheme::full ? "full" : "perturbation"; }

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "perturbation") return Scheme::perturbation;
  if (s == "full") return Scheme::full;
  throw Error("unknown scheme '" + s + "' (expected perturbation or full)");
}

struct RunSettings {
  double dt = 0.01;
  double t_end = 10.0;
  std::size_t diagnostics_stride = 1;
  Scheme scheme = Scheme::perturbation;
};

/// Called after every step with the step index, the time and the full
/// distribution f (not the perturbation).
using SnapshotHook = std::function<void(std::size_t, double, const PhaseSpaceGrid&)>;

namespace detail {

inline std::size_t step_count(const RunSettings& s) {
  if (!(s.dt > 0.0) || !(s.t_end > 0.0)) throw Error("dt and t_end must be positive");
  return static_cast<std::size_t>(std::llround(s.t_end / s.dt));
}

inline PhaseSpaceGrid add_grids(const PhaseSpaceGrid& a, const PhaseSpaceGrid& b) {
  PhaseSpaceGrid out = a;
  for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] += b.values[k];
  return out;
}

}  // namespace detail

/// Nonlinear evolution of f(0) = f0 + h(0). With Scheme::perturbation the
/// state is h = f - f0 and f0 stays analytic (step_perturbation); with
/// Scheme::full the sampled f is advanced by step_nonlinear. L1_dev is
/// always ‖f - f0‖₁ against the sampled f0.
inline SimDiagnostics run_nonlinear(const Equilibrium& eq, const PhaseSpaceGrid& initial,
                                    const RunSettings& settings, const SnapshotHook& hook = {}) {
  const std::size_t steps = detail::step_count(settings);
  const PhaseSpaceGrid f0 = equilibrium_grid(eq, initial.n_theta, initial.n_v, initial.v_max);
  const std::size_t stride = std::max<std::size_t>(1, settings.diagnostics_stride);
  SimDiagnostics series;
  if (settings.scheme == Scheme::full) {
    PhaseSpaceGrid f = initial;
    series.push_back(diagnostics(f, f0, 0.0));
    if (hook) hook(0, 0.0, f);
    for (std::size_t k = 1; k <= steps; ++k) {
      step_nonlinear(f, settings.dt);
      const double t = static_cast<double>(k) * settings.dt;
      if (k % stride == 0 || k == steps) series.push_back(diagnostics(f, f0, t));
      if (hook) hook(k, t, f);
    }
    return series;
  }
  const LinearSource src(eq, initial);
  PhaseSpaceGrid h = initial;
  for (std::size_t k = 0; k < h.values.size(); ++k) h.values[k] -= f0.values[k];
  auto record = [&](std::size_t k, double t) {
    const bool want_row = k % stride == 0 || k == steps;
    if (!want_row && !hook) return;
    const PhaseSpaceGrid f = detail::add_grids(f0, h);
    if (want_row) series.push_back(diagnostics(f, f0, t));
    if (hook) hook(k, t, f);
  };
  record(0, 0.0);
  for (std::size_t k = 1; k <= steps; ++k) {
    step_perturbation(h, src, settings.dt);
    record(k, static_cast<double>(k) * settings.dt);
  }
  return series;
}

/// Linearized evolution of a signed grid; L1_dev is its L¹ norm, and the
/// moment columns refer to the perturbation itself.
inline SimDiagnostics run_linearized(const Equilibrium& eq, const PhaseSpaceGrid& initial,
                                     const RunSettings& settings) {
  const std::size_t steps = detail::step_count(settings);
  const std::size_t stride = std::max<std::size_t>(1, settings.diagnostics_stride);
  const LinearSource src(eq, initial);
  PhaseSpaceGrid zero = initial;
  std::fill(zero.values.begin(), zero.values.end(), 0.0);
  PhaseSpaceGrid g = initial;
  SimDiagnostics series{diagnostics(g, zero, 0.0)};
  for (std::size_t k = 1; k <= steps; ++k) {
    step_linearized(g, src, settings.dt);
    if (k % stride == 0 || k == steps)
      series.push_back(diagnostics(g, zero, static_cast<double>(k) * settings.dt));
  }
  return series;
}

/// Fit window for a linearized run started on the eigenmode: one e-folding
/// time of transient, then 3.5 e-folds of growth.
inline GrowthWindow linear_growth_window(double lambda_star) {
  return {1.0 / lambda_star, 4.5 / lambda_star};
}

/// |M - M0| for a row of a nonlinear run about an equilibrium with
/// magnetization (mx0, 0).
inline double magnetization_deviation(const DiagnosticsRow& r, double mx0) {
  return std::hypot(r.Mx - mx0, r.My);
}

struct DeltaOutcome {
  double delta = 0.0;
  double initial_deviation = 0.0;  // ‖f(0) - f0‖₁
  double min_initial_value = 0.0;
  std::optional<GrowthWindow> window;
  std::optional<double> rate;             // fitted on ‖f - f0‖₁
  std::optional<double> rate_magnetization;  // fitted on |M - M0| over the same window
  std::optional<double> t_delta;
  SimDiagnostics series;
};

/// Growth fit over the automatic window and the escape time for one run.
/// `mx0` is the magnetization of f0 on the run's grid.
inline void analyse_run(DeltaOutcome& out, double mx0, double delta0) {
  out.window = auto_growth_window(out.series, out.delta);
  if (out.window) {
    out.rate = fit_growth_rate(out.series, out.window->t_lo, out.window->t_hi);
    try {
      out.rate_magnetization = fit_log_slope(out.series, out.window->t_lo, out.window->t_hi,
                                             [&](const DiagnosticsRow& r) {
                                               return magnetization_deviation(r, mx0);
                                             });
    } catch (const Error&) {
      out.rate_magnetization.reset();
    }
  }
  out.t_delta = escape_time(out.series, delta0);
}

/// Perturbed run for one δ: initial data f0 + δ·Re(g)·χ_δ, nonlinear
/// evolution, fit and escape time.
inline DeltaOutcome run_delta(const Equilibrium& eq, const Eigenmode& mode, double delta,
                              double delta0, const RunSettings& settings,
                              const SnapshotHook& hook = {}) {
  DeltaOutcome out;
  out.delta = delta;
  const PhaseSpaceGrid initial =
      build_perturbed_initial(eq, mode, PerturbationSpec::make(delta, eq.profile.alpha));
  double lowest = 0.0;
  for (double x : initial.values) lowest = std::min(lowest, x);
  out.min_initial_value = lowest;
  out.series = run_nonlinear(eq, initial, settings, hook);
  out.initial_deviation = out.series.front().L1_dev;
  const double mx0 =
      compute_field(equilibrium_grid(eq, initial.n_theta, initial.n_v, initial.v_max)).Mx;
  analyse_run(out, mx0, delta0);
  return out;
}

struct EscapeFit {
  double intercept = 0.0;  // a in t_δ = a + b ln(1/δ)
  double slope = 0.0;      // b
};

/// Least-squares line through (ln(1/δ), t_δ).
inline EscapeFit fit_escape_times(const std::vector<double>& deltas, const std::vector<double>& times) {
  if (deltas.size() != times.size() || deltas.size() < 2)
    throw Error("escape-time fit needs at least two (delta, t_delta) pairs");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    const double x = std::log(1.0 / deltas[k]);
    sx += x;
    sy += times[k];
    sxx += x * x;
    sxy += x * times[k];
  }
  const double n = static_cast<double>(deltas.size());
  const double den = n * sxx - sx * sx;
  if (!(den > 0.0)) throw Error("escape-time fit needs distinct deltas");
  EscapeFit fit;
  fit.slope = (n * sxy - sx * sy) / den;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

}  // namespace hmf
