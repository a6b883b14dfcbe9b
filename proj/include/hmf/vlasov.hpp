#pragma once

// Semi-Lagrangian solver for ∂t f + v ∂θ f - ∂θφ_f ∂v f = 0 and for its
// linearization about f0, with the diagnostics used to measure growth.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hmf/core.hpp"
#include "hmf/equilibrium.hpp"
#include "hmf/grid.hpp"
#include "hmf/quadrature.hpp"

namespace hmf {

/// Nodes with |f| above this fraction of max |f| count as support when the
/// velocity box is checked.
inline constexpr double velocity_box_tolerance = 1e-6;

struct FieldState {
  double Mx = 0.0;
  double My = 0.0;
  std::vector<double> phi;  // φ(θ_i) = -Mx cos θ_i - My sin θ_i
  std::vector<double> E;    // E(θ_i) = -∂θφ = -Mx sin θ_i + My cos θ_i
};

inline FieldState field_from_moments(double Mx, double My, std::size_t n_theta) {
  FieldState s;
  s.Mx = Mx;
  s.My = My;
  s.phi.resize(n_theta);
  s.E.resize(n_theta);
  for (std::size_t i = 0; i < n_theta; ++i) {
    const double th = two_pi * static_cast<double>(i) / static_cast<double>(n_theta);
    const double c = std::cos(th);
    const double sn = std::sin(th);
    s.phi[i] = -Mx * c - My * sn;
    s.E[i] = -Mx * sn + My * c;
  }
  return s;
}

inline FieldState compute_field(const PhaseSpaceGrid& grid) {
  const double Mx = integrate_grid(
      grid, [&](std::size_t i, std::size_t, double f) { return f * std::cos(grid.theta(i)); });
  const double My = integrate_grid(
      grid, [&](std::size_t i, std::size_t, double f) { return f * std::sin(grid.theta(i)); });
  return field_from_moments(Mx, My, grid.n_theta);
}

namespace detail {

/// Cubic B-spline weights for the evaluation point n + t, t in [0, 1): the
/// coefficients c_{n-1}, c_n, c_{n+1}, c_{n+2} are combined with these.
struct BsplineWeights {
  double w0, w1, w2, w3;
};

inline BsplineWeights bspline_weights(double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double u = 1.0 - t;
  return {u * u * u / 6.0, (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
          (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0, t3 / 6.0};
}

/// Interpolating B-spline coefficients of periodic data (c_{k-1} + 4 c_k +
/// c_{k+1}) / 6 = f_k, by the causal/anticausal recursive filter.
inline void periodic_spline_coefficients(std::span<const double> f, std::span<double> c) {
  const std::size_t n = f.size();
  const double z = std::sqrt(3.0) - 2.0;
  std::size_t horizon = std::min<std::size_t>(n, 40);  // |z|^40 < 1e-22
  const double zn = std::pow(z, static_cast<double>(n));
  double s = 0.0;
  double zk = 1.0;
  for (std::size_t k = 0; k < horizon; ++k) {
    s += zk * f[(n - k) % n];
    zk *= z;
  }
  c[0] = s / (1.0 - zn);
  for (std::size_t k = 1; k < n; ++k) c[k] = f[k] + z * c[k - 1];
  s = 0.0;
  zk = 1.0;
  for (std::size_t k = 0; k < horizon; ++k) {
    s += zk * c[(n - 1 + k) % n];
    zk *= z;
  }
  const double last = -z * s / (1.0 - zn);
  c[n - 1] = last;
  for (std::size_t k = n - 1; k-- > 0;) c[k] = z * (c[k + 1] - c[k]);
  for (std::size_t k = 0; k < n; ++k) c[k] *= 6.0;
}

/// Thomas factors of the tridiagonal (1, 4, 1)/6 system with zero
/// coefficients outside the grid.
struct ZeroExtendedSpline {
  std::vector<double> inv_pivot;
  std::vector<double> upper;

  explicit ZeroExtendedSpline(std::size_t n) : inv_pivot(n), upper(n) {
    const double a = 1.0 / 6.0;
    const double b = 4.0 / 6.0;
    double piv = b;
    inv_pivot[0] = 1.0 / piv;
    upper[0] = a / piv;
    for (std::size_t k = 1; k < n; ++k) {
      piv = b - a * upper[k - 1];
      inv_pivot[k] = 1.0 / piv;
      upper[k] = a / piv;
    }
  }

  void solve(std::span<const double> f, std::span<double> c) const {
    const double a = 1.0 / 6.0;
    const std::size_t n = f.size();
    c[0] = f[0] * inv_pivot[0];
    for (std::size_t k = 1; k < n; ++k) c[k] = (f[k] - a * c[k - 1]) * inv_pivot[k];
    for (std::size_t k = n - 1; k-- > 0;) c[k] -= upper[k] * c[k + 1];
  }
};

/// out_k = s(k - shift) for the periodic spline through f (shift in cells).
inline void shift_periodic(std::span<const double> f, double shift, std::span<double> coef,
                           std::span<double> out) {
  const std::size_t n = f.size();
  periodic_spline_coefficients(f, coef);
  const double x = -shift;
  const double fl = std::floor(x);
  const BsplineWeights w = bspline_weights(x - fl);
  const auto ni = static_cast<long long>(n);
  long long base = static_cast<long long>(fl) % ni;
  if (base < 0) base += ni;
  for (std::size_t k = 0; k < n; ++k) {
    const auto m = static_cast<std::size_t>((static_cast<long long>(k) + base) % ni);
    const std::size_t m0 = (m + n - 1) % n;
    const std::size_t m2 = (m + 1) % n;
    const std::size_t m3 = (m + 2) % n;
    out[k] = w.w0 * coef[m0] + w.w1 * coef[m] + w.w2 * coef[m2] + w.w3 * coef[m3];
  }
}

/// out_k = s(k - shift) for the spline through f with zero coefficients
/// outside [0, n).
inline void shift_zero_extended(std::span<const double> f, double shift,
                                const ZeroExtendedSpline& solver, std::span<double> coef,
                                std::span<double> out) {
  const std::size_t n = f.size();
  solver.solve(f, coef);
  const double x = -shift;
  const double fl = std::floor(x);
  const BsplineWeights w = bspline_weights(x - fl);
  const auto base = static_cast<long long>(fl);
  const auto ni = static_cast<long long>(n);
  auto at = [&](long long m) { return (m >= 0 && m < ni) ? coef[static_cast<std::size_t>(m)] : 0.0; };
  for (std::size_t k = 0; k < n; ++k) {
    const long long m = static_cast<long long>(k) + base;
    out[k] = w.w0 * at(m - 1) + w.w1 * at(m) + w.w2 * at(m + 1) + w.w3 * at(m + 2);
  }
}

/// f(θ, v) <- f(θ - v τ, v) for every v row.
inline void advect_theta(PhaseSpaceGrid& grid, double tau) {
  const std::size_t nt = grid.n_theta;
  const std::size_t nv = grid.n_v;
  const auto n = static_cast<std::ptrdiff_t>(nv);
#pragma omp parallel
  {
    std::vector<double> row(nt), coef(nt), out(nt);
#pragma omp for schedule(static)
    for (std::ptrdiff_t jj = 0; jj < n; ++jj) {
      const auto j = static_cast<std::size_t>(jj);
      const double shift = grid.v(j) * tau / grid.dtheta();
      if (shift == 0.0) continue;
      for (std::size_t i = 0; i < nt; ++i) row[i] = grid.values[i * nv + j];
      shift_periodic(row, shift, coef, out);
      for (std::size_t i = 0; i < nt; ++i) grid.values[i * nv + j] = out[i];
    }
  }
}

/// f(θ_i, v) <- f(θ_i, v - a_i τ) for every θ column.
inline void advect_v(PhaseSpaceGrid& grid, std::span<const double> accel, double tau) {
  const std::size_t nt = grid.n_theta;
  const std::size_t nv = grid.n_v;
  const ZeroExtendedSpline solver(nv);
  const auto n = static_cast<std::ptrdiff_t>(nt);
#pragma omp parallel
  {
    std::vector<double> coef(nv), out(nv);
#pragma omp for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      const double shift = accel[i] * tau / grid.dv();
      if (shift == 0.0) continue;
      std::span<double> row(grid.values.data() + i * nv, nv);
      shift_zero_extended(row, shift, solver, coef, out);
      std::copy(out.begin(), out.end(), row.begin());
    }
  }
}

inline void check_velocity_box(const PhaseSpaceGrid& grid) {
  double peak = 0.0;
  for (double x : grid.values) peak = std::max(peak, std::abs(x));
  if (peak == 0.0) return;
  const double limit = 0.9 * grid.v_max;
  for (std::size_t j = 0; j < grid.n_v; ++j) {
    if (std::abs(grid.v(j)) <= limit) continue;
    for (std::size_t i = 0; i < grid.n_theta; ++i)
      if (std::abs(grid.at(i, j)) > velocity_box_tolerance * peak)
        throw Error("velocity box too small: |f| = " + std::to_string(std::abs(grid.at(i, j))) +
                    " at v = " + std::to_string(grid.v(j)) + " beyond 0.9 v_max");
  }
}

inline void require_step(double dt) {
  if (!std::isfinite(dt) || dt == 0.0) throw Error("time step must be finite and nonzero");
}

}  // namespace detail

/// One Strang step: θ-advection for dt/2, field from the intermediate state,
/// v-advection for dt, θ-advection for dt/2. Negative dt runs backward.
inline void step_nonlinear(PhaseSpaceGrid& grid, double dt) {
  detail::require_step(dt);
  detail::advect_theta(grid, 0.5 * dt);
  const FieldState field = compute_field(grid);
  detail::advect_v(grid, field.E, dt);
  detail::advect_theta(grid, 0.5 * dt);
  detail::check_velocity_box(grid);
}

/// ∂v f0 = v F'(e0) at the nodes of a grid, and the equilibrium force.
struct LinearSource {
  std::size_t n_theta = 0;
  std::size_t n_v = 0;
  double v_max = 0.0;
  std::vector<double> dv_f0;
  std::vector<double> force;  // -m0 sin θ_i
  std::vector<double> sin_theta;
  std::vector<double> cos_theta;

  LinearSource(const Equilibrium& eq, const PhaseSpaceGrid& like)
      : n_theta(like.n_theta), n_v(like.n_v), v_max(like.v_max), dv_f0(like.values.size()),
        force(like.n_theta), sin_theta(like.n_theta), cos_theta(like.n_theta) {
    for (std::size_t i = 0; i < n_theta; ++i) {
      const double th = like.theta(i);
      sin_theta[i] = std::sin(th);
      cos_theta[i] = std::cos(th);
      force[i] = -eq.m0 * sin_theta[i];
      for (std::size_t j = 0; j < n_v; ++j) {
        const double v = like.v(j);
        dv_f0[i * n_v + j] = v * profile_derivative(eq.profile, microscopic_energy(th, v, eq.m0));
      }
    }
  }

  bool matches(const PhaseSpaceGrid& g) const {
    return g.n_theta == n_theta && g.n_v == n_v && g.v_max == v_max;
  }
};

namespace detail {

/// Exact flow of ∂t f = ∂θφ_f ∂v f0 for time tau. The source has zero
/// cosine and sine moments (it is odd in v), so the moments of f do not
/// change and the flow is f + tau K f.
inline void apply_source(PhaseSpaceGrid& grid, const LinearSource& src, double tau) {
  const FieldState field = compute_field(grid);
  const std::size_t nv = grid.n_v;
  for (std::size_t i = 0; i < grid.n_theta; ++i) {
    const double dphi = field.Mx * src.sin_theta[i] - field.My * src.cos_theta[i];
    const double a = tau * dphi;
    if (a == 0.0) continue;
    for (std::size_t j = 0; j < nv; ++j) grid.values[i * nv + j] += a * src.dv_f0[i * nv + j];
  }
}

}  // namespace detail

/// One step of ∂t f = L f, L f = -v ∂θ f + ∂θφ0 ∂v f + ∂θφ_f ∂v f0: the
/// source is applied for dt/2 on both sides of a Strang transport step in
/// the frozen equilibrium force.
inline void step_linearized(PhaseSpaceGrid& grid, const LinearSource& src, double dt) {
  detail::require_step(dt);
  if (!src.matches(grid)) throw Error("linear source was built for a different grid");
  detail::apply_source(grid, src, 0.5 * dt);
  detail::advect_theta(grid, 0.5 * dt);
  detail::advect_v(grid, src.force, dt);
  detail::advect_theta(grid, 0.5 * dt);
  detail::apply_source(grid, src, 0.5 * dt);
  detail::check_velocity_box(grid);
}

inline void step_linearized(PhaseSpaceGrid& grid, const Equilibrium& eq, double dt) {
  step_linearized(grid, LinearSource(eq, grid), dt);
}

/// One nonlinear step for the perturbation h = f - f0, with f0 kept
/// analytic: ∂t h + v ∂θ h - ∂θφ_{f0+h} ∂v h - ∂θφ_h ∂v f0 = 0. The
/// transport uses the full force, with the magnetization of h taken at the
/// half step.
inline void step_perturbation(PhaseSpaceGrid& h, const LinearSource& src, double dt) {
  detail::require_step(dt);
  if (!src.matches(h)) throw Error("linear source was built for a different grid");
  detail::apply_source(h, src, 0.5 * dt);
  detail::advect_theta(h, 0.5 * dt);
  const FieldState field = compute_field(h);
  std::vector<double> force(h.n_theta);
  for (std::size_t i = 0; i < h.n_theta; ++i) force[i] = src.force[i] + field.E[i];
  detail::advect_v(h, force, dt);
  detail::advect_theta(h, 0.5 * dt);
  detail::apply_source(h, src, 0.5 * dt);
  detail::check_velocity_box(h);
}

struct DiagnosticsRow {
  double t = 0.0;
  double mass = 0.0;
  double kinetic = 0.0;
  double total_energy = 0.0;
  double Mx = 0.0;
  double My = 0.0;
  double L1_dev = 0.0;
  double min_value = 0.0;  // most negative node, 0 when none
};

using SimDiagnostics = std::vector<DiagnosticsRow>;

inline DiagnosticsRow diagnostics(const PhaseSpaceGrid& grid, const PhaseSpaceGrid& f0, double t) {
  DiagnosticsRow r;
  r.t = t;
  r.mass = integrate_grid(grid, [](std::size_t, std::size_t, double f) { return f; });
  r.kinetic = integrate_grid(grid, [&](std::size_t, std::size_t j, double f) {
    const double v = grid.v(j);
    return 0.5 * v * v * f;
  });
  const FieldState field = compute_field(grid);
  r.Mx = field.Mx;
  r.My = field.My;
  r.total_energy = r.kinetic - 0.5 * (r.Mx * r.Mx + r.My * r.My);
  r.L1_dev = grid_l1_distance(grid, f0);
  double lowest = 0.0;
  for (double x : grid.values) lowest = std::min(lowest, x);
  r.min_value = lowest;
  return r;
}

inline DiagnosticsRow diagnostics(const PhaseSpaceGrid& grid, const Equilibrium& eq, double t) {
  return diagnostics(grid, equilibrium_grid(eq, grid.n_theta, grid.n_v, grid.v_max), t);
}

/// Least-squares slope of log(value) against t over rows with t in
/// [t_lo, t_hi]. `value` selects the observable.
template <class Value>
double fit_log_slope(const SimDiagnostics& series, double t_lo, double t_hi, Value&& value) {
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  std::size_t n = 0;
  for (const auto& r : series) {
    if (r.t < t_lo || r.t > t_hi) continue;
    const double y = value(r);
    if (!(y > 0.0)) throw Error("growth fit needs strictly positive values in the window");
    const double ly = std::log(y);
    st += r.t;
    sy += ly;
    stt += r.t * r.t;
    sty += r.t * ly;
    ++n;
  }
  if (n < 2) throw Error("growth fit window contains fewer than two samples");
  const double nn = static_cast<double>(n);
  const double den = nn * stt - st * st;
  if (!(den > 0.0)) throw Error("growth fit window has no time extent");
  return (nn * sty - st * sy) / den;
}

inline double fit_growth_rate(const SimDiagnostics& series, double t_lo, double t_hi) {
  return fit_log_slope(series, t_lo, t_hi, [](const DiagnosticsRow& r) { return r.L1_dev; });
}

struct GrowthWindow {
  double t_lo = 0.0;
  double t_hi = 0.0;
};

/// From the first time the observable reaches `lo` to the last time before
/// it first reaches `hi`.
template <class Value>
std::optional<GrowthWindow> growth_window(const SimDiagnostics& series, double lo, double hi,
                                          Value&& value) {
  std::optional<double> start;
  double end = 0.0;
  for (const auto& r : series) {
    const double y = value(r);
    if (!start && y >= lo) start = r.t;
    if (y >= hi) break;
    end = r.t;
  }
  if (!start || !(end > *start)) return std::nullopt;
  return GrowthWindow{*start, end};
}

/// Window between 3δ and a tenth of the largest deviation reached.
inline std::optional<GrowthWindow> auto_growth_window(const SimDiagnostics& series, double delta) {
  double peak = 0.0;
  for (const auto& r : series) peak = std::max(peak, r.L1_dev);
  return growth_window(series, 3.0 * delta, 0.1 * peak,
                       [](const DiagnosticsRow& r) { return r.L1_dev; });
}

/// First time the L¹ deviation reaches delta0.
inline std::optional<double> escape_time(const SimDiagnostics& series, double delta0) {
  for (const auto& r : series)
    if (r.L1_dev >= delta0) return r.t;
  return std::nullopt;
}

}  // namespace hmf
