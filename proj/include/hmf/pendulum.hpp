#pragma once

// Characteristic flow of the steady potential φ0(θ) = -m0 cos θ: the
// pendulum θ'' = -m0 sin θ. Orbit classification, periods, shell averages.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "hmf/core.hpp"
#include "hmf/quadrature.hpp"

namespace hmf {

/// Energies with |e0 - m0| below this fraction of m0 are treated as lying on
/// the separatrix and are excluded from every shell quadrature.
inline constexpr double separatrix_band = 1e-9;
/// Energies with e0 + m0 below this fraction of m0 are the fixed point.
inline constexpr double fixed_point_band = 1e-12;

struct PhasePoint {
  double theta = 0.0;
  double v = 0.0;

  PhasePoint() = default;
  PhasePoint(double theta_, double v_) : theta(wrap_angle(theta_)), v(v_) {}
};

enum class Regime { fixed_point, librating, rotating, separatrix };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::fixed_point: return "fixed-point";
    case Regime::librating: return "librating";
    case Regime::rotating: return "rotating";
    case Regime::separatrix: return "separatrix";
  }
  return "unknown";
}

struct Orbit {
  double e0 = 0.0;
  Regime regime = Regime::fixed_point;
  std::optional<double> period;
  std::optional<double> theta_turn;  // librating only
};

inline double microscopic_energy(double theta, double v, double m0) {
  return 0.5 * v * v - m0 * std::cos(theta);
}

inline double microscopic_energy(const PhasePoint& p, double m0) {
  return microscopic_energy(p.theta, p.v, m0);
}

inline Regime regime_of(double e0, double m0) {
  if (std::abs(e0 - m0) <= separatrix_band * m0) return Regime::separatrix;
  if (e0 + m0 <= fixed_point_band * m0) return Regime::fixed_point;
  return e0 < m0 ? Regime::librating : Regime::rotating;
}

namespace detail {

inline void require_positive_m0(double m0) {
  if (!(m0 > 0.0)) throw Error("magnetization m0 must be positive");
}

/// Weighted shell integrals ∫_{D_e} (e + m0 cos θ)^{-1/2} h_k(θ) dθ for
/// K functions at once. Librating shells use sin(θ/2) = k sin φ, which turns
/// the turning-point singularity into the smooth periodic weight
/// (1 - k² sin² φ)^{-1/2}; rotating shells integrate over the full circle.
template <std::size_t K, class H>
std::array<double, K> shell_integrals(H&& h, double e0, double m0, double rel_tol = 1e-14) {
  const Regime regime = regime_of(e0, m0);
  if (regime == Regime::separatrix)
    throw Error("energy lies on the separatrix band; shell quadrature diverges");
  if (e0 <= -m0) throw Error("no orbit: energy below the bottom of the well");
  if (regime == Regime::rotating) {
    return periodic_trapezoid_multi<K>(
        [&](double theta) {
          const double w = 1.0 / std::sqrt(e0 + m0 * std::cos(theta));
          std::array<double, K> out = h(theta);
          for (auto& x : out) x *= w;
          return out;
        },
        rel_tol);
  }
  const double k = std::sqrt(std::max(0.0, (e0 + m0) / (2.0 * m0)));
  const double scale = 0.5 * std::sqrt(2.0 / m0);
  std::array<double, K> r = periodic_trapezoid_multi<K>(
      [&](double phi) {
        const double s = k * std::sin(phi);
        const double w = 1.0 / std::sqrt(1.0 - s * s);
        std::array<double, K> out = h(2.0 * std::asin(s));
        for (auto& x : out) x *= w;
        return out;
      },
      rel_tol);
  for (auto& x : r) x *= scale;
  return r;
}

/// Composition coefficients of the 8th-order symmetric scheme obtained by
/// three nested triple jumps of the velocity Verlet step.
inline const std::vector<double>& eighth_order_weights() {
  static const std::vector<double> weights = [] {
    std::vector<double> w{1.0};
    for (int order = 2; order < 8; order += 2) {
      const double r = std::pow(2.0, 1.0 / (order + 1));
      const double outer = 1.0 / (2.0 - r);
      const double inner = -r * outer;
      std::vector<double> next;
      for (double c : {outer, inner, outer})
        for (double x : w) next.push_back(c * x);
      w = std::move(next);
    }
    return w;
  }();
  return weights;
}

/// One step of size h of the 8th-order composition for θ' = v, v' = -m0 sin θ.
/// Adjacent half kicks are merged, so each step costs 27 force evaluations.
inline void composition_step(double& theta, double& v, double m0, double h) {
  const auto& w = eighth_order_weights();
  const std::size_t n = w.size();
  v -= 0.5 * w[0] * h * m0 * std::sin(theta);
  for (std::size_t i = 0; i < n; ++i) {
    theta += w[i] * h * v;
    const double kick = 0.5 * (w[i] + (i + 1 < n ? w[i + 1] : 0.0));
    v -= kick * h * m0 * std::sin(theta);
  }
}

struct PeriodCache {
  std::mutex mutex;
  std::unordered_map<std::uint64_t, double> values;
};

inline PeriodCache& period_cache() {
  static PeriodCache cache;
  return cache;
}

inline std::uint64_t period_key(double e0, double m0) {
  // Energies are quantized with a relative quantum of 1e-12 of the well depth.
  const auto q = static_cast<std::int64_t>(std::llround(e0 / (1e-12 * m0)));
  std::uint64_t h = std::hash<double>{}(m0);
  h ^= static_cast<std::uint64_t>(q) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

inline double compute_period(double e0, double m0) {
  if (regime_of(e0, m0) == Regime::rotating) {
    return periodic_trapezoid(
        [&](double theta) { return 1.0 / std::sqrt(2.0 * (e0 + m0 * std::cos(theta))); });
  }
  const double k2 = (e0 + m0) / (2.0 * m0);
  // 4/√m0 ∫_0^{π/2} dφ / √(1 - k² sin² φ), written as a full-period integral.
  return periodic_trapezoid([&](double phi) {
           const double s = std::sin(phi);
           return 1.0 / std::sqrt(1.0 - k2 * s * s);
         }) /
         std::sqrt(m0);
}

}  // namespace detail

/// Period of the orbit with energy e0. Rotating orbits advance θ by 2π per
/// period. Throws inside the separatrix band or below the well bottom.
inline double period(double e0, double m0) {
  detail::require_positive_m0(m0);
  if (!(e0 > -m0)) throw Error("no orbit: energy at or below the bottom of the well");
  const Regime regime = regime_of(e0, m0);
  if (regime == Regime::separatrix) throw Error("period diverges on the separatrix");
  if (regime == Regime::fixed_point) return two_pi / std::sqrt(m0);

  auto& cache = detail::period_cache();
  const std::uint64_t key = detail::period_key(e0, m0);
  {
    std::lock_guard lock(cache.mutex);
    if (auto it = cache.values.find(key); it != cache.values.end()) return it->second;
  }
  const double t = detail::compute_period(e0, m0);
  std::lock_guard lock(cache.mutex);
  if (cache.values.size() > (1u << 22)) cache.values.clear();
  cache.values.emplace(key, t);
  return t;
}

inline Orbit classify_orbit(const PhasePoint& p, double m0) {
  detail::require_positive_m0(m0);
  Orbit orbit;
  orbit.e0 = microscopic_energy(p, m0);
  orbit.regime = regime_of(orbit.e0, m0);
  switch (orbit.regime) {
    case Regime::librating:
      orbit.period = period(orbit.e0, m0);
      orbit.theta_turn = std::acos(std::clamp(-orbit.e0 / m0, -1.0, 1.0));
      break;
    case Regime::rotating:
      orbit.period = period(orbit.e0, m0);
      break;
    case Regime::fixed_point:
    case Regime::separatrix:
      break;
  }
  return orbit;
}

/// Largest step the characteristic integrator takes: 400 steps per period of
/// the small-oscillation limit.
inline double max_characteristic_step(double m0) { return two_pi / std::sqrt(m0) / 400.0; }

/// Unwrapped characteristic state (θ is not reduced modulo 2π).
struct FlowState {
  double theta;
  double v;
};

/// Integrate the characteristics for time s using exactly `steps` equal steps
/// (s may be negative). θ is left unwrapped.
inline FlowState flow(FlowState start, double m0, double s, std::size_t steps) {
  if (steps == 0) return start;
  const double h = s / static_cast<double>(steps);
  for (std::size_t i = 0; i < steps; ++i) detail::composition_step(start.theta, start.v, m0, h);
  return start;
}

/// (Θ(s, θ, v), V(s, θ, v)); negative s flows backward.
inline PhasePoint advance(const PhasePoint& p, double m0, double s) {
  detail::require_positive_m0(m0);
  if (!std::isfinite(s)) throw Error("advance: time must be finite");
  const auto steps =
      static_cast<std::size_t>(std::ceil(std::abs(s) / max_characteristic_step(m0)));
  const FlowState end = flow({p.theta, p.v}, m0, s, steps);
  return {end.theta, end.v};
}

/// Orbit average (Π_{m0} h)(e0): the (e0 + m0 cos θ)^{-1/2}-weighted mean of
/// h over D_e = {θ : m0 cos θ > -e0}. At the fixed point this is h(0).
template <class H>
double orbit_average(H&& h, double e0, double m0) {
  detail::require_positive_m0(m0);
  const Regime regime = regime_of(e0, m0);
  if (regime == Regime::separatrix) throw Error("orbit average undefined on the separatrix");
  if (regime == Regime::fixed_point) return h(0.0);
  const auto r = detail::shell_integrals<2>(
      [&](double theta) { return std::array<double, 2>{h(theta), 1.0}; }, e0, m0);
  return r[0] / r[1];
}

/// Shell moments used by the stability criterion and the appendix checks:
/// weighted integrals of 1, cos θ, cos² θ, sin² θ over D_e.
struct ShellMoments {
  double one = 0.0;
  double cos = 0.0;
  double cos2 = 0.0;
  double sin2 = 0.0;
};

inline ShellMoments shell_moments(double e0, double m0) {
  detail::require_positive_m0(m0);
  const auto r = detail::shell_integrals<4>(
      [](double theta) {
        const double c = std::cos(theta);
        return std::array<double, 4>{1.0, c, c * c, 1.0 - c * c};
      },
      e0, m0);
  return {r[0], r[1], r[2], r[3]};
}

}  // namespace hmf
