#pragma once

// Dispersion function G(λ), growth rate λ*, the growing mode and the
// truncated perturbation used to start nonlinear runs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hmf/core.hpp"
#include "hmf/equilibrium.hpp"
#include "hmf/grid.hpp"
#include "hmf/pendulum.hpp"
#include "hmf/profile.hpp"
#include "hmf/quadrature.hpp"

namespace hmf {

inline constexpr std::size_t default_steps_per_period = 400;

struct DispersionSample {
  double lambda = 0.0;
  double G = 0.0;
};

/// cos Θ(-s) sampled at s_j = j T / N for j = 0..N along one period, with
/// the scaled derivatives h d/ds cos Θ(-s) = h sin Θ(-s) V(-s).
struct PeriodSamples {
  double period = 0.0;
  std::vector<double> c;
  std::vector<double> d;
};

namespace detail {

inline PeriodSamples sample_period(double theta, double v, double m0, std::size_t steps) {
  PeriodSamples out;
  const double e0 = microscopic_energy(theta, v, m0);
  out.period = period(e0, m0);
  const double h = out.period / static_cast<double>(steps);
  out.c.resize(steps + 1);
  out.d.resize(steps + 1);
  double th = theta;
  double vv = v;
  for (std::size_t j = 0;; ++j) {
    out.c[j] = std::cos(th);
    out.d[j] = h * std::sin(th) * vv;
    if (j == steps) break;
    composition_step(th, vv, m0, -h);
  }
  return out;
}

/// μ_k(x) = ∫_0^1 e^{-x t} t^k dt for k = 0..3.
inline std::array<double, 4> exponential_moments(double x) {
  std::array<double, 4> mu{};
  if (x < 2.0) {
    for (int k = 0; k < 4; ++k) {
      double term = 1.0;  // (-x)^n / n!
      double s = 0.0;
      for (int n = 0; n < 60; ++n) {
        const double add = term / static_cast<double>(n + k + 1);
        s += add;
        if (std::abs(add) < 1e-18 * std::abs(s)) break;
        term *= -x / static_cast<double>(n + 1);
      }
      mu[static_cast<std::size_t>(k)] = s;
    }
    return mu;
  }
  const double ex = std::exp(-x);
  mu[0] = -std::expm1(-x) / x;
  for (std::size_t k = 1; k < 4; ++k) mu[k] = (static_cast<double>(k) * mu[k - 1] - ex) / x;
  return mu;
}

/// Filon weights for ∫_0^h e^{-λ s} c(s) ds with c the cubic Hermite
/// interpolant of (c_a, h c'_a, c_b, h c'_b); returned already divided by h.
struct FilonWeights {
  double ca, da, cb, db;
};

inline FilonWeights filon_weights(double x) {
  const auto mu = exponential_moments(x);
  return {mu[0] - 3.0 * mu[2] + 2.0 * mu[3], mu[1] - 2.0 * mu[2] + mu[3], 3.0 * mu[2] - 2.0 * mu[3],
          mu[3] - mu[2]};
}

/// λ/(1 - e^{-λT}) ∫_0^T e^{-λ s} cos Θ(-s) ds from one period of samples.
inline double one_period_average(const double* c, const double* d, std::size_t steps, double period,
                                 double lambda) {
  const double h = period / static_cast<double>(steps);
  const double x = lambda * h;
  const FilonWeights w = filon_weights(x);
  const double r = std::exp(-x);
  double decay = 1.0;
  double sum = 0.0;
  for (std::size_t j = 0; j < steps; ++j) {
    sum += decay * (w.ca * c[j] + w.da * d[j] + w.cb * c[j + 1] + w.db * d[j + 1]);
    decay *= r;
    if (decay < 1e-300) break;
  }
  const double lt = lambda * period;
  // λ h / (1 - e^{-λT}) with the λ → 0 limit h/T = 1/N.
  const double prefactor = lt < 1e-300 ? 1.0 / static_cast<double>(steps) : x / -std::expm1(-lt);
  return prefactor * sum;
}

inline void require_positive_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error("lambda must be positive and finite");
}

}  // namespace detail

/// g_λ(θ, v) = ∫_{-∞}^0 λ e^{λ s} cos Θ(s, θ, v) ds, reduced to one period of
/// the backward characteristic.
inline double g_lambda(const PhasePoint& p, double lambda, double m0,
                       std::size_t steps = default_steps_per_period) {
  detail::require_positive_m0(m0);
  detail::require_positive_lambda(lambda);
  const double e0 = microscopic_energy(p, m0);
  const Regime regime = regime_of(e0, m0);
  if (regime == Regime::separatrix) throw Error("g_lambda undefined on the separatrix band");
  if (regime == Regime::fixed_point) return 1.0;
  const PeriodSamples s = detail::sample_period(p.theta, p.v, m0, steps);
  return detail::one_period_average(s.c.data(), s.d.data(), steps, s.period, lambda);
}

inline double g_lambda(const PhasePoint& p, double lambda, const Equilibrium& eq,
                       std::size_t steps = default_steps_per_period) {
  return g_lambda(p, lambda, eq.m0, steps);
}

/// Precomputed trajectories on the κ quadrature nodes, so that G can be
/// evaluated for many λ. Only one node of each (θ, v), (-θ, -v) pair is
/// integrated; g_λ takes the same value on both.
class DispersionEvaluator {
 public:
  explicit DispersionEvaluator(const Equilibrium& eq, std::size_t nodes = default_quadrature_nodes,
                               std::size_t steps = default_steps_per_period)
      : m0_(eq.m0), steps_(steps), q_(support_quadrature(eq.m0, eq.profile, nodes, nodes)) {
    const std::size_t n = q_.size();
    fprime_.assign(n, 0.0);
    cos_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      cos_[k] = std::cos(q_.theta[k]);
      const double e = q_.energy[k];
      if (regime_of(e, m0_) == Regime::librating || regime_of(e, m0_) == Regime::rotating)
        fprime_[k] = profile_derivative(eq.profile, e);
    }
    // Representatives: the first half of the symmetric ordering (plus the
    // self-mirrored centre node when n is odd).
    for (std::size_t k = 0; k < n; ++k)
      if (k <= q_.mirror(k) && fprime_[k] != 0.0) reps_.push_back(k);
    slot_.assign(n, none);
    for (std::size_t r = 0; r < reps_.size(); ++r) {
      slot_[reps_[r]] = r;
      slot_[q_.mirror(reps_[r])] = r;
    }
    period_.resize(reps_.size());
    c_.resize(reps_.size() * (steps_ + 1));
    d_.resize(reps_.size() * (steps_ + 1));
    const auto nr = static_cast<std::ptrdiff_t>(reps_.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t rr = 0; rr < nr; ++rr) {
      const auto r = static_cast<std::size_t>(rr);
      const std::size_t k = reps_[r];
      const PeriodSamples s = detail::sample_period(q_.theta[k], q_.v[k], m0_, steps_);
      period_[r] = s.period;
      std::copy(s.c.begin(), s.c.end(), c_.begin() + static_cast<std::ptrdiff_t>(r * (steps_ + 1)));
      std::copy(s.d.begin(), s.d.end(), d_.begin() + static_cast<std::ptrdiff_t>(r * (steps_ + 1)));
    }
    fprime_cos2_ = detail::integrate_rows(q_, [&](std::size_t k) { return fprime_[k] * cos_[k] * cos_[k]; });
  }

  double m0() const { return m0_; }
  const SupportQuadrature& quadrature() const { return q_; }

  /// g_λ at every quadrature node (zero where F' vanishes).
  std::vector<double> node_values(double lambda) const {
    detail::require_positive_lambda(lambda);
    std::vector<double> per_rep(reps_.size());
    const auto nr = static_cast<std::ptrdiff_t>(reps_.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t rr = 0; rr < nr; ++rr) {
      const auto r = static_cast<std::size_t>(rr);
      const std::size_t off = r * (steps_ + 1);
      per_rep[r] = detail::one_period_average(&c_[off], &d_[off], steps_, period_[r], lambda);
    }
    std::vector<double> g(q_.size(), 0.0);
    for (std::size_t k = 0; k < q_.size(); ++k)
      if (slot_[k] != none) g[k] = per_rep[slot_[k]];
    return g;
  }

  /// G(λ) = 1 + ∬ F' cos² θ - ∬ F' g_λ cos θ.
  double G(double lambda) const {
    const std::vector<double> g = node_values(lambda);
    const double cross =
        detail::integrate_rows(q_, [&](std::size_t k) { return fprime_[k] * g[k] * cos_[k]; });
    return 1.0 + fprime_cos2_ - cross;
  }

 private:
  static constexpr std::size_t none = static_cast<std::size_t>(-1);
  double m0_;
  std::size_t steps_;
  SupportQuadrature q_;
  std::vector<double> fprime_;
  std::vector<double> cos_;
  std::vector<std::size_t> reps_;
  std::vector<std::size_t> slot_;
  std::vector<double> period_;
  std::vector<double> c_;
  std::vector<double> d_;
  double fprime_cos2_ = 0.0;
};

inline double dispersion_G(double lambda, const Equilibrium& eq,
                           std::size_t nodes = default_quadrature_nodes) {
  return DispersionEvaluator(eq, nodes).G(lambda);
}

inline std::vector<DispersionSample> dispersion_scan(const DispersionEvaluator& ev, double lambda_min,
                                                     double lambda_max, std::size_t samples) {
  detail::require_positive_lambda(lambda_min);
  detail::require_positive_lambda(lambda_max);
  if (samples < 2 || !(lambda_max > lambda_min)) throw Error("dispersion scan needs lambda_min < lambda_max and >= 2 samples");
  std::vector<DispersionSample> out(samples);
  const double ratio = std::log(lambda_max / lambda_min);
  for (std::size_t i = 0; i < samples; ++i) {
    const double lam = i + 1 == samples
                           ? lambda_max
                           : lambda_min * std::exp(ratio * static_cast<double>(i) /
                                                   static_cast<double>(samples - 1));
    out[i] = {lam, ev.G(lam)};
  }
  return out;
}

/// G(0+) from G at λ, λ/2, λ/4 by two levels of Richardson extrapolation.
inline double extrapolate_G_at_zero(const DispersionEvaluator& ev, double lambda) {
  const double g1 = ev.G(lambda);
  const double g2 = ev.G(0.5 * lambda);
  const double g4 = ev.G(0.25 * lambda);
  return (8.0 * g4 - 6.0 * g2 + g1) / 3.0;
}

struct GrowthRate {
  double lambda_star = 0.0;
  double G_at_root = 0.0;
  double bracket_lo = 0.0;  // G < 0
  double bracket_hi = 0.0;  // G > 0
  std::vector<DispersionSample> scan;
};

inline double default_lambda_max(double m0) { return 10.0 * std::sqrt(m0); }

/// Largest λ in (1e-3, lambda_max] where G changes sign from negative to
/// positive on a 64-point logarithmic scan, refined by bisection until
/// |G| <= tol. Returns nothing when no sign change is seen.
inline std::optional<GrowthRate> find_growth_rate_detailed(const DispersionEvaluator& ev,
                                                           double lambda_max,
                                                           std::size_t samples = 64,
                                                           double tol = 1e-8) {
  detail::require_positive_lambda(lambda_max);
  const double lambda_min = std::min(1e-3, 0.5 * lambda_max);
  GrowthRate out;
  out.scan = dispersion_scan(ev, lambda_min, lambda_max, samples);
  std::optional<std::size_t> hit;
  for (std::size_t i = 0; i + 1 < out.scan.size(); ++i)
    if (out.scan[i].G < 0.0 && out.scan[i + 1].G >= 0.0) hit = i;
  if (!hit) return std::nullopt;
  double lo = out.scan[*hit].lambda;
  double hi = out.scan[*hit + 1].lambda;
  double g_hi = out.scan[*hit + 1].G;
  if (g_hi == 0.0) {
    out.lambda_star = out.bracket_lo = out.bracket_hi = hi;
    return out;
  }
  double mid = 0.5 * (lo + hi);
  double g_mid = ev.G(mid);
  for (int it = 0; it < 200 && std::abs(g_mid) > tol; ++it) {
    if (g_mid < 0.0)
      lo = mid;
    else
      hi = mid;
    const double next = 0.5 * (lo + hi);
    if (next == lo || next == hi) break;
    mid = next;
    g_mid = ev.G(mid);
  }
  out.lambda_star = mid;
  out.G_at_root = g_mid;
  out.bracket_lo = lo;
  out.bracket_hi = hi;
  return out;
}

inline std::optional<double> find_growth_rate(const Equilibrium& eq, double lambda_max) {
  const DispersionEvaluator ev(eq);
  auto r = find_growth_rate_detailed(ev, lambda_max);
  if (!r) return std::nullopt;
  return r->lambda_star;
}

struct Eigenmode {
  double lambda_star = 0.0;
  PhaseSpaceGrid grid;
  double normalization = 0.0;  // ∬ f cos θ on the κ quadrature nodes
};

/// f = F'(e0) (g_λ - cos θ) on a phase-space grid. The normalization is the
/// cosine moment on the quadrature used for G, where it equals 1 - G(λ*).
inline Eigenmode eigenmode(const Equilibrium& eq, double lambda_star, std::size_t n_theta,
                           std::size_t n_v, double v_max, const DispersionEvaluator& ev,
                           std::size_t steps = default_steps_per_period) {
  detail::require_positive_lambda(lambda_star);
  const double G = ev.G(lambda_star);
  if (!(std::abs(G) <= 1e-6))
    throw Error("not a root: |G(lambda_star)| = " + std::to_string(std::abs(G)) + " exceeds 1e-6");
  Eigenmode mode;
  mode.lambda_star = lambda_star;
  mode.normalization = 1.0 - G;
  mode.grid = PhaseSpaceGrid(n_theta, n_v, v_max);
  PhaseSpaceGrid& g = mode.grid;
  const auto nt = static_cast<std::ptrdiff_t>(n_theta);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t ii = 0; ii < nt; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double th = g.theta(i);
    for (std::size_t j = 0; j < n_v; ++j) {
      const std::size_t idx = i * n_v + j;
      const std::size_t mir = g.mirror(i, j);
      if (mir < idx) continue;  // filled from its mirror
      const double e = microscopic_energy(th, g.v(j), eq.m0);
      const double fp = profile_derivative(eq.profile, e);
      double val = 0.0;
      if (fp != 0.0) {
        const double gl = g_lambda(PhasePoint(th, g.v(j)), lambda_star, eq.m0, steps);
        val = fp * (gl - std::cos(th));
      }
      g.values[idx] = val;
      g.values[mir] = val;
    }
  }
  return mode;
}

inline Eigenmode eigenmode(const Equilibrium& eq, double lambda_star, std::size_t n_theta,
                           std::size_t n_v, double v_max) {
  return eigenmode(eq, lambda_star, n_theta, n_v, v_max, DispersionEvaluator(eq));
}

struct PerturbationSpec {
  double delta = 0.0;
  double alpha = 2.0;
  double chi_width = 0.0;

  static PerturbationSpec make(double delta, double alpha) {
    if (!(delta >= 0.0)) throw Error("delta must be nonnegative");
    if (!(alpha >= 1.0)) throw Error("alpha must be >= 1");
    return {delta, alpha, std::pow(delta, 1.0 / (2.0 * alpha))};
  }
};

/// χ(t) = S(t^α) with S the exp(-1/t) smooth step: 0 for t <= 0, 1 for
/// t >= 1, and χ(t) <= 2 t^{2α} <= 2 t^α in between.
inline double chi(double t, double alpha) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return detail::smooth_step(std::pow(t, alpha)).value;
}

/// χ_δ(e) = χ((e_star - e) / δ^{1/(2α)}).
inline double chi_delta(double e, const PerturbationSpec& spec, double e_star) {
  if (e >= e_star) return 0.0;
  if (!(spec.chi_width > 0.0)) return 1.0;
  return chi((e_star - e) / spec.chi_width, spec.alpha);
}

/// Re(g) rescaled to unit grid L¹ norm.
inline PhaseSpaceGrid unit_l1_mode(const Eigenmode& mode) {
  const double norm = grid_l1_norm(mode.grid);
  if (!(norm > 0.0)) throw Error("eigenmode grid is identically zero");
  PhaseSpaceGrid g = mode.grid;
  for (double& x : g.values) x /= norm;
  return g;
}

/// f0 + δ Re(g) χ_δ(e0) with ‖Re g‖₁ = 1 on the grid. Every node must stay
/// nonnegative.
inline PhaseSpaceGrid build_perturbed_initial(const Equilibrium& eq, const Eigenmode& mode,
                                              const PerturbationSpec& spec) {
  const PhaseSpaceGrid unit = unit_l1_mode(mode);
  PhaseSpaceGrid out = equilibrium_grid(eq, unit.n_theta, unit.n_v, unit.v_max);
  if (spec.delta == 0.0) return out;
  for (std::size_t i = 0; i < out.n_theta; ++i) {
    const double th = out.theta(i);
    for (std::size_t j = 0; j < out.n_v; ++j) {
      const double e = microscopic_energy(th, out.v(j), eq.m0);
      const double add = spec.delta * unit.at(i, j) * chi_delta(e, spec, eq.profile.e_star);
      const double f = out.at(i, j) + add;
      if (f < 0.0)
        throw Error("delta too large: node (" + std::to_string(i) + ", " + std::to_string(j) +
                    ") at theta=" + std::to_string(th) + ", v=" + std::to_string(out.v(j)) +
                    " becomes " + std::to_string(f));
      out.at(i, j) = f;
    }
  }
  return out;
}

}  // namespace hmf
