#pragma once

// Reference computations for the tests. They share no code with the library
// beyond the profile formulas and the Gauss–Legendre rule.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "hmf/profile.hpp"
#include "hmf/quadrature.hpp"

namespace oracle {

inline constexpr double pi = std::numbers::pi;

/// Complete elliptic integral of the first kind K(k) by the arithmetic–geometric mean.
inline double elliptic_K(double k) {
  double a = 1.0;
  double b = std::sqrt(1.0 - k * k);
  for (int it = 0; it < 60 && std::abs(a - b) > 1e-16 * a; ++it) {
    const double an = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = an;
  }
  return pi / (2.0 * a);
}

/// Librating period 4 K(k) / √m0 with k² = (m0 + e0) / (2 m0).
inline double librating_period(double e0, double m0) {
  return 4.0 / std::sqrt(m0) * elliptic_K(std::sqrt((m0 + e0) / (2.0 * m0)));
}

/// Tanh–sinh quadrature on [a, b]; tolerates integrable endpoint singularities.
/// Nodes sit at distance r (1 - tanh u) from the ends, computed without
/// cancellation as r e^{-u} / cosh u.
inline double tanh_sinh(const std::function<double(double)>& f, double a, double b, int levels = 10) {
  const double r = 0.5 * (b - a);
  auto node_pair = [&](double t, bool centre) {
    const double u = 0.5 * pi * std::sinh(t);
    const double comp = std::exp(-u) / std::cosh(u);
    const double w = 0.5 * pi * std::cosh(t) / (std::cosh(u) * std::cosh(u));
    if (centre) return w * f(0.5 * (a + b));
    const double d = r * comp;
    if (!(d > 0.0)) return 0.0;
    return w * (f(b - d) + f(a + d));
  };
  double h = 1.0;
  double sum = node_pair(0.0, true);
  for (int k = 1; k * h <= 4.0; ++k) sum += node_pair(k * h, false);
  double estimate = sum * h * r;
  for (int level = 1; level <= levels; ++level) {
    h *= 0.5;
    for (int k = 1; k * h <= 4.0; k += 2) sum += node_pair(k * h, false);
    const double refined = sum * h * r;
    if (level > 3 && std::abs(refined - estimate) <= 1e-15 * std::abs(refined)) return refined;
    estimate = refined;
  }
  return estimate;
}

/// ∫_{D_e} (e + m cos θ)^{-1/2} h(θ) dθ for an even h: twice the integral
/// over [0, θ_turn] (or [0, π] above the separatrix). Below the separatrix
/// the variable is the distance d = θ_turn − θ and the weight is written as
/// 2m sin(θ_turn − d/2) sin(d/2), exact near the turning point.
inline double shell(const std::function<double(double)>& h, double e, double m) {
  if (e >= m)
    return 2.0 * tanh_sinh([&](double th) { return h(th) / std::sqrt(e + m * std::cos(th)); }, 0.0, pi);
  const double top = std::acos(-e / m);
  return 2.0 * tanh_sinh(
                   [&](double d) {
                     const double w = 2.0 * m * std::sin(top - 0.5 * d) * std::sin(0.5 * d);
                     return w > 0.0 ? h(top - d) / std::sqrt(w) : 0.0;
                   },
                   0.0, top);
}

/// κ through the energy variable: the (θ, v) integral of a function of e0
/// times a θ-factor reduces to √2 ∫ de (−F′(e)) ∫_{D_e} (cos θ − Π cos)² (e + m cos θ)^{-1/2} dθ.
inline double kappa_energy_route(const hmf::Profile& F, double m) {
  auto inner = [&](double e) {
    const double s1 = shell([](double) { return 1.0; }, e, m);
    const double sc = shell([](double t) { return std::cos(t); }, e, m);
    const double scc = shell([](double t) { return std::cos(t) * std::cos(t); }, e, m);
    return std::sqrt(2.0) * (-hmf::profile_derivative(F, e)) * (scc - sc * sc / s1);
  };
  std::vector<double> edges{-m};
  for (double b : hmf::profile_breakpoints(F))
    if (b > -m) edges.push_back(b);
  edges.push_back(std::min(F.e_star, m));
  const auto& rule = hmf::gauss_legendre(48);
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
    const int panels = 24;
    const double len = (edges[s + 1] - edges[s]) / panels;
    for (int p = 0; p < panels; ++p) {
      const double lo = edges[s] + p * len;
      for (std::size_t q = 0; q < rule.nodes.size(); ++q)
        total += 0.5 * len * rule.weights[q] * inner(lo + 0.5 * len * (rule.nodes[q] + 1.0));
    }
  }
  return total;
}

/// ∬ F(v²/2 − m cos θ) cos θ on a plain tensor Gauss–Legendre grid over
/// [−π, π] × [−v_top, v_top].
inline double gamma_tensor(const hmf::Profile& F, double m, std::size_t n) {
  const auto& rule = hmf::gauss_legendre(n);
  const double v_top = std::sqrt(2.0 * std::max(0.0, F.e_star + m));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double th = pi * rule.nodes[i];
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = v_top * rule.nodes[j];
      row += rule.weights[j] * hmf::profile_value(F, 0.5 * v * v - m * std::cos(th));
    }
    total += rule.weights[i] * row * std::cos(th);
  }
  return total * pi * v_top;
}

struct State {
  double theta;
  double v;
};

/// Classical RK4 for θ' = v, v' = a(θ).
inline State rk4(State y, const std::function<double(double)>& accel, double s, int steps) {
  const double h = s / steps;
  for (int k = 0; k < steps; ++k) {
    const double k1t = y.v, k1v = accel(y.theta);
    const double k2t = y.v + 0.5 * h * k1v, k2v = accel(y.theta + 0.5 * h * k1t);
    const double k3t = y.v + 0.5 * h * k2v, k3v = accel(y.theta + 0.5 * h * k2t);
    const double k4t = y.v + h * k3v, k4v = accel(y.theta + h * k3t);
    y.theta += h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
    y.v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  }
  return y;
}

/// ∫_{−S}^0 λ e^{λs} cos Θ(s) ds with S = 40/λ, integrating the pendulum
/// backward with RK4 and the integral by the composite Simpson rule.
inline double g_lambda_tail(double theta, double v, double lambda, double m0, int steps_per_unit = 4000) {
  const double S = 40.0 / lambda;
  const int n = 2 * static_cast<int>(std::ceil(0.5 * S * steps_per_unit));
  const double h = S / n;
  auto accel = [&](double t) { return -m0 * std::sin(t); };
  State y{theta, v};
  double sum = std::cos(theta);  // s = 0 endpoint, weight e^0
  for (int k = 1; k <= n; ++k) {
    y = rk4(y, accel, -h, 1);
    const double w = (k == n) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    sum += w * std::exp(-lambda * k * h) * std::cos(y.theta);
  }
  return lambda * sum * h / 3.0;
}

}  // namespace oracle
