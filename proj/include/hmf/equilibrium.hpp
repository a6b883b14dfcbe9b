#pragma once

// Self-consistent steady states f0 = F(v²/2 - m0 cos θ), the instability
// criterion κ and the near-separatrix shell functions used to show that
// unstable states exist.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "hmf/core.hpp"
#include "hmf/pendulum.hpp"
#include "hmf/profile.hpp"
#include "hmf/quadrature.hpp"

namespace hmf {

inline constexpr std::size_t default_quadrature_nodes = 256;

struct Equilibrium {
  double m0 = 1.0;
  Profile profile;
  double residual = 0.0;
};

/// Composite Gauss–Legendre nodes covering the support {e0 < e_star} of f0:
/// θ over [-θ*, θ*] (the whole circle when e_star >= m0) and, per θ, v over
/// [-v_top, v_top] with v_top² = 2(e_star + m0 cos θ). Both ranges are split
/// where an energy breakpoint e_b is crossed (at v² = 2(e_b + m0 cos θ) and at
/// the turning angle of e_b), so sharp profiles stay resolved. Every θ row
/// holds n_v nodes. Nodes are θ-major and symmetric: node (i, j) and node
/// (n_theta-1-i, n_v-1-j) are (θ, v) and (-θ, -v).
struct SupportQuadrature {
  std::size_t n_theta = 0;
  std::size_t n_v = 0;
  std::vector<double> theta;
  std::vector<double> v;
  std::vector<double> weight;
  std::vector<double> energy;

  std::size_t size() const { return theta.size(); }
  std::size_t mirror(std::size_t idx) const { return size() - 1 - idx; }
};

namespace detail {

/// Symmetric breakpoints 0 < b_1 < ... < b_k < top expanded into the
/// segments of [-top, top].
inline std::vector<double> symmetric_edges(std::vector<double> cuts, double top) {
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> pos;
  for (double c : cuts)
    if (c > 1e-9 * top && c < top * (1.0 - 1e-9) && (pos.empty() || c > pos.back())) pos.push_back(c);
  std::vector<double> edges;
  edges.push_back(-top);
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) edges.push_back(-*it);
  for (double c : pos) edges.push_back(c);
  edges.push_back(top);
  return edges;
}

/// Split n nodes over symmetric segments: each segment gets at least an
/// equal share, longer ones more in proportion to length. The middle segment
/// absorbs the rounding.
inline std::vector<std::size_t> split_counts(const std::vector<double>& edges, std::size_t n) {
  const std::size_t s = edges.size() - 1;
  std::vector<std::size_t> counts(s, 0);
  const double total = edges.back() - edges.front();
  std::vector<double> share(s);
  double sum = 0.0;
  for (std::size_t k = 0; k < s; ++k) {
    share[k] = std::max((edges[k + 1] - edges[k]) / total, 1.0 / static_cast<double>(s));
    sum += share[k];
  }
  std::size_t used = 0;
  for (std::size_t k = 0; k < s / 2; ++k) {
    const auto c = static_cast<std::size_t>(static_cast<double>(n) * share[k] / sum);
    counts[k] = counts[s - 1 - k] = std::max<std::size_t>(1, c);
    used += 2 * counts[k];
  }
  if (used >= n) throw Error("too few quadrature nodes for the profile breakpoints");
  counts[s / 2] = n - used;
  return counts;
}

inline void append_gauss(double lo, double hi, std::size_t n, std::vector<double>& x,
                         std::vector<double>& w) {
  const GaussRule& r = gauss_legendre(n);
  const double c = 0.5 * (lo + hi);
  const double h = 0.5 * (hi - lo);
  for (std::size_t k = 0; k < n; ++k) {
    x.push_back(c + h * r.nodes[k]);
    w.push_back(h * r.weights[k]);
  }
}

/// Composite rule on [-top, top] split at ±cuts; symmetric about 0.
inline void composite_symmetric(const std::vector<double>& cuts, double top, std::size_t n,
                                std::vector<double>& x, std::vector<double>& w) {
  x.clear();
  w.clear();
  const std::vector<double> edges = symmetric_edges(cuts, top);
  const std::vector<std::size_t> counts = split_counts(edges, n);
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) append_gauss(edges[k], edges[k + 1], counts[k], x, w);
  // Enforce exact mirror symmetry of the nodes.
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double a = 0.5 * (x[n - 1 - k] - x[k]);
    x[k] = -a;
    x[n - 1 - k] = a;
    const double ww = 0.5 * (w[k] + w[n - 1 - k]);
    w[k] = w[n - 1 - k] = ww;
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
}

}  // namespace detail

inline SupportQuadrature support_quadrature(double m0, double e_star,
                                            std::size_t n_theta = default_quadrature_nodes,
                                            std::size_t n_v = default_quadrature_nodes,
                                            const std::vector<double>& breakpoints = {}) {
  SupportQuadrature q;
  q.n_theta = n_theta;
  q.n_v = n_v;
  if (e_star <= -m0) return q;
  const double theta_max = e_star >= m0 ? pi : std::acos(-e_star / m0);
  std::vector<double> theta_cuts;
  for (double e : breakpoints)
    if (e > -m0 && e < m0 && e < e_star) theta_cuts.push_back(std::acos(-e / m0));
  std::vector<double> th_nodes, th_weights, v_nodes, v_weights;
  detail::composite_symmetric(theta_cuts, theta_max, n_theta, th_nodes, th_weights);
  q.theta.reserve(n_theta * n_v);
  q.v.reserve(n_theta * n_v);
  q.weight.reserve(n_theta * n_v);
  q.energy.reserve(n_theta * n_v);
  for (std::size_t i = 0; i < n_theta; ++i) {
    const double th = th_nodes[i];
    const double c = m0 * std::cos(th);
    const double v_top = std::sqrt(std::max(0.0, 2.0 * (e_star + c)));
    std::vector<double> v_cuts;
    for (double e : breakpoints)
      if (e + c > 0.0 && e < e_star) v_cuts.push_back(std::sqrt(2.0 * (e + c)));
    detail::composite_symmetric(v_cuts, v_top, n_v, v_nodes, v_weights);
    for (std::size_t j = 0; j < n_v; ++j) {
      q.theta.push_back(th);
      q.v.push_back(v_nodes[j]);
      q.weight.push_back(th_weights[i] * v_weights[j]);
      q.energy.push_back(microscopic_energy(th, v_nodes[j], m0));
    }
  }
  return q;
}

inline SupportQuadrature support_quadrature(double m0, const Profile& F,
                                            std::size_t n_theta = default_quadrature_nodes,
                                            std::size_t n_v = default_quadrature_nodes) {
  return support_quadrature(m0, F.e_star, n_theta, n_v, profile_breakpoints(F));
}

namespace detail {

/// Σ_k w_k g(k) over the nodes, summed per θ row and then pairwise, so the
/// result is independent of the thread count.
template <class G>
double integrate_rows(const SupportQuadrature& q, G&& g) {
  std::vector<double> rows(q.n_theta, 0.0);
  if (q.size() == 0) return 0.0;
  const auto n_rows = static_cast<std::ptrdiff_t>(q.n_theta);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n_rows; ++i) {
    double s = 0.0;
    const std::size_t base = static_cast<std::size_t>(i) * q.n_v;
    for (std::size_t j = 0; j < q.n_v; ++j) s += q.weight[base + j] * g(base + j);
    rows[static_cast<std::size_t>(i)] = s;
  }
  return pairwise_sum(rows);
}

}  // namespace detail

/// γ(m, F) = ∬ F(v²/2 - m cos θ) cos θ dθ dv.
inline double gamma(double m, const Profile& F, std::size_t n_theta = default_quadrature_nodes,
                    std::size_t n_v = default_quadrature_nodes) {
  if (!(m > 0.0)) throw Error("gamma: m must be positive");
  const SupportQuadrature q = support_quadrature(m, F, n_theta, n_v);
  return detail::integrate_rows(
      q, [&](std::size_t k) { return profile_value(F, q.energy[k]) * std::cos(q.theta[k]); });
}

/// ∬ F(e0) dθ dv.
inline double mass(const Equilibrium& eq, std::size_t n = default_quadrature_nodes) {
  const SupportQuadrature q = support_quadrature(eq.m0, eq.profile, n, n);
  return detail::integrate_rows(q, [&](std::size_t k) { return profile_value(eq.profile, q.energy[k]); });
}

/// Rescale the amplitude of `shape` so that f0 = F(v²/2 - m0 cos θ) has
/// magnetization exactly m0. γ is linear in F, so any m0 > e_star works.
inline Equilibrium solve_self_consistency(const Profile& shape, double m0) {
  validate(shape);
  if (!(m0 > 0.0)) throw Error("requested magnetization must be positive");
  if (!(shape.e_star < m0))
    throw Error("e_star must lie below m0 (support must stay inside the separatrix)");
  const double g = gamma(m0, shape);
  if (!(g > 0.0)) throw Error("shape cannot magnetize: gamma(m0, F) <= 0");
  Equilibrium eq;
  eq.m0 = m0;
  eq.profile = shape.scaled(m0 / g);
  eq.residual = std::abs(gamma(m0, eq.profile) - m0);
  if (!(eq.residual <= 1e-10 * std::max(1.0, m0)))
    throw Error("self-consistency residual above 1e-10 after rescaling");
  return eq;
}

/// Interval form: the magnetization is fixed at the bracket midpoint.
inline Equilibrium solve_self_consistency(const Profile& shape, std::pair<double, double> m_bracket) {
  if (!(m_bracket.first > 0.0 && m_bracket.second > 0.0))
    throw Error("magnetization bracket endpoints must be positive");
  return solve_self_consistency(shape, 0.5 * (m_bracket.first + m_bracket.second));
}

struct KappaTerms {
  double kappa = 0.0;
  double fprime_cos2 = 0.0;   // ∬ F'(e0) cos² θ
  double fprime_pi2 = 0.0;    // ∬ F'(e0) (Π cos)²(e0)
  double fprime_cross = 0.0;  // ∬ F'(e0) cos θ (Π cos)(e0)
};

/// κ0 = -∬ F'(e0) (cos θ - (Π_{m0} cos)(e0))² dθ dv, together with the
/// pieces of the expanded square.
inline KappaTerms kappa_terms(const Equilibrium& eq, std::size_t n_theta = default_quadrature_nodes,
                              std::size_t n_v = default_quadrature_nodes) {
  const SupportQuadrature q = support_quadrature(eq.m0, eq.profile, n_theta, n_v);
  std::vector<double> fp(q.size()), pc(q.size());
  const auto n = static_cast<std::ptrdiff_t>(q.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    const double e = q.energy[i];
    fp[i] = profile_derivative(eq.profile, e);
    pc[i] = 0.0;
    if (fp[i] != 0.0 && regime_of(e, eq.m0) != Regime::separatrix) {
      const ShellMoments s = shell_moments(e, eq.m0);
      pc[i] = s.cos / s.one;
    } else {
      fp[i] = 0.0;
    }
  }
  KappaTerms t;
  t.kappa = -detail::integrate_rows(q, [&](std::size_t k) {
    const double d = std::cos(q.theta[k]) - pc[k];
    return fp[k] * d * d;
  });
  t.fprime_cos2 = detail::integrate_rows(q, [&](std::size_t k) {
    const double c = std::cos(q.theta[k]);
    return fp[k] * c * c;
  });
  t.fprime_pi2 = detail::integrate_rows(q, [&](std::size_t k) { return fp[k] * pc[k] * pc[k]; });
  t.fprime_cross =
      detail::integrate_rows(q, [&](std::size_t k) { return fp[k] * std::cos(q.theta[k]) * pc[k]; });
  return t;
}

inline double kappa(const Equilibrium& eq, std::size_t n_theta = default_quadrature_nodes,
                    std::size_t n_v = default_quadrature_nodes) {
  return kappa_terms(eq, n_theta, n_v).kappa;
}

// Shell functions. With m = 1 these are the functions α, β and g1 of the
// near-separatrix argument.

/// α(e) = ∫_{D_e} (e + m cos θ)^{-1/2} dθ.
inline double alpha_e(double e, double m = 1.0) { return shell_moments(e, m).one; }

/// β(e) = ∫_{D_e} (e + m cos θ)^{-1/2} sin² θ dθ. Finite on the separatrix,
/// where sin² θ cancels the weight singularity at θ = π.
inline double beta_e(double e, double m = 1.0) {
  detail::require_positive_m0(m);
  if (e < m && regime_of(e, m) != Regime::separatrix) return shell_moments(e, m).sin2;
  return 2.0 * gauss_kronrod(
                   [&](double th) {
                     const double s = std::sin(th);
                     const double w = e + m * std::cos(th);
                     return w > 0.0 ? s * s / std::sqrt(w) : 0.0;
                   },
                   0.0, pi, 1e-15, 1e-14);
}

/// ∫_{D_e} (e + m cos θ)^{1/2} dθ; finite for every e > -m, separatrix included.
inline double sqrt_shell_integral(double e, double m = 1.0) {
  detail::require_positive_m0(m);
  if (e <= -m) return 0.0;
  if (e < m && regime_of(e, m) != Regime::separatrix) {
    // sin(θ/2) = k sin φ: √(e + m cos θ) dθ = 2√(2m) k² cos² φ / √(1 - k² sin² φ) dφ.
    const double k2 = (e + m) / (2.0 * m);
    return 0.5 * 2.0 * std::sqrt(2.0 * m) * k2 * periodic_trapezoid([&](double phi) {
             const double s = std::sin(phi);
             const double c = std::cos(phi);
             return c * c / std::sqrt(1.0 - k2 * s * s);
           });
  }
  return 2.0 * gauss_kronrod(
                   [&](double th) { return std::sqrt(std::max(0.0, e + m * std::cos(th))); }, 0.0,
                   pi, 1e-15, 1e-14);
}

/// g_m(e) = (Π_m cos²)(e) - ((Π_m cos)(e))² - (Π_m sin²)(e).
inline double g_m(double e, double m = 1.0) {
  const ShellMoments s = shell_moments(e, m);
  const double pc = s.cos / s.one;
  return s.cos2 / s.one - pc * pc - s.sin2 / s.one;
}

struct SeparatrixSample {
  double e = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double g1 = 0.0;
  double alpha_g1 = 0.0;
};

/// α, β, g1 and α·g1 at e = 1 - 10^{-k} for each k (m = 1).
inline std::vector<SeparatrixSample> separatrix_samples(const std::vector<int>& exponents) {
  std::vector<SeparatrixSample> rows;
  for (int k : exponents) {
    SeparatrixSample r;
    r.e = 1.0 - std::pow(10.0, -k);
    r.alpha = alpha_e(r.e);
    r.beta = beta_e(r.e);
    r.g1 = g_m(r.e);
    r.alpha_g1 = r.alpha * r.g1;
    rows.push_back(r);
  }
  return rows;
}

struct SeparatrixLimit {
  double constant = 0.0;  // C in α g1 ≈ C + D / α
  double slope = 0.0;     // D
  double max_residual = 0.0;
};

/// Least-squares fit of α g1 = C + D / α over the samples. α diverges only
/// logarithmically, so the raw products are far from the limit C.
inline SeparatrixLimit fit_separatrix_limit(const std::vector<SeparatrixSample>& rows) {
  if (rows.size() < 2) throw Error("separatrix fit needs at least two samples");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& r : rows) {
    const double x = 1.0 / r.alpha;
    sx += x;
    sy += r.alpha_g1;
    sxx += x * x;
    sxy += x * r.alpha_g1;
  }
  const double n = static_cast<double>(rows.size());
  SeparatrixLimit fit;
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.constant = (sy - fit.slope * sx) / n;
  for (const auto& r : rows)
    fit.max_residual = std::max(fit.max_residual,
                                std::abs(fit.constant + fit.slope / r.alpha - r.alpha_g1));
  return fit;
}

struct UnstableCandidate {
  Equilibrium equilibrium;
  double kappa = 0.0;
  std::size_t shape_index = 0;
  std::size_t m_index = 0;
};

/// Evaluate κ on every admissible (shape, m) pair. Pairs that cannot form an
/// equilibrium are skipped. The result is sorted by κ descending; ties keep
/// the grid order, so repeated scans return identical lists.
inline std::vector<UnstableCandidate> search_unstable(const std::vector<Profile>& shapes,
                                                      const std::vector<double>& m_grid,
                                                      std::size_t nodes = default_quadrature_nodes) {
  const std::size_t total = shapes.size() * m_grid.size();
  std::vector<std::optional<UnstableCandidate>> slots(total);
  const auto n = static_cast<std::ptrdiff_t>(total);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const std::size_t si = static_cast<std::size_t>(k) / m_grid.size();
    const std::size_t mi = static_cast<std::size_t>(k) % m_grid.size();
    try {
      UnstableCandidate c;
      c.equilibrium = solve_self_consistency(shapes[si], m_grid[mi]);
      c.kappa = kappa(c.equilibrium, nodes, nodes);
      c.shape_index = si;
      c.m_index = mi;
      slots[static_cast<std::size_t>(k)] = std::move(c);
    } catch (const Error&) {
      // not an admissible steady state for this m
    }
  }
  std::vector<UnstableCandidate> out;
  for (auto& s : slots)
    if (s) out.push_back(std::move(*s));
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.kappa > b.kappa; });
  return out;
}

}  // namespace hmf
