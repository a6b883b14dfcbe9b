#pragma once

// Quadrature rules and reproducible summation shared by every module.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <queue>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace hmf {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
};

namespace detail {

inline GaussRule build_gauss_legendre(std::size_t n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    // Tricomi initial guess, refined by Newton on P_n.
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[n - 1 - i] = x;
    rule.weights[n - 1 - i] = w;
    rule.nodes[i] = -x;
    rule.weights[i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace detail

/// Gauss–Legendre rule with n points on [-1, 1]. Rules are built once and
/// shared; the returned reference stays valid for the process lifetime.
inline const GaussRule& gauss_legendre(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_legendre: n must be positive");
  static std::mutex mutex;
  static std::map<std::size_t, GaussRule> rules;
  std::lock_guard lock(mutex);
  auto it = rules.find(n);
  if (it == rules.end()) it = rules.emplace(n, detail::build_gauss_legendre(n)).first;
  return it->second;
}

/// Fixed-order pairwise summation. The result depends only on the input
/// order, never on thread count.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 16) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t mid = xs.size() / 2;
  return pairwise_sum(xs.first(mid)) + pairwise_sum(xs.subspan(mid));
}

/// Integral of a smooth 2π-periodic function over one period by the
/// trapezoid rule, doubling the node count until successive estimates agree
/// to `rel_tol`. The rule is spectrally accurate for analytic integrands.
template <class F>
double periodic_trapezoid(F&& f, double rel_tol = 1e-14, int min_level = 5,
                          int max_level = 24) {
  const double two_pi = 2.0 * std::numbers::pi;
  std::size_t n = std::size_t{1} << min_level;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += f(two_pi * static_cast<double>(i) / static_cast<double>(n));
  double estimate = two_pi * sum / static_cast<double>(n);
  for (int level = min_level + 1; level <= max_level; ++level) {
    // New nodes sit at odd multiples of the refined spacing.
    double added = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      added += f(two_pi * (static_cast<double>(i) + 0.5) / static_cast<double>(n));
    sum += added;
    n *= 2;
    const double refined = two_pi * sum / static_cast<double>(n);
    if (std::abs(refined - estimate) <= rel_tol * std::abs(refined) ||
        std::abs(refined - estimate) < 1e-300) {
      return refined;
    }
    estimate = refined;
  }
  return estimate;
}

/// Vector-valued variant of periodic_trapezoid: integrates K functions that
/// share the same (expensive) node evaluation. Converges when every
/// component has settled relative to the largest one.
template <std::size_t K, class F>
std::array<double, K> periodic_trapezoid_multi(F&& f, double rel_tol = 1e-14,
                                               int min_level = 5, int max_level = 24) {
  const double two_pi = 2.0 * std::numbers::pi;
  std::size_t n = std::size_t{1} << min_level;
  std::array<double, K> sum{};
  auto accumulate = [&](double x) {
    const std::array<double, K> v = f(x);
    for (std::size_t k = 0; k < K; ++k) sum[k] += v[k];
  };
  for (std::size_t i = 0; i < n; ++i) accumulate(two_pi * static_cast<double>(i) / static_cast<double>(n));
  std::array<double, K> estimate{};
  for (std::size_t k = 0; k < K; ++k) estimate[k] = two_pi * sum[k] / static_cast<double>(n);
  for (int level = min_level + 1; level <= max_level; ++level) {
    for (std::size_t i = 0; i < n; ++i)
      accumulate(two_pi * (static_cast<double>(i) + 0.5) / static_cast<double>(n));
    n *= 2;
    std::array<double, K> refined{};
    double scale = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      refined[k] = two_pi * sum[k] / static_cast<double>(n);
      scale = std::max(scale, std::abs(refined[k]));
    }
    bool done = true;
    for (std::size_t k = 0; k < K; ++k)
      if (std::abs(refined[k] - estimate[k]) > rel_tol * scale) done = false;
    estimate = refined;
    if (done) break;
  }
  return estimate;
}

/// Globally adaptive Gauss–Kronrod (7/15) integration on [a, b]: the panel
/// with the largest error estimate is bisected until the summed estimate
/// meets the tolerance or `max_panels` is reached.
template <class F>
double gauss_kronrod(F&& f, double a, double b, double abs_tol = 1e-13,
                     double rel_tol = 1e-12, std::size_t max_panels = 4000) {
  static constexpr double xk[8] = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr double wk[8] = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr double wg[4] = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

  struct Panel {
    double lo, hi, integral, error;
    bool operator<(const Panel& o) const { return error < o.error; }
  };
  auto panel = [&](double lo, double hi) {
    const double c = 0.5 * (lo + hi);
    const double h = 0.5 * (hi - lo);
    const double fc = f(c);
    double kron = wk[7] * fc;
    double gauss = wg[3] * fc;
    for (int j = 0; j < 7; ++j) {
      const double dx = h * xk[j];
      const double f1 = f(c - dx);
      const double f2 = f(c + dx);
      kron += wk[j] * (f1 + f2);
      if (j % 2 == 1) gauss += wg[j / 2] * (f1 + f2);
    }
    return Panel{lo, hi, kron * h, std::abs((kron - gauss) * h)};
  };

  std::priority_queue<Panel> panels;
  panels.push(panel(a, b));
  double total = panels.top().integral;
  double error = panels.top().error;
  while (panels.size() < max_panels && error > std::max(abs_tol, rel_tol * std::abs(total))) {
    const Panel worst = panels.top();
    panels.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    const Panel left = panel(worst.lo, mid);
    const Panel right = panel(mid, worst.hi);
    total += left.integral + right.integral - worst.integral;
    error += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
  }
  // Re-sum from the panels so the result carries no running-update drift.
  std::vector<double> parts;
  parts.reserve(panels.size());
  std::vector<Panel> all;
  while (!panels.empty()) {
    all.push_back(panels.top());
    panels.pop();
  }
  std::sort(all.begin(), all.end(), [](const Panel& x, const Panel& y) { return x.lo < y.lo; });
  for (const auto& p : all) parts.push_back(p.integral);
  return pairwise_sum(parts);
}

}  // namespace hmf
