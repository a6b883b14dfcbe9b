#pragma once

// Phase-space grid: periodic in θ, truncated to [-v_max, v_max] in v.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "hmf/core.hpp"
#include "hmf/equilibrium.hpp"
#include "hmf/quadrature.hpp"

namespace hmf {

struct PhaseSpaceGrid {
  std::size_t n_theta = 0;
  std::size_t n_v = 0;
  double v_max = 0.0;
  std::vector<double> values;  // θ-major: values[i * n_v + j]

  PhaseSpaceGrid() = default;
  PhaseSpaceGrid(std::size_t n_theta_, std::size_t n_v_, double v_max_)
      : n_theta(n_theta_), n_v(n_v_), v_max(v_max_), values(n_theta_ * n_v_, 0.0) {
    if (n_theta < 4 || n_v < 4) throw Error("grid needs at least 4 nodes per direction");
    if (!(v_max > 0.0)) throw Error("grid v_max must be positive");
  }

  double dtheta() const { return two_pi / static_cast<double>(n_theta); }
  double dv() const { return 2.0 * v_max / static_cast<double>(n_v - 1); }
  double theta(std::size_t i) const { return dtheta() * static_cast<double>(i); }
  double v(std::size_t j) const { return -v_max + dv() * static_cast<double>(j); }

  double& at(std::size_t i, std::size_t j) { return values[i * n_v + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * n_v + j]; }

  /// Index of the node at (-θ_i, -v_j).
  std::size_t mirror(std::size_t i, std::size_t j) const {
    return ((n_theta - i) % n_theta) * n_v + (n_v - 1 - j);
  }

  bool same_shape(const PhaseSpaceGrid& o) const {
    return n_theta == o.n_theta && n_v == o.n_v && v_max == o.v_max;
  }
};

/// Composite quadrature ∬ g(i, j, f_ij) dθ dv: periodic trapezoid in θ,
/// trapezoid in v. Rows are summed in order and combined pairwise.
template <class G>
double integrate_grid(const PhaseSpaceGrid& grid, G&& g) {
  std::vector<double> rows(grid.n_theta, 0.0);
  const auto n = static_cast<std::ptrdiff_t>(grid.n_theta);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double s = 0.0;
    for (std::size_t j = 0; j < grid.n_v; ++j) {
      const double w = (j == 0 || j + 1 == grid.n_v) ? 0.5 : 1.0;
      s += w * g(i, j, grid.at(i, j));
    }
    rows[i] = s;
  }
  return pairwise_sum(rows) * grid.dtheta() * grid.dv();
}

inline double grid_l1_norm(const PhaseSpaceGrid& grid) {
  return integrate_grid(grid, [](std::size_t, std::size_t, double f) { return std::abs(f); });
}

inline double grid_l1_distance(const PhaseSpaceGrid& a, const PhaseSpaceGrid& b) {
  if (!a.same_shape(b)) throw Error("grid shapes differ");
  return integrate_grid(a, [&](std::size_t i, std::size_t j, double f) {
    return std::abs(f - b.at(i, j));
  });
}

/// Twice the support edge: v_max = 2 √(2 (e_star + m0)).
inline double default_v_max(const Equilibrium& eq) {
  return 2.0 * std::sqrt(2.0 * std::max(0.0, eq.profile.e_star + eq.m0));
}

/// f0 sampled at the grid nodes.
inline PhaseSpaceGrid equilibrium_grid(const Equilibrium& eq, std::size_t n_theta, std::size_t n_v,
                                       double v_max) {
  PhaseSpaceGrid g(n_theta, n_v, v_max);
  for (std::size_t i = 0; i < n_theta; ++i)
    for (std::size_t j = 0; j < n_v; ++j)
      g.at(i, j) = profile_value(eq.profile, microscopic_energy(g.theta(i), g.v(j), eq.m0));
  return g;
}

}  // namespace hmf
