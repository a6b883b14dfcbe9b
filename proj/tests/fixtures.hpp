#pragma once

// Shared fixtures and frozen regression constants.

#include <memory>

#include "hmf/spectral.hpp"

namespace fixture {

/// Unstable steady state found by `hmf search --config scenarios/search.json`
/// and frozen in scenarios/unstable.json.
inline hmf::Profile unstable_shape() { return hmf::Profile::psi_plus_bump(15.92, 0.64, 15.96, 1e-3); }
inline constexpr double unstable_m0 = 16.0;

// Frozen values: κ from the energy-variable oracle at high resolution, λ*
// from bisection on G with 256 and 512 quadrature nodes (they agree to all
// printed digits).
inline constexpr double unstable_kappa = 1.110266795807;
inline constexpr double unstable_lambda_star = 1.2723215352;
inline constexpr double unstable_amplitude = 0.721614283977;

/// Stable reference state: bump-compact with e_star = -m/2 at m = 1.
inline hmf::Profile stable_shape() { return hmf::Profile::bump(-0.5, 1.0); }
inline constexpr double stable_m0 = 1.0;

inline const hmf::Equilibrium& unstable() {
  static const hmf::Equilibrium eq = hmf::solve_self_consistency(unstable_shape(), unstable_m0);
  return eq;
}

inline const hmf::Equilibrium& stable() {
  static const hmf::Equilibrium eq = hmf::solve_self_consistency(stable_shape(), stable_m0);
  return eq;
}

/// Built once per process: trajectories for every quadrature node.
inline const hmf::DispersionEvaluator& unstable_evaluator() {
  static const hmf::DispersionEvaluator ev(unstable());
  return ev;
}

}  // namespace fixture
