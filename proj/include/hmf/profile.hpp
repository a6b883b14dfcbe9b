#pragma once

// Energy profiles F(e) of steady states f0 = F(e0). Both families vanish
// for e >= e_star and are C^∞ and nonincreasing.
//
//   bump-compact:   F(e) = A exp(-1/(e_star - e))
//   psi-plus-bump:  F(e) = A [Ψ(e) + ε exp(-1/(e_star - e))]
//
// Ψ is a smooth step of width `scale` that equals 1 below e_sharp - scale and
// 0 above e_sharp. Since e_sharp < e_star, only the exponential bump is
// nonzero near e_star, so |F'| <= C (e_star - e)^{-2} F there (alpha = 2).

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "hmf/core.hpp"

namespace hmf {

enum class ProfileFamily { bump_compact, psi_plus_bump };

inline const char* to_string(ProfileFamily f) {
  return f == ProfileFamily::bump_compact ? "bump-compact" : "psi-plus-bump";
}

inline ProfileFamily profile_family_from_string(const std::string& s) {
  if (s == "bump-compact") return ProfileFamily::bump_compact;
  if (s == "psi-plus-bump") return ProfileFamily::psi_plus_bump;
  throw Error("unknown profile family '" + s + "' (expected bump-compact or psi-plus-bump)");
}

struct PsiParams {
  double e_sharp = 0.0;
  double scale = 0.1;
};

struct Profile {
  ProfileFamily family = ProfileFamily::bump_compact;
  double e_star = 0.0;
  double amplitude = 1.0;
  double alpha = 2.0;
  std::optional<PsiParams> psi;     // psi-plus-bump only
  std::optional<double> epsilon;    // psi-plus-bump only

  static Profile bump(double e_star, double amplitude = 1.0) {
    Profile p;
    p.family = ProfileFamily::bump_compact;
    p.e_star = e_star;
    p.amplitude = amplitude;
    return p;
  }

  static Profile psi_plus_bump(double e_sharp, double scale, double e_star, double epsilon,
                               double amplitude = 1.0) {
    Profile p;
    p.family = ProfileFamily::psi_plus_bump;
    p.e_star = e_star;
    p.amplitude = amplitude;
    p.psi = PsiParams{e_sharp, scale};
    p.epsilon = epsilon;
    return p;
  }

  Profile scaled(double factor) const {
    Profile p = *this;
    p.amplitude *= factor;
    return p;
  }
};

inline void validate(const Profile& p) {
  if (!std::isfinite(p.e_star)) throw Error("profile: e_star must be finite");
  if (!(p.amplitude > 0.0)) throw Error("profile: amplitude must be positive");
  if (!(p.alpha >= 1.0)) throw Error("profile: alpha must be >= 1");
  if (p.family == ProfileFamily::psi_plus_bump) {
    if (!p.psi || !p.epsilon) throw Error("profile: psi-plus-bump needs psi_params and epsilon");
    if (!(p.psi->scale > 0.0)) throw Error("profile: psi_params.scale must be positive");
    if (!(p.psi->e_sharp < p.e_star)) throw Error("profile: psi_params.e_sharp must be below e_star");
    if (!(*p.epsilon >= 0.0)) throw Error("profile: epsilon must be nonnegative");
  }
}

namespace detail {

struct StepValue {
  double value;
  double slope;  // d/dt
};

/// Smooth step S(t) = e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)}): 0 for t <= 0,
/// 1 for t >= 1, C^∞ and increasing in between.
inline StepValue smooth_step(double t) {
  if (t <= 0.0) return {0.0, 0.0};
  if (t >= 1.0) return {1.0, 0.0};
  const double x = 1.0 / t - 1.0 / (1.0 - t);  // ratio e^{-1/(1-t)} / e^{-1/t} = e^x
  if (x > 700.0) return {0.0, 0.0};
  if (x < -700.0) return {1.0, 0.0};
  const double r = std::exp(x);
  const double s = 1.0 / (1.0 + r);
  const double ds = r * s * s * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t)));
  return {s, ds};
}

inline StepValue edge_bump(double e, double e_star) {
  if (e >= e_star) return {0.0, 0.0};
  const double d = e_star - e;
  const double b = std::exp(-1.0 / d);
  return {b, -b / (d * d)};
}

inline StepValue profile_parts(const Profile& p, double e) {
  const StepValue bump = edge_bump(e, p.e_star);
  if (p.family == ProfileFamily::bump_compact) return {p.amplitude * bump.value, p.amplitude * bump.slope};
  const double eps = p.epsilon.value_or(0.0);
  const PsiParams psi = p.psi.value_or(PsiParams{});
  const StepValue step = smooth_step((psi.e_sharp - e) / psi.scale);
  return {p.amplitude * (step.value + eps * bump.value),
          p.amplitude * (-step.slope / psi.scale + eps * bump.slope)};
}

}  // namespace detail

/// Energies where F changes quickly: the two ends of the Ψ transition.
/// Quadratures split their ranges there.
inline std::vector<double> profile_breakpoints(const Profile& p) {
  if (p.family != ProfileFamily::psi_plus_bump || !p.psi) return {};
  std::vector<double> out;
  for (double e : {p.psi->e_sharp - p.psi->scale, p.psi->e_sharp})
    if (e < p.e_star) out.push_back(e);
  return out;
}

/// F(e); exactly zero for e >= e_star.
inline double profile_value(const Profile& p, double e) { return detail::profile_parts(p, e).value; }

/// F'(e); nonpositive, exactly zero for e >= e_star.
inline double profile_derivative(const Profile& p, double e) {
  return detail::profile_parts(p, e).slope;
}

}  // namespace hmf
