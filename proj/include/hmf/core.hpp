#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hmf {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Every recoverable failure in the library is reported with this type; the
/// message is meant to be shown to the user verbatim.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Reduce an angle to [0, 2π).
inline double wrap_angle(double theta) {
  double r = std::fmod(theta, two_pi);
  if (r < 0.0) r += two_pi;
  if (r >= two_pi) r = 0.0;
  return r;
}

/// Signed distance between two angles, in (-π, π].
inline double angle_difference(double a, double b) {
  double d = std::remainder(a - b, two_pi);
  if (d <= -pi) d += two_pi;
  return d;
}

}  // namespace hmf
