#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hmf/pendulum.hpp"
#include "oracles.hpp"

using namespace hmf;

TEST(MicroscopicEnergy, Examples) {
  EXPECT_DOUBLE_EQ(microscopic_energy(PhasePoint(0.0, 0.0), 1.0), -1.0);
  EXPECT_DOUBLE_EQ(microscopic_energy(PhasePoint(pi, 0.0), 1.0), 1.0);
  EXPECT_NEAR(microscopic_energy(PhasePoint(pi / 2, 2.0), 1.0), 2.0, 1e-15);
}

TEST(PhasePoint, AngleIsReduced) {
  EXPECT_NEAR(PhasePoint(-0.5, 1.0).theta, two_pi - 0.5, 1e-15);
  EXPECT_NEAR(PhasePoint(7.0, 1.0).theta, 7.0 - two_pi, 1e-15);
}

TEST(ClassifyOrbit, Regimes) {
  const Orbit bottom = classify_orbit(PhasePoint(0.0, 0.0), 1.0);
  EXPECT_EQ(bottom.regime, Regime::fixed_point);
  EXPECT_DOUBLE_EQ(bottom.e0, -1.0);

  const Orbit rot = classify_orbit(PhasePoint(0.0, 2.5), 1.0);
  EXPECT_EQ(rot.regime, Regime::rotating);
  EXPECT_NEAR(rot.e0, 2.125, 1e-15);
  ASSERT_TRUE(rot.period.has_value());

  const Orbit lib = classify_orbit(PhasePoint(pi / 2, 0.0), 1.0);
  EXPECT_EQ(lib.regime, Regime::librating);
  EXPECT_NEAR(lib.e0, 0.0, 1e-15);
  ASSERT_TRUE(lib.theta_turn.has_value());
  EXPECT_NEAR(*lib.theta_turn, pi / 2, 1e-15);
  ASSERT_TRUE(lib.period.has_value());

  const Orbit sep = classify_orbit(PhasePoint(pi, 0.0), 1.0);
  EXPECT_EQ(sep.regime, Regime::separatrix);
  EXPECT_FALSE(sep.period.has_value());
}

TEST(Period, EllipticOracleAtZeroEnergy) {
  const double ref = 4.0 * oracle::elliptic_K(1.0 / std::sqrt(2.0));
  EXPECT_NEAR(ref, 7.4163, 1e-4);
  EXPECT_LE(std::abs(period(0.0, 1.0) - ref) / ref, 1e-8);
}

TEST(Period, HarmonicLimit) { EXPECT_NEAR(period(-1.0 + 1e-8, 1.0), two_pi, 1e-4); }

TEST(Period, RotatingAgainstQuadrature) {
  const double ref = oracle::tanh_sinh([](double t) { return 1.0 / std::sqrt(2.0 * (10.0 + std::cos(t))); },
                                       0.0, two_pi);
  EXPECT_LE(std::abs(period(10.0, 1.0) - ref) / ref, 1e-12);
  EXPECT_NEAR(period(10.0, 1.0), two_pi / std::sqrt(20.0), 0.01);
}

TEST(Period, TwentyLibratingEnergies) {
  for (double m0 : {1.0, 2.5, 16.0}) {
    for (int k = 0; k < 20; ++k) {
      const double e = m0 * (-0.999 + 1.997 * k / 19.0);
      const double ref = oracle::librating_period(e, m0);
      EXPECT_LE(std::abs(period(e, m0) - ref) / ref, 1e-8) << "e=" << e << " m0=" << m0;
    }
  }
}

TEST(Period, BoundedBelowAndIncreasing) {
  const double m0 = 3.0;
  double prev = 0.0;
  for (int k = 1; k < 50; ++k) {
    const double e = m0 * (-1.0 + 1.98 * k / 50.0);
    const double T = period(e, m0);
    EXPECT_GE(T, two_pi / std::sqrt(m0) * (1.0 - 1e-12));
    EXPECT_GT(T, prev);
    prev = T;
  }
}

TEST(Period, Errors) {
  EXPECT_THROW(
      {
        try {
          period(1.0, 1.0);
        } catch (const Error& e) {
          EXPECT_NE(std::string(e.what()).find("period diverges"), std::string::npos);
          throw;
        }
      },
      Error);
  EXPECT_THROW(
      {
        try {
          period(-1.5, 1.0);
        } catch (const Error& e) {
          EXPECT_NE(std::string(e.what()).find("no orbit"), std::string::npos);
          throw;
        }
      },
      Error);
}

TEST(Advance, FixedPointStays) {
  const PhasePoint p = advance(PhasePoint(0.0, 0.0), 1.0, 7.3);
  EXPECT_EQ(p.theta, 0.0);
  EXPECT_EQ(p.v, 0.0);
}

TEST(Advance, EnergyConservation) {
  const PhasePoint p0(1.0, 1.0);
  EXPECT_LE(std::abs(microscopic_energy(advance(p0, 1.0, 10.0), 1.0) - microscopic_energy(p0, 1.0)), 1e-10);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> th(0.0, two_pi), vv(-3.0, 3.0), ss(-100.0, 100.0);
  for (int k = 0; k < 20; ++k) {
    const PhasePoint p(th(rng), vv(rng));
    const double m0 = 1.0 + 0.1 * k;
    if (regime_of(microscopic_energy(p, m0), m0) == Regime::separatrix) continue;
    const PhasePoint q = advance(p, m0, ss(rng));
    EXPECT_LE(std::abs(microscopic_energy(q, m0) - microscopic_energy(p, m0)), 1e-10);
  }
}

TEST(Advance, LibratingPeriodReturns) {
  for (const PhasePoint p : {PhasePoint(1.0, 0.3), PhasePoint(0.2, 1.2), PhasePoint(2.5, 0.0)}) {
    const double m0 = 1.0;
    const double T = period(microscopic_energy(p, m0), m0);
    const PhasePoint q = advance(p, m0, T);
    EXPECT_LE(std::abs(angle_difference(q.theta, p.theta)), 1e-8);
    EXPECT_LE(std::abs(q.v - p.v), 1e-8);
  }
}

TEST(Advance, RotatingPeriodicity) {
  const double m0 = 1.0;
  const PhasePoint p(0.4, 2.3);
  const double T = period(microscopic_energy(p, m0), m0);
  for (double s : {0.0, 1.3, -2.1}) {
    const PhasePoint a = advance(p, m0, s);
    const PhasePoint b = advance(p, m0, s + T);
    EXPECT_LE(std::abs(angle_difference(a.theta, b.theta)), 1e-8);
    EXPECT_LE(std::abs(a.v - b.v), 1e-8);
  }
}

TEST(Advance, Composition) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> th(0.0, two_pi), vv(-2.5, 2.5), ss(-20.0, 20.0);
  for (int k = 0; k < 10; ++k) {
    const PhasePoint p(th(rng), vv(rng));
    const double s = ss(rng), t = ss(rng);
    const PhasePoint a = advance(advance(p, 1.0, s), 1.0, t);
    const PhasePoint b = advance(p, 1.0, s + t);
    EXPECT_LE(std::abs(angle_difference(a.theta, b.theta)), 1e-8);
    EXPECT_LE(std::abs(a.v - b.v), 1e-8);
  }
}

TEST(Advance, Parity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> th(0.0, two_pi), vv(-2.5, 2.5), ss(-15.0, 15.0);
  for (int k = 0; k < 10; ++k) {
    const double theta = th(rng), v = vv(rng), s = ss(rng);
    const PhasePoint a = advance(PhasePoint(theta, v), 1.7, s);
    const PhasePoint b = advance(PhasePoint(-theta, -v), 1.7, s);
    EXPECT_LE(std::abs(angle_difference(a.theta, -b.theta)), 1e-10);
    EXPECT_LE(std::abs(a.v + b.v), 1e-10);
  }
}

TEST(OrbitAverage, ConstantsAndOddFunctions) {
  for (double e : {-0.8, 0.0, 0.7, 1.5, 4.0}) {
    EXPECT_NEAR(orbit_average([](double) { return 1.0; }, e, 1.0), 1.0, 1e-13);
    EXPECT_NEAR(orbit_average([](double t) { return std::sin(t); }, e, 1.0), 0.0, 1e-13);
  }
}

TEST(OrbitAverage, CosineAtTheBottom) {
  EXPECT_NEAR(orbit_average([](double t) { return std::cos(t); }, -1.0 + 1e-10, 1.0), 1.0, 1e-9);
}

TEST(OrbitAverage, ProjectorIsIdempotent) {
  for (double e : {-0.5, 0.3, 2.0}) {
    const double c = orbit_average([](double t) { return std::cos(t) * std::cos(t); }, e, 1.0);
    EXPECT_NEAR(orbit_average([&](double) { return c; }, e, 1.0), c, 1e-13);
  }
}

TEST(OrbitAverage, MatchesQuadratureOracle) {
  for (double e : {-0.9, 0.0, 0.99, 3.0}) {
    const double ref = oracle::shell([](double t) { return std::cos(t); }, e, 1.0) /
                       oracle::shell([](double) { return 1.0; }, e, 1.0);
    EXPECT_NEAR(orbit_average([](double t) { return std::cos(t); }, e, 1.0), ref, 1e-12);
  }
}

TEST(OrbitAverage, SeparatrixIsRejected) {
  EXPECT_THROW(orbit_average([](double) { return 1.0; }, 1.0, 1.0), Error);
}
