#include <gtest/gtest.h>

#include <random>

#include "qgd/errors.hpp"
#include "qgd/potentials.hpp"

using namespace qgd;

namespace {

void check_derivatives(const Potential& v, const Vec& x) {
  const PotentialSample s = v.evaluate_all(x);
  const double h = 1e-5;
  for (int k = 0; k < v.dim(); ++k) {
    Vec e = Vec::Zero(v.dim());
    e[k] = h;
    const double fd = (v.value(x + e) - v.value(x - e)) / (2 * h);
    EXPECT_NEAR(s.gradient[k], fd, 1e-7 * (1 + std::abs(fd)));
    const Vec gd = (v.evaluate_all(x + e).gradient - v.evaluate_all(x - e).gradient) / (2 * h);
    for (int j = 0; j < v.dim(); ++j) EXPECT_NEAR(s.hessian(j, k), gd[j], 1e-6 * (1 + std::abs(gd[j])));
  }
}

}  // namespace

TEST(Potentials, AnalyticDerivativesMatchFiniteDifferences) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (const Potential& v : {Potential::harmonic(0.7), Potential::henon_heiles(1.0), Potential::five_well(),
                             Potential::harmonic(1.3, 3)}) {
    for (int n = 0; n < 10; ++n) {
      Vec x(v.dim());
      for (int k = 0; k < v.dim(); ++k) x[k] = u(rng);
      check_derivatives(v, x);
    }
  }
}

TEST(Potentials, PlanarFastPathAgrees) {
  const Potential v = Potential::five_well();
  Vec x(2);
  x << 0.7, -1.3;
  EXPECT_DOUBLE_EQ(v.value2(0.7, -1.3), v.value(x));
}

TEST(Potentials, HenonHeilesEscapeEnergy) {
  EXPECT_DOUBLE_EQ(Potential::henon_heiles(1.0).escape_energy(), 1.0 / 6.0);
  EXPECT_NEAR(Potential::henon_heiles(0.5).escape_energy(), 2.0 / 3.0, 1e-15);
}

TEST(Potentials, FromParamsRejectsUnknown) {
  EXPECT_THROW(Potential::from_params("harmonic", {{"lambda", 1.0}}), ConfigError);
  EXPECT_THROW(Potential::from_params("quartic", {}), ConfigError);
  const Potential v = Potential::from_params("henon-heiles", {{"lambda", 0.25}});
  EXPECT_EQ(v.params().at("lambda"), 0.25);
}

TEST(CriticalPoints, HenonHeilesHasOneMinimumAndThreeSaddles) {
  const Potential v = Potential::henon_heiles(1.0);
  Box box{Vec::Constant(2, -2.0), Vec::Constant(2, 2.0)};
  const CriticalSearch s = find_critical_points(v, box, 1e-10);
  int minima = 0, saddles = 0;
  for (const CriticalPoint& p : s.points) {
    if (p.kind == CriticalKind::kMinimum) ++minima;
    if (p.kind == CriticalKind::kSaddle) {
      ++saddles;
      EXPECT_NEAR(p.energy, 1.0 / 6.0, 1e-12);
    }
  }
  EXPECT_EQ(minima, 1);
  EXPECT_EQ(saddles, 3);
  Vec origin = Vec::Zero(2);
  EXPECT_NEAR(separatrix_energy(v, s, origin), 1.0 / 6.0, 1e-12);
}

TEST(CriticalPoints, FiveWellSymmetric) {
  const Potential v = Potential::five_well();
  Box box{Vec::Constant(2, -4.0), Vec::Constant(2, 4.0)};
  const CriticalSearch s = find_critical_points(v, box, 1e-10);
  int minima = 0;
  for (const CriticalPoint& p : s.points) {
    if (p.kind != CriticalKind::kMinimum) continue;
    ++minima;
    Vec mirrored(2);
    mirrored << p.location[1], -p.location[0];
    EXPECT_NEAR(v.value(mirrored), p.energy, 1e-12);
  }
  EXPECT_EQ(minima, 5);
}
