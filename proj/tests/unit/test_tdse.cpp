#include <gtest/gtest.h>

#include <cmath>

#include "qgd/classical.hpp"
#include "qgd/errors.hpp"
#include "qgd/stability.hpp"
#include "qgd/tdse.hpp"

using namespace qgd;

namespace {

GridSpec grid(int n, double half) {
  GridSpec g;
  g.nx = g.ny = n;
  g.x_min = g.y_min = -half;
  g.x_max = g.y_max = half;
  return g;
}

}  // namespace

TEST(Grid, RejectsBadSpecs) {
  GridSpec g = grid(64, 8);
  g.nx = 1;
  EXPECT_THROW(validate(g), std::invalid_argument);
  g = grid(64, 8);
  g.x_max = g.x_min;
  EXPECT_THROW(validate(g), std::invalid_argument);
}

TEST(CoherentState, NormalizedWithRequestedMoments) {
  const GridSpec g = grid(128, 8);
  const GridState s = coherent_state({0.5, -1.0, 0.7, -0.2, 0.8}, g);
  const Expectations e = expectations(s, Potential::free());
  EXPECT_NEAR(e.norm, 1.0, 1e-12);
  EXPECT_NEAR(e.x, 0.5, 1e-12);
  EXPECT_NEAR(e.y, -1.0, 1e-12);
  EXPECT_NEAR(e.px, 0.7, 1e-12);
  EXPECT_NEAR(e.py, -0.2, 1e-12);
  // <x^2> - <x>^2 = w^2/2, <px^2> - <px>^2 = 1/(2 w^2)
  EXPECT_NEAR(e.x2 - e.x * e.x, 0.32, 1e-12);
  EXPECT_NEAR(e.px2 - e.px * e.px, 1.0 / (2 * 0.64), 1e-10);
}

TEST(CoherentState, OutsideGridThrows) {
  EXPECT_THROW(coherent_state({6.5, 0, 0, 0, 1.0}, grid(128, 8)), PacketOutsideGrid);
}

TEST(Propagation, FreeGaussianSpreading) {
  const GridSpec g = grid(256, 8);
  const double w = 1.0, px = 0.5;
  GridState s = coherent_state({-1.0, 0.0, px, 0.0, w}, g);
  propagate(s, Potential::free(), 1e-3, 1000);
  const Expectations e = expectations(s, Potential::free());
  const double t = 1.0;
  EXPECT_NEAR(e.x, -1.0 + px * t, 1e-10);
  EXPECT_NEAR(e.x2 - e.x * e.x, 0.5 * w * w * (1 + t * t / (w * w * w * w)), 1e-10);
  EXPECT_NEAR(e.y2, 0.5 * w * w * (1 + t * t), 1e-10);
}

TEST(Propagation, HarmonicCoherentStateReturns) {
  const GridSpec g = grid(256, 8);
  const Potential h = Potential::harmonic(1.0);
  GridState s = coherent_state({1.5, -0.5, 0.0, 1.0, 1.0}, g);
  const auto psi0 = s.psi;
  const long steps = 6283;
  propagate(s, h, 2 * M_PI / steps, steps);
  // Zero-point phase e^{-i 2 pi} = 1: the state itself returns.
  double err = 0.0;
  for (std::size_t i = 0; i < s.psi.size(); ++i) err = std::max(err, std::abs(s.psi[i] - psi0[i]));
  EXPECT_LT(err, 1e-5);
}

TEST(Propagation, EhrenfestExactForQuadratic) {
  const GridSpec g = grid(128, 8);
  const Potential h = Potential::harmonic(1.0);
  GridState s = coherent_state({1.0, 0.5, 0.3, -0.4, 1.0}, g);
  PropagateOptions o;
  o.sample_stride = 100;
  const TrajectoryRecord r = propagate(s, h, 1e-3, 3000, o);
  ASSERT_FALSE(r.breached);
  Vec q0(2), p0(2);
  q0 << 1.0, 0.5;
  p0 << 0.3, -0.4;
  HamiltonOptions ho;
  ho.sample_stride = 100;
  const ClassicalTrajectory c = integrate_hamilton(h, {q0, p0, 0.0}, 1e-3, 3.0, ho);
  ASSERT_EQ(c.samples.size(), r.size());
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double t = r.t[k];
    EXPECT_NEAR(r.x[k], 1.0 * std::cos(t) + 0.3 * std::sin(t), 1e-5);
    EXPECT_NEAR(r.y[k], 0.5 * std::cos(t) - 0.4 * std::sin(t), 1e-5);
    EXPECT_NEAR(r.px[k], -1.0 * std::sin(t) + 0.3 * std::cos(t), 1e-5);
    EXPECT_NEAR(r.x[k], c.samples[k].q[0], 1e-5);
    EXPECT_NEAR(r.y[k], c.samples[k].q[1], 1e-5);
  }
}

TEST(Propagation, UnitarityAndEnergyOnHenonHeiles) {
  const GridSpec g = grid(128, 8);
  const Potential hh = Potential::henon_heiles(0.1);
  GridState s = coherent_state({0.2, 0.4, 0.5, 0.0, 1.0}, g);
  PropagateOptions o;
  o.sample_stride = 1000;
  const TrajectoryRecord r = propagate(s, hh, 1e-3, 10000, o);
  ASSERT_FALSE(r.breached);
  EXPECT_LT(r.norm_drift(), 1e-10);
  EXPECT_LT(r.energy_drift(), 1e-6);
}

TEST(Propagation, TimeStepConvergence) {
  const GridSpec g = grid(128, 8);
  const Potential hh = Potential::henon_heiles(0.1);
  const CoherentSpec spec{0.2, 0.4, 0.5, 0.0, 1.0};
  GridState a = coherent_state(spec, g), b = a;
  propagate(a, hh, 1e-3, 2000);
  propagate(b, hh, 5e-4, 4000);
  const Expectations ea = expectations(a, hh), eb = expectations(b, hh);
  EXPECT_LT(std::hypot(ea.x - eb.x, ea.y - eb.y), 1e-6);
}

TEST(Propagation, CollarBreachIsFlagged) {
  const GridSpec g = grid(64, 8);
  GridState s = coherent_state({0.0, 0.0, 6.0, 0.0, 1.0}, g);
  PropagateOptions o;
  o.sample_stride = 5;
  const TrajectoryRecord r = propagate(s, Potential::free(), 1e-2, 300, o);
  EXPECT_TRUE(r.breached);
  EXPECT_GT(r.breach_mass, 1e-8);
  EXPECT_LT(r.t.back(), 3.0);
  GridState s2 = coherent_state({0.0, 0.0, 6.0, 0.0, 1.0}, g);
  o.throw_on_breach = true;
  EXPECT_THROW(propagate(s2, Potential::free(), 1e-2, 300, o), BoundaryBreach);
}

TEST(Ehrenfest, ResidualShrinksWithWidth) {
  const GridSpec g = grid(256, 8);
  const Potential h = Potential::harmonic(1.0);
  double last = 1e9;
  for (double w : {0.8, 0.4, 0.2}) {
    const GridState s = coherent_state({0.5, 0.0, 0.0, 0.0, w}, g);
    const EhrenfestResult r = ehrenfest_residual(s, h);
    EXPECT_LT(r.residual.norm(), last);
    last = r.residual.norm();
  }
  EXPECT_LT(last, 1e-2);
}

TEST(DeviationExpectation, FlatMetricGivesZero) {
  const GridSpec g = grid(64, 8);
  const GridState s = coherent_state({0.3, 0.2, 0.5, 0.1, 1.0}, g);
  const DeviationExpectation d = deviation_expectation(s, Potential::free(), 1.0);
  EXPECT_LT(d.matrix.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(DeviationExpectation, RealAndConsistentWithPointwise) {
  const GridSpec g = grid(256, 3);
  const Potential h = Potential::harmonic(1.0);
  double last = 1e9;
  for (double w : {0.2, 0.15, 0.1}) {
    const GridState s = coherent_state({0.2, 0.0, 0.3, 0.0, w}, g);
    const DeviationExpectation d = deviation_expectation(s, h, 1.0);
    EXPECT_LT(d.imaginary, 1e-10 * (1 + d.matrix.norm()));
    const Mat p = pointwise_deviation(h, 1.0, d.mean_position, d.momentum_second_moment);
    const double rel = (d.matrix - p).norm() / p.norm();
    EXPECT_LT(rel, 0.1);
    EXPECT_LT(rel, last);
    last = rel;
  }
}

TEST(Twin, ZeroPerturbationGivesZeroDistance) {
  const GridSpec g = grid(64, 8);
  TwinOptions o;
  o.propagate.sample_stride = 50;
  const TwinResult r = twin_divergence(Potential::henon_heiles(0.3), g, {0.2, 0.1, 0.3, 0.0, 1.0},
                                       Vec::Zero(2), 1e-3, 1.0, o);
  for (double d : r.distance) EXPECT_EQ(d, 0.0);
}

TEST(Twin, HarmonicDistanceIsBounded) {
  const GridSpec g = grid(64, 8);
  TwinOptions o;
  o.propagate.sample_stride = 20;
  Vec dp(2);
  dp << 1e-3, 0.0;
  const TwinResult r = twin_divergence(Potential::harmonic(1.0), g, {0.5, 0.0, 0.0, 0.0, 1.0}, dp,
                                       1e-3, 4.0, o);
  for (std::size_t k = 0; k < r.t.size(); ++k) {
    EXPECT_NEAR(r.distance[k], 1e-3 * std::abs(std::sin(r.t[k])), 1e-9);
  }
}

TEST(Twin, FitUsesSpecifiedWindow) {
  TwinResult r;
  for (int k = 0; k <= 100; ++k) {
    r.t.push_back(0.1 * k);
    r.distance.push_back(k == 0 ? 0.0 : 1e-4 * std::exp(0.8 * 0.1 * k));
  }
  fit_growth(r, 1.0);
  EXPECT_NEAR(r.growth_rate, 0.8, 1e-9);
  EXPECT_GT(r.fit_t0, 0.1);
  EXPECT_LE(r.fit_t1, 10.0);
}
