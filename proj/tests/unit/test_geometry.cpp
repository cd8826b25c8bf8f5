#include <gtest/gtest.h>

#include <random>

#include "qgd/errors.hpp"
#include "qgd/geometry.hpp"
#include "qgd/stability.hpp"

using namespace qgd;

namespace {

Vec point(double x, double y) {
  Vec p(2);
  p << x, y;
  return p;
}

}  // namespace

TEST(MetricBundle, ConformalFactorAndInverse) {
  const Potential v = Potential::harmonic(1.0);
  const MetricBundle b = metric_bundle(v, 2.0, point(0.5, 0.5));
  EXPECT_NEAR(b.phi, 2.0 / (2.0 - 0.25), 1e-15);
  EXPECT_LT((b.g * b.g_inv - Mat::Identity(2, 2)).norm(), 1e-14);
  EXPECT_THROW(metric_bundle(v, 0.5, point(1.0, 0.0)), SeparatrixSingularity);
}

TEST(MetricBundle, DerivativesMatchFiniteDifferences) {
  const Potential v = Potential::henon_heiles(1.0);
  const double e = 0.15;
  const Vec x = point(0.1, -0.2);
  const MetricBundle b = metric_bundle(v, e, x);
  const double h = 1e-5;
  for (int n = 0; n < 2; ++n) {
    Vec d = Vec::Zero(2);
    d[n] = h;
    const Mat fd = (metric_bundle(v, e, x + d).g - metric_bundle(v, e, x - d).g) / (2 * h);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) EXPECT_NEAR(b.dg(n, i, j), fd(i, j), 1e-7);
  }
}

TEST(Christoffel, GeneralMatchesConformal) {
  const Potential v = Potential::henon_heiles(1.0);
  const MetricBundle b = metric_bundle(v, 0.15, point(0.2, 0.1));
  const ConnectionForms a = christoffel(b);
  const ConnectionForms c = christoffel(b.g, b.dg);
  for (int l = 0; l < 2; ++l)
    for (int m = 0; m < 2; ++m)
      for (int n = 0; n < 2; ++n) {
        EXPECT_NEAR(a.gamma(l, m, n), c.gamma(l, m, n), 1e-12);
        EXPECT_NEAR(a.m_conn(l, m, n), c.m_conn(l, m, n), 1e-12);
      }
}

TEST(ConformalTensors, CMatrixIsHalfHessianOfMinusLog) {
  const Potential v = Potential::five_well();
  const double e = 5.0;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-3, 3);
  int checked = 0;
  while (checked < 25) {
    const Vec x = point(u(rng), u(rng));
    if (std::abs(e - v.value(x)) < 0.5) continue;
    const StabilityTensors t = stability_tensors(v, e, x);
    const double h = 1e-4;
    auto f = [&](const Vec& p) { return -std::log(std::abs(e - v.value(p))); };
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        Vec di = Vec::Zero(2), dj = Vec::Zero(2);
        di[i] = h;
        dj[j] = h;
        const double fd = (f(x + di + dj) - f(x + di - dj) - f(x - di + dj) + f(x - di - dj)) / (4 * h * h);
        EXPECT_NEAR(t.c_matrix(i, j), 0.5 * fd, 1e-5 * (1 + std::abs(fd)));
      }
    for (int k = 0; k < 2; ++k) EXPECT_NEAR(t.alpha[k], (t.phi - 1) * t.lambda[k], 1e-10 * (1 + std::abs(t.lambda[k])));
    ++checked;
  }
}

TEST(FrameSeries, ConvergesInsideUnitSpectralRadius) {
  Mat g(2, 2);
  g << 1.3, 0.1, 0.1, 1.1;
  double last = 1e9;
  for (int order : {1, 2, 4, 8}) {
    const FrameSeries f = frame_series(g, order);
    EXPECT_FALSE(f.divergent);
    EXPECT_LT(f.truncation_error, last);
    last = f.truncation_error;
  }
  EXPECT_LT(last, 1e-3);
  Mat big = Mat::Identity(2, 2) * 2.5;
  EXPECT_TRUE(frame_series(big, 4).divergent);
}

TEST(DeviationTensor, VanishesForFlatMetric) {
  const Potential v = Potential::free();
  const MetricBundle b = metric_bundle(v, 1.0, point(0.3, 0.3));
  const Tensor4 c = deviation_tensor(b);
  for (int a = 0; a < 2; ++a)
    for (int b2 = 0; b2 < 2; ++b2)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) EXPECT_EQ(c(a, b2, i, j), 0.0);
}
