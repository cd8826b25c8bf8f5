#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "qgd/kernels.hpp"
#include "qgd/tdse.hpp"

using namespace qgd;
using kernels::cplx;

namespace {

std::vector<cplx> random_complex(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> d;
  std::vector<cplx> v(n);
  for (auto& z : v) z = {d(rng), d(rng)};
  return v;
}

std::vector<double> random_real(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(-3, 3);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

class KernelEquivalence : public ::testing::TestWithParam<std::size_t> {
 protected:
  void SetUp() override {
    if (!kernels::avx2_available()) GTEST_SKIP() << "no AVX2 on this build/CPU";
  }
};

TEST_P(KernelEquivalence, Multiply) {
  const std::size_t n = GetParam();
  auto a = random_complex(n, 1), b = a;
  const auto phase = random_complex(n, 2);
  kernels::scalar_table().multiply(a.data(), phase.data(), n);
  kernels::avx2_table().multiply(b.data(), phase.data(), n);
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_NEAR(a[i].real(), b[i].real(), 1e-14 * (1 + std::abs(a[i])));
    EXPECT_NEAR(a[i].imag(), b[i].imag(), 1e-14 * (1 + std::abs(a[i])));
  }
}

TEST_P(KernelEquivalence, Scale) {
  const std::size_t n = GetParam();
  auto a = random_complex(n, 3), b = a;
  kernels::scalar_table().scale(a.data(), 0.37, n);
  kernels::avx2_table().scale(b.data(), 0.37, n);
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(a[i], b[i]);
}

TEST_P(KernelEquivalence, Moments) {
  const std::size_t n = GetParam();
  const auto psi = random_complex(n, 4);
  const auto w1 = random_real(n, 5), w2 = random_real(n, 6), w3 = random_real(n, 7);
  const auto s = kernels::scalar_table().moments(psi.data(), w1.data(), w2.data(), w3.data(), n);
  const auto v = kernels::avx2_table().moments(psi.data(), w1.data(), w2.data(), w3.data(), n);
  const double tol = 1e-12 * (1.0 + s.s0) * 3;
  EXPECT_NEAR(s.s0, v.s0, tol);
  EXPECT_NEAR(s.s1, v.s1, tol);
  EXPECT_NEAR(s.s2, v.s2, tol);
  EXPECT_NEAR(s.s3, v.s3, tol);
}

INSTANTIATE_TEST_SUITE_P(Lengths, KernelEquivalence,
                         ::testing::Values(0, 1, 2, 3, 5, 8, 17, 1000, 4096 + 3));

TEST(Kernels, ScalarTableIsScalar) {
  EXPECT_EQ(kernels::scalar_table().backend, kernels::Backend::kScalar);
  EXPECT_EQ(kernels::to_string(kernels::Backend::kAvx2), "avx2");
}

TEST(Kernels, PropagationMatchesAcrossBackends) {
  if (!kernels::avx2_available()) GTEST_SKIP();
  GridSpec g;
  g.nx = g.ny = 64;
  const Potential hh = Potential::henon_heiles(0.2);
  CoherentSpec spec{0.5, -0.3, 0.4, 0.2, 1.0};
  GridState a = coherent_state(spec, g), b = a;
  PropagateOptions oa, ob;
  oa.kernels = &kernels::scalar_table();
  ob.kernels = &kernels::avx2_table();
  const auto ra = propagate(a, hh, 1e-3, 500, oa);
  const auto rb = propagate(b, hh, 1e-3, 500, ob);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.psi.size(); ++i) diff = std::max(diff, std::abs(a.psi[i] - b.psi[i]));
  EXPECT_LT(diff, 1e-11);
  ASSERT_EQ(ra.size(), rb.size());
  EXPECT_NEAR(ra.x.back(), rb.x.back(), 1e-11);
  EXPECT_NEAR(ra.energy.back(), rb.energy.back(), 1e-10);
}
