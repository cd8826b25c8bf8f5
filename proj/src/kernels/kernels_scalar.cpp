#include "kernels_impl.hpp"

namespace qgd::kernels::scalar {

void multiply(cplx* psi, const cplx* phase, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double ar = psi[i].real(), ai = psi[i].imag();
    const double br = phase[i].real(), bi = phase[i].imag();
    psi[i] = cplx(ar * br - ai * bi, ar * bi + ai * br);
  }
}

void scale(cplx* psi, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) psi[i] *= s;
}

Moments moments(const cplx* psi, const double* w1, const double* w2, const double* w3,
                std::size_t n) {
  Moments m;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = psi[i].real() * psi[i].real() + psi[i].imag() * psi[i].imag();
    m.s0 += d;
    m.s1 += w1[i] * d;
    m.s2 += w2[i] * d;
    m.s3 += w3[i] * d;
  }
  return m;
}

}  // namespace qgd::kernels::scalar
