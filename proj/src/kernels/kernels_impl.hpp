#pragma once

#include "qgd/kernels.hpp"

namespace qgd::kernels {

namespace scalar {
void multiply(cplx* psi, const cplx* phase, std::size_t n);
void scale(cplx* psi, double s, std::size_t n);
Moments moments(const cplx* psi, const double* w1, const double* w2, const double* w3,
                std::size_t n);
}  // namespace scalar

namespace avx2 {
void multiply(cplx* psi, const cplx* phase, std::size_t n);
void scale(cplx* psi, double s, std::size_t n);
Moments moments(const cplx* psi, const double* w1, const double* w2, const double* w3,
                std::size_t n);
}  // namespace avx2

}  // namespace qgd::kernels
