#pragma once

#include <complex>
#include <cstddef>
#include <string>

// Pointwise kernels for the TDSE inner loops. Every kernel has a scalar
// reference version; an AVX2 version is picked at runtime when the CPU has it.
// QGD_SIMD=scalar in the environment forces the reference path.
namespace qgd::kernels {

using cplx = std::complex<double>;

struct Moments {
  double s0 = 0.0;  // sum |psi|^2
  double s1 = 0.0;  // sum w1 |psi|^2
  double s2 = 0.0;  // sum w2 |psi|^2
  double s3 = 0.0;  // sum w3 |psi|^2
};

enum class Backend { kScalar, kAvx2 };

struct Table {
  Backend backend;
  // psi[i] *= phase[i]
  void (*multiply)(cplx* psi, const cplx* phase, std::size_t n);
  // psi[i] *= s
  void (*scale)(cplx* psi, double s, std::size_t n);
  Moments (*moments)(const cplx* psi, const double* w1, const double* w2, const double* w3,
                     std::size_t n);
};

const Table& scalar_table();
bool avx2_available();
const Table& avx2_table();  // throws if the build or the CPU lacks AVX2

/// Kernel table in use (resolved once).
const Table& active();
std::string to_string(Backend backend);

}  // namespace qgd::kernels
