#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_impl.hpp"

namespace qgd::kernels {

const Table& scalar_table() {
  static const Table t{Backend::kScalar, scalar::multiply, scalar::scale, scalar::moments};
  return t;
}

bool avx2_available() {
#if defined(QGD_HAVE_AVX2)
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok;
#else
  return false;
#endif
}

const Table& avx2_table() {
#if defined(QGD_HAVE_AVX2)
  if (!avx2_available()) throw std::runtime_error("CPU does not support AVX2/FMA");
  static const Table t{Backend::kAvx2, avx2::multiply, avx2::scale, avx2::moments};
  return t;
#else
  throw std::runtime_error("built without AVX2 kernels");
#endif
}

const Table& active() {
  static const Table& t = [&]() -> const Table& {
    const char* env = std::getenv("QGD_SIMD");
    if (env && std::string(env) == "scalar") return scalar_table();
    return avx2_available() ? avx2_table() : scalar_table();
  }();
  return t;
}

std::string to_string(Backend backend) {
  return backend == Backend::kAvx2 ? "avx2" : "scalar";
}

}  // namespace qgd::kernels
