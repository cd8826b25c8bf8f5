#include "qgd/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numeric>
#include <stdexcept>

namespace qgd {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct Fft::Plans {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
  }
};

Fft::Fft(std::vector<int> dims) : dims_(std::move(dims)), plans_(std::make_unique<Plans>()) {
  if (dims_.empty()) throw std::invalid_argument("fft needs at least one dimension");
  size_ = std::accumulate(dims_.begin(), dims_.end(), std::size_t{1},
                          [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
  std::vector<std::complex<double>> scratch(size_);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  std::lock_guard<std::mutex> lock(planner_mutex());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  const int rank = static_cast<int>(dims_.size());
  plans_->fwd = fftw_plan_dft(rank, dims_.data(), buf, buf, FFTW_FORWARD, flags);
  plans_->inv = fftw_plan_dft(rank, dims_.data(), buf, buf, FFTW_BACKWARD, flags);
  if (!plans_->fwd || !plans_->inv) throw std::runtime_error("fftw planning failed");
}

Fft::~Fft() = default;

Fft::Fft(Fft&&) noexcept = default;
Fft& Fft::operator=(Fft&&) noexcept = default;

void Fft::forward(std::complex<double>* data) const {
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plans_->fwd, buf, buf);
}

void Fft::inverse(std::complex<double>* data) const {
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plans_->inv, buf, buf);
}

std::vector<double> wavenumbers(int n, double length, bool zero_nyquist) {
  std::vector<double> k(n);
  for (int i = 0; i < n; ++i) {
    const int j = i <= n / 2 ? i : i - n;
    k[i] = 2.0 * M_PI * j / length;
  }
  if (zero_nyquist && n % 2 == 0) k[n / 2] = 0.0;
  return k;
}

}  // namespace qgd
