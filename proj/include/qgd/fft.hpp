#pragma once

#include <complex>
#include <memory>
#include <vector>

namespace qgd {

/// In-place complex FFT over a row-major array (last dimension fastest).
/// Both directions are unnormalized. Plans are created with FFTW_ESTIMATE so
/// results do not depend on planner timing.
class Fft {
 public:
  explicit Fft(std::vector<int> dims);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;
  Fft(Fft&&) noexcept;
  Fft& operator=(Fft&&) noexcept;

  void forward(std::complex<double>* data) const;
  void inverse(std::complex<double>* data) const;
  std::size_t size() const { return size_; }
  const std::vector<int>& dims() const { return dims_; }

 private:
  struct Plans;
  std::vector<int> dims_;
  std::size_t size_ = 0;
  std::unique_ptr<Plans> plans_;
};

/// Angular wavenumbers 2*pi*k/L for an n-point periodic grid of length L, in
/// FFT order; the Nyquist entry is set to zero when `zero_nyquist`.
std::vector<double> wavenumbers(int n, double length, bool zero_nyquist);

}  // namespace qgd
