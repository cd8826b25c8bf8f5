#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qgd {

template <typename F>
Vec dopri5(F&& f, double t0, double t1, Vec y, double rtol, double atol, double& h_hint) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  // b - b* (embedded 4th order weights)
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const double span = t1 - t0;
  if (span == 0.0) return y;
  const double dir = span > 0 ? 1.0 : -1.0;
  double h = h_hint > 0 ? std::min(h_hint, std::abs(span)) : std::abs(span);
  double t = t0;
  Vec k1 = f(t, y);
  int rejected_in_row = 0;
  while (dir * (t1 - t) > 0) {
    bool last = false;
    const double h_want = h;
    if (h >= std::abs(t1 - t)) {
      h = std::abs(t1 - t);
      last = true;
    }
    const double hs = dir * h;
    const Vec k2 = f(t + c2 * hs, y + hs * (a21 * k1));
    const Vec k3 = f(t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
    const Vec k4 = f(t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec k5 = f(t + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec k6 =
        f(t + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vec y_new = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vec k7 = f(t + hs, y_new);
    const Vec err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double norm = 0.0;
    for (int i = 0; i < y.size(); ++i) {
      const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      norm += (err[i] / sc) * (err[i] / sc);
    }
    norm = std::sqrt(norm / y.size());

    if (norm <= 1.0 || h < 1e-14 * std::max(1.0, std::abs(t))) {
      t = last ? t1 : t + hs;
      y = y_new;
      k1 = k7;
      rejected_in_row = 0;
      const double fac = norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
      if (!last) h *= fac;
      else h_hint = std::max(h * fac, h_want);
    } else {
      if (++rejected_in_row > 100) throw std::runtime_error("dopri5: step size underflow");
      h *= std::max(0.2, 0.9 * std::pow(norm, -0.25));
    }
  }
  return y;
}

}  // namespace qgd
