#include "qgd/geometry.hpp"

#include <cmath>

#include "qgd/errors.hpp"

namespace qgd {

MetricBundle metric_bundle(const Potential& potential, double energy, const Vec& point,
                           double guard) {
  return metric_bundle(potential.evaluate_all(point), energy, guard);
}

MetricBundle metric_bundle(const PotentialSample& sample, double energy, double guard) {
  if (guard < 0.0) guard = default_guard(energy);
  const int n = static_cast<int>(sample.gradient.size());
  MetricBundle b;
  b.energy = energy;
  b.potential = sample;
  const double d = energy - b.potential.value;
  if (std::abs(d) <= guard) throw SeparatrixSingularity(energy, b.potential.value);
  b.on_shell_defect = d;
  b.phi = energy / d;

  const Vec& gv = b.potential.gradient;
  const Mat& hv = b.potential.hessian;
  b.dphi = energy * gv / (d * d);
  b.d2phi = energy * (hv / (d * d) + 2.0 * gv * gv.transpose() / (d * d * d));

  const Mat id = Mat::Identity(n, n);
  b.g = b.phi * id;
  b.g_inv = id / b.phi;
  b.g_tilde = b.g - id;

  b.dg = Tensor3(n);
  b.d2g = Tensor4(n);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < n; ++a) {
      b.dg(a, i, i) = b.dphi[a];
      for (int c = 0; c < n; ++c) b.d2g(a, c, i, i) = b.d2phi(a, c);
    }
  }
  return b;
}

Tensor3 inverse_metric_derivative(const Mat& g_inv, const Tensor3& dg) {
  const int n = dg.dim();
  Tensor3 out(n);
  for (int k = 0; k < n; ++k) {
    Mat dk(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) dk(i, j) = dg(k, i, j);
    const Mat r = -g_inv * dk * g_inv;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out(k, i, j) = r(i, j);
  }
  return out;
}

ConnectionForms christoffel(const Mat& g, const Tensor3& dg) {
  const int n = static_cast<int>(g.rows());
  Eigen::FullPivLU<Mat> lu(g);
  if (!lu.isInvertible()) throw NonInvertibleMetric("metric is singular");
  const Mat h = lu.inverse();
  const Tensor3 dh = inverse_metric_derivative(h, dg);

  ConnectionForms out{Tensor3(n), Tensor3(n)};
  for (int l = 0; l < n; ++l) {
    for (int m = 0; m < n; ++m) {
      for (int q = 0; q < n; ++q) {
        double gam = 0.0;
        double mc = 0.0;
        for (int k = 0; k < n; ++k) {
          gam += g(l, k) * (dh(q, k, m) + dh(m, k, q) - dh(k, q, m));
          mc += h(l, k) * dg(k, q, m);
        }
        out.gamma(l, m, q) = 0.5 * gam;
        out.m_conn(l, m, q) = 0.5 * mc;
      }
    }
  }
  return out;
}

ConnectionForms christoffel(const MetricBundle& bundle) {
  return christoffel(bundle.g, bundle.dg);
}

Tensor4 deviation_tensor(const Mat& g, const Tensor3& dg, const Tensor4& d2g) {
  const int n = static_cast<int>(g.rows());
  const Mat h = g.inverse();
  const Tensor3 dh = inverse_metric_derivative(h, dg);
  Tensor4 c(n);
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int a = 0; a < n; ++a) {
          double s = 0.0;
          for (int k = 0; k < n; ++k) s += dh(a, l, k) * dg(k, i, j) + h(l, k) * d2g(a, k, i, j);
          c(l, i, j, a) = 0.5 * s;
        }
  return c;
}

Tensor4 deviation_tensor(const MetricBundle& bundle) {
  return deviation_tensor(bundle.g, bundle.dg, bundle.d2g);
}

FrameSeries frame_series(const Mat& g, int order) {
  if (order < 0) throw std::invalid_argument("frame series order must be >= 0");
  const int n = static_cast<int>(g.rows());
  const Mat id = Mat::Identity(n, n);
  const Mat gt = g - id;

  FrameSeries out;
  Eigen::SelfAdjointEigenSolver<Mat> eig(gt, Eigen::EigenvaluesOnly);
  out.spectral_radius = eig.eigenvalues().cwiseAbs().maxCoeff();
  out.divergent = out.spectral_radius >= 1.0;

  // c_k = (-1)^k (2k-1)!! / (k! 2^k), built by the ratio c_k / c_{k-1}.
  Mat a = id;
  Mat power = id;
  double coeff = 1.0;
  for (int k = 1; k <= order; ++k) {
    coeff *= -(2.0 * k - 1.0) / (2.0 * k);
    power = power * gt;
    a += coeff * power;
  }
  out.a_matrix = a;
  out.truncation_error = (a * g * a.transpose() - id).norm();
  return out;
}

FrameSeries frame_series(const MetricBundle& bundle, int order) {
  return frame_series(bundle.g, order);
}

Vec y_derivative(const MetricBundle& bundle, const Vec& x_gradient) {
  return bundle.g * x_gradient;
}

Vec x_derivative(const MetricBundle& bundle, const Vec& y_gradient) {
  return bundle.g_inv * y_gradient;
}

}  // namespace qgd
