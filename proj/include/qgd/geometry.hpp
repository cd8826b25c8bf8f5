#pragma once

#include <cmath>
#include <vector>

#include "qgd/potentials.hpp"

namespace qgd {

// Dense rank-3 array, last index fastest.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int n) : n_(n), data_(static_cast<size_t>(n) * n * n, 0.0) {}

  int dim() const { return n_; }
  double& operator()(int a, int b, int c) { return data_[(a * n_ + b) * n_ + c]; }
  double operator()(int a, int b, int c) const { return data_[(a * n_ + b) * n_ + c]; }
  const std::vector<double>& data() const { return data_; }

 private:
  int n_ = 0;
  std::vector<double> data_;
};

// Dense rank-4 array, last index fastest.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(int n) : n_(n), data_(static_cast<size_t>(n) * n * n * n, 0.0) {}

  int dim() const { return n_; }
  double& operator()(int a, int b, int c, int d) {
    return data_[((a * n_ + b) * n_ + c) * n_ + d];
  }
  double operator()(int a, int b, int c, int d) const {
    return data_[((a * n_ + b) * n_ + c) * n_ + d];
  }
  const std::vector<double>& data() const { return data_; }

 private:
  int n_ = 0;
  std::vector<double> data_;
};

/// Conformal metric g = phi * I with phi = E/(E - V) and its derivative stack.
///   dg(n, i, j)     = d g_ij / dy^n
///   d2g(a, n, i, j) = d^2 g_ij / dy^a dy^n
struct MetricBundle {
  double energy = 0.0;
  double phi = 1.0;
  double on_shell_defect = 0.0;  // E - V
  Vec dphi;
  Mat d2phi;
  Mat g;
  Mat g_inv;
  Mat g_tilde;  // g - I
  Tensor3 dg;
  Tensor4 d2g;
  PotentialSample potential;

  int dim() const { return static_cast<int>(g.rows()); }
};

inline double default_guard(double energy) { return 1e-8 * std::abs(energy); }

/// Throws SeparatrixSingularity when |E - V| <= guard. A negative guard means
/// the default 1e-8 |E|.
MetricBundle metric_bundle(const Potential& potential, double energy, const Vec& point,
                           double guard = -1.0);
/// Same, from a potential sample (value, gradient, Hessian) at the point.
MetricBundle metric_bundle(const PotentialSample& sample, double energy, double guard = -1.0);

/// gamma(l, m, n) = Gamma^{mn}_l   (connection of the x-frame geodesic)
/// m_conn(l, m, n) = M^l_{mn}      (reduced y-frame connection)
struct ConnectionForms {
  Tensor3 gamma;
  Tensor3 m_conn;
};

ConnectionForms christoffel(const MetricBundle& bundle);
/// Same, for an arbitrary symmetric metric with first derivatives dg(n,i,j).
ConnectionForms christoffel(const Mat& g, const Tensor3& dg);

/// d g^{ij} / dy^n from d g_ij / dy^n.
Tensor3 inverse_metric_derivative(const Mat& g_inv, const Tensor3& dg);

/// C(l, i, j, a) = 1/2 (d_a g^{ln} d_n g_ij + g^{ln} d_a d_n g_ij)
Tensor4 deviation_tensor(const Mat& g, const Tensor3& dg, const Tensor4& d2g);
Tensor4 deviation_tensor(const MetricBundle& bundle);

struct FrameSeries {
  Mat a_matrix;
  double truncation_error = 0.0;  // ||A G A^T - I||_F
  double spectral_radius = 0.0;   // of G - I
  bool divergent = false;         // spectral radius >= 1
};

/// Truncated binomial series for A = G^{-1/2} about G = I, through order `order`.
FrameSeries frame_series(const Mat& g, int order);
FrameSeries frame_series(const MetricBundle& bundle, int order);

/// g_ln d f / dx_n, the local y-frame derivative.
Vec y_derivative(const MetricBundle& bundle, const Vec& x_gradient);
/// g^{mn} d f / dy^n, the inverse relation.
Vec x_derivative(const MetricBundle& bundle, const Vec& y_gradient);

}  // namespace qgd
