#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qgd/fft.hpp"
#include "qgd/geometry.hpp"
#include "qgd/potentials.hpp"

// Matrix-free discretization of x, p = -i d/dx and the geometric Hamiltonian
// H_G = p^i g_ij p^j / 2m on a periodic grid, used to check the operator
// algebra of H_G on localized probe states.
namespace qgd::lab {

using State = Eigen::VectorXcd;
using Field = Eigen::VectorXd;

struct GridSpec {
  int dims = 1;              // 1 or 2
  int points = 256;          // per axis
  double half_extent = 10.0;  // axis covers [-L, L)
};

enum class MetricKind { kFlat, kConformal, kBump };
std::string to_string(MetricKind kind);

/// conformal: g = E / (E - V_t) I with the tapered potential
///            V_t = V exp(-|x|^2 / taper^2), so g is analytic and flat in the
///            collar; near the origin V_t = V (1 - |x|^2/taper^2 + ...).
/// bump:      1D  g = 1 + amplitude exp(-x^2 / width^2)
///            2D  g = I + exp(-|x|^2 / width^2) S
struct MetricSpec {
  MetricKind kind = MetricKind::kFlat;
  std::optional<Potential> potential;
  double energy = 1.0;
  double taper_width = 0.6;
  double bump_amplitude = 0.3;
  double bump_width = 1.0;
  Mat bump_matrix;
  double det_guard = 1e-8;
};

MetricSpec flat_metric();
MetricSpec conformal_metric(const Potential& potential, double energy, double taper_width = 0.6);
/// Default bump for the given dimension (1D: 0.3 exp(-x^2); 2D: width 0.6,
/// S = [[0.3, 0.1], [0.1, 0.2]]).
MetricSpec bump_metric(int dims);

/// Value, gradient and Hessian of the tapered potential of a conformal spec.
PotentialSample tapered_potential(const MetricSpec& metric, const Vec& point);

class Operators {
 public:
  Operators(const MetricSpec& metric, const GridSpec& grid, double mass = 1.0);

  const GridSpec& grid() const { return grid_; }
  const MetricSpec& metric() const { return metric_; }
  int dims() const { return grid_.dims; }
  std::size_t size() const { return size_; }
  double mass() const { return mass_; }
  double spacing() const { return spacing_; }
  double cell_volume() const { return cell_volume_; }

  const Field& coord(int k) const { return coords_[k]; }
  const Field& g(int i, int j) const { return g_[i * dims() + j]; }
  const Field& g_inv(int i, int j) const { return g_inv_[i * dims() + j]; }
  /// d g_ij / dx_n and d g^{ij} / dx_n.
  const Field& dg(int n, int i, int j) const { return dg_[(n * dims() + i) * dims() + j]; }
  const Field& dg_inv(int n, int i, int j) const {
    return dg_inv_[(n * dims() + i) * dims() + j];
  }

  /// Spectral derivative of a real field along an axis.
  Field derivative(const Field& f, int axis) const;

  State p(int k, const State& psi) const;
  State x(int k, const State& psi) const;
  State mul(const Field& f, const State& psi) const { return f.cwiseProduct(psi); }
  State hg(const State& psi) const;

  /// Heisenberg velocities built from the definitions:
  ///   x_k' = i[H_G, x_k],  y^l' = {x_k', g^{kl}} / 2
  State x_dot(int k, const State& psi) const;
  State y_dot(int l, const State& psi) const;

  double norm(const State& psi) const;
  /// Flat index of grid node (i0 along x, i1 along y).
  std::size_t index(int i0, int i1 = 0) const;
  Vec node(std::size_t index) const;

 private:
  State spectral(const State& psi, int axis) const;  // d/dx_axis

  MetricSpec metric_;
  GridSpec grid_;
  double mass_;
  std::size_t size_;
  double spacing_;
  double cell_volume_;
  std::unique_ptr<Fft> fft_;
  std::vector<std::vector<double>> k_;  // per-axis wavenumbers, Nyquist zeroed
  std::vector<Field> coords_;
  std::vector<Field> g_, g_inv_, dg_, dg_inv_;
};

struct Probe {
  Vec center;
  Vec momentum;
  double width = 0.3;
};

struct ProbeSet {
  std::vector<Probe> probes;
  std::vector<State> states;
  double interior_margin = 0.0;
};

/// Normalized Gaussians sqrt-normalized on the grid, centers drawn uniformly
/// in the ball |c| <= center_radius, momenta uniform in [-momentum_scale,
/// momentum_scale] per axis.
ProbeSet make_probes(const Operators& ops, int count, std::uint64_t seed, double center_radius,
                     double width = 0.3, double momentum_scale = 1.0);

/// Mass of a state outside the box shrunk by `margin` from each face.
double exterior_mass(const Operators& ops, const State& psi, double margin);

struct IdentityReport {
  std::string identity;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  bool gated = true;  // diagnostics are reported but never gate
  std::string note;
};

/// Names of the gated identities, in catalog order.
std::vector<std::string> identity_catalog();
/// Diagnostic entries (reported, not gated).
std::vector<std::string> diagnostic_catalog();

/// max over probes of ||(LHS - RHS) psi|| / scale, where scale is the largest
/// ||RHS_c psi|| over the identity's components c (absolute when that is 0).
/// Throws std::invalid_argument for names outside both catalogs.
IdentityReport identity_residual(const Operators& ops, const std::string& identity,
                                 const ProbeSet& probes, double tolerance);

/// Dense matrix of an operator (columns are images of unit vectors).
Eigen::MatrixXcd dense(const Operators& ops, const std::function<State(const State&)>& op,
                       std::size_t cap = 1024);

/// ||M - M^dagger|| / ||M|| for the named observable ("hamiltonian",
/// "x_velocity", "y_velocity", "y_acceleration").
double hermiticity_defect(const Operators& ops, const std::string& observable, int component = 0,
                          std::size_t cap = 1024);

struct ClassicalLimit {
  std::vector<std::size_t> nodes;
  // Per node, flattened (l, i, j) arrays.
  std::vector<std::vector<double>> quantum_coefficient;  // K_lij / 2m^2
  std::vector<std::vector<double>> gamma;                // -Gamma^{pq}_l g_pi g_qj / m^2
  std::vector<Vec> quantum_correction;                   // d_j(d_i d_n g_ln g_ij) / 4m^2
  double max_abs_diff = 0.0;
  double max_rel_diff = 0.0;
};

/// Compares the bilinear coefficient of the momentum-ordered acceleration
/// with the classical connection of the same metric at the given nodes.
ClassicalLimit classical_limit_check(const Operators& ops, const std::vector<std::size_t>& nodes);

/// Random grid nodes with |x| < radius.
std::vector<std::size_t> random_nodes(const Operators& ops, int count, double radius,
                                      std::uint64_t seed);

/// The c-number term d_j(d_i d_n g_ln g_ij) / 4m^2 as a field, component l.
Field quantum_correction_field(const Operators& ops, int l);

/// Unitary evolution under the dense H_G through its eigendecomposition.
/// Throws std::length_error above `cap` grid points.
std::vector<State> hg_small_evolution(const Operators& ops, const State& psi, double dt,
                                      int steps, std::size_t cap = 1024);

/// Exact free-particle Gaussian on the real line (1D), for comparisons.
std::complex<double> free_gaussian(double x, double t, double center, double width, double k0,
                                   double mass);

// Convergence-calibrated identity suite.

struct SuiteCase {
  std::string label;  // e.g. "flat-1d"
  MetricSpec metric;
  GridSpec grid;      // acceptance grid
  int coarse_points = 0;  // refinement reference on the same extent, 0 = none
  int probe_count = 5;
  double probe_width = 0.3;
  double center_radius = 1.0;
  std::uint64_t seed = 7;
  double tolerance = 1e-6;
};

struct SuiteRow {
  std::string label;
  std::string identity;
  int dims = 1;
  int points = 0;
  int coarse_points = 0;
  double residual = 0.0;
  double coarse_residual = 0.0;
  double tolerance = 0.0;
  bool within_tolerance = false;
  // Residual shrank from the coarse grid, or both already sit at the roundoff
  // floor (below 1e-3 of the tolerance).
  bool refined = true;
  bool gated = true;
  bool audited = false;  // reported with its residual, outside the gate
  bool passed = false;   // gated: within tolerance and refined; otherwise true
  std::string note;
};

/// The two acceleration forms that do not hold as written; reported, not gated.
const std::vector<std::string>& audited_identities();

std::vector<SuiteRow> run_identity_suite(const SuiteCase& c, bool include_diagnostics = true);

/// Calibrated flat / conformal-harmonic / bump cases at 1D 256 and 2D 64^2.
std::vector<SuiteCase> standard_suite(std::uint64_t seed = 7);

}  // namespace qgd::lab
