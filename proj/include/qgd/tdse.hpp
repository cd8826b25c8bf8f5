#pragma once

#include <complex>
#include <limits>
#include <memory>
#include <vector>

#include "qgd/kernels.hpp"
#include "qgd/potentials.hpp"

namespace qgd {

using cplx = std::complex<double>;

/// Periodic rectangular grid: x_i = x_min + i dx with dx = (x_max - x_min)/nx.
struct GridSpec {
  int nx = 256, ny = 256;
  double x_min = -8.0, x_max = 8.0;
  double y_min = -8.0, y_max = 8.0;
  // Boundary collar: points within this fraction of the extent from an edge.
  double collar_fraction = 0.05;

  double dx() const { return (x_max - x_min) / nx; }
  double dy() const { return (y_max - y_min) / ny; }
  double x(int i) const { return x_min + i * dx(); }
  double y(int j) const { return y_min + j * dy(); }
  double cell_area() const { return dx() * dy(); }
  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
};

void validate(const GridSpec& grid);

/// Row-major amplitudes, y outer: psi[j * nx + i].
struct GridState {
  GridSpec grid;
  std::vector<cplx> psi;
  double time = 0.0;
};

struct CoherentSpec {
  double x0 = 0.0, y0 = 0.0;
  double px0 = 0.0, py0 = 0.0;
  double width = 1.0;
};

/// psi ~ exp(-|r - r0|^2 / 2 width^2 + i p0.r), normalized on the grid.
/// Throws PacketOutsideGrid unless r0 +- 6 position std devs stays clear of
/// the boundary collar.
GridState coherent_state(const CoherentSpec& spec, const GridSpec& grid);

struct Expectations {
  double norm = 0.0;
  double x = 0.0, y = 0.0;
  double px = 0.0, py = 0.0;
  double x2 = 0.0, y2 = 0.0;    // <x^2>, <y^2>
  double px2 = 0.0, py2 = 0.0;  // <px^2>, <py^2>
  double kinetic = 0.0;
  double potential = 0.0;
  double energy = 0.0;
};

struct TrajectoryRecord {
  std::vector<double> t, x, y, px, py, norm, energy;
  bool breached = false;
  double breach_time = 0.0;
  double breach_mass = 0.0;

  std::size_t size() const { return t.size(); }
  double norm_drift() const;
  double energy_drift() const;  // relative to |E(0)|, absolute when E(0) = 0
};

struct PropagateOptions {
  double mass = 1.0;
  int sample_stride = 10;
  double collar_threshold = 1e-8;
  bool throw_on_breach = false;  // otherwise the record is truncated and flagged
  const kernels::Table* kernels = nullptr;  // nullptr = kernels::active()
};

/// Strang split-operator stepper for H = p^2/2m + V on one grid. Holds the
/// FFT plan, the potential samples and the phase tables.
class SplitOperator {
 public:
  SplitOperator(const GridSpec& grid, const Potential& potential, const PropagateOptions& options = {});
  ~SplitOperator();
  SplitOperator(SplitOperator&&) noexcept;
  SplitOperator& operator=(SplitOperator&&) noexcept;

  /// Evolves `state` in place by `steps` steps of size dt, sampling at t0 and
  /// every sample_stride steps (and at the end). A collar breach stops the run
  /// at the sample where it is seen.
  TrajectoryRecord propagate(GridState& state, double dt, long steps);

  Expectations expectations(const GridState& state) const;
  double collar_mass(const GridState& state) const;

  /// psi -> (-i d/dx_axis) psi, spectrally.
  void apply_momentum(const std::vector<cplx>& psi, int axis, std::vector<cplx>& out) const;

  const GridSpec& grid() const;
  const PropagateOptions& options() const;
  const std::vector<double>& potential_values() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot wrapper around SplitOperator.
TrajectoryRecord propagate(GridState& state, const Potential& potential, double dt, long steps,
                           const PropagateOptions& options = {});
Expectations expectations(const GridState& state, const Potential& potential, double mass = 1.0);

struct ShellWindowOptions {
  double energy = std::numeric_limits<double>::quiet_NaN();  // NaN = <H>
  double guard_relative = 1e-2;  // window edge at |E - V| = guard_relative |E|
  double mass = 1.0;
};

struct EhrenfestResult {
  Vec residual;      // <y''> + <grad V>/m
  Vec acceleration;  // <y''> from -(1/2m^2) p_i [dV/(E-V)] p_i
  Vec mean_force;    // -<grad V>/m
  double energy = 0.0;
  double discarded_mass = 0.0;  // probability where the window is below 1
};

/// Multiplication functions with 1/(E - V) are multiplied by a C1 window that
/// vanishes for |E - V| <= guard and is 1 for |E - V| >= 2 guard.
EhrenfestResult ehrenfest_residual(const GridState& state, const Potential& potential,
                                   const ShellWindowOptions& options = {});

struct DeviationExpectation {
  Mat matrix;              // m(l, a): xi''^l = m(l, a) xi^a
  double imaginary = 0.0;  // largest |Im| of the sandwiched entries
  double discarded_mass = 0.0;
  Mat momentum_second_moment;  // <p_i p_j>
  Vec mean_position;
};

/// < -(1/2) y'^i g^{am}(d_m g^{ln} d_n g_ij + g^{ln} d_m d_n g_ij) y'^j > with
/// y' = p/m applied spectrally on both sides, for the conformal metric of V
/// at energy E.
DeviationExpectation deviation_expectation(const GridState& state, const Potential& potential,
                                           double energy, const ShellWindowOptions& options = {});

/// Same contraction with the bracket frozen at `point` and <p_i p_j> given.
Mat pointwise_deviation(const Potential& potential, double energy, const Vec& point,
                        const Mat& momentum_second_moment, double mass = 1.0);

struct TwinOptions {
  PropagateOptions propagate;
  double system_size = 0.0;  // 0 = smaller grid extent
  bool concurrent = true;
};

struct TwinResult {
  TrajectoryRecord first, second;
  std::vector<double> t, distance;
  double growth_rate = 0.0;
  double fit_t0 = 0.0, fit_t1 = 0.0;
  int fit_points = 0;
  bool breached = false;
};

/// Twin runs from spec and from spec with p0 + delta_p. growth_rate is the
/// least-squares slope of ln D from the first sample with D >= 10 D(0+) to
/// the first with D >= 10% of the system size (or the end of the run).
TwinResult twin_divergence(const Potential& potential, const GridSpec& grid, const CoherentSpec& spec,
                           const Vec& delta_p, double dt, double duration,
                           const TwinOptions& options = {});

/// Slope fit used by twin_divergence, exposed for tests.
void fit_growth(TwinResult& result, double system_size);

}  // namespace qgd
