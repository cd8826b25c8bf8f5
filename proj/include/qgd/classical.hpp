#pragma once

#include <limits>
#include <vector>

#include "qgd/geometry.hpp"
#include "qgd/potentials.hpp"

namespace qgd {

struct PhaseState {
  Vec q;
  Vec p;  // canonical momentum
  double t = 0.0;
};

struct ClassicalTrajectory {
  std::vector<PhaseState> samples;
  // Max deviation of the conserved functional from its initial value:
  // H for Hamilton runs, H_G (full mode) or m|y'|^2 / 2(E-V) (reduced mode).
  double energy_drift = 0.0;
};

struct HamiltonOptions {
  double mass = 1.0;
  int order = 4;  // 2 = velocity Verlet, 4 = Yoshida composition
  double escape_radius = std::numeric_limits<double>::infinity();
  int sample_stride = 1;  // keep every k-th step (first and last always kept)
};

/// Fixed-step symplectic integration of q' = p/m, p' = -grad V.
/// Throws TrajectoryEscape once |q| exceeds escape_radius.
ClassicalTrajectory integrate_hamilton(const Potential& potential, const PhaseState& state0,
                                       double dt, double total_time,
                                       const HamiltonOptions& options = {});

double hamiltonian(const Potential& potential, const PhaseState& state, double mass = 1.0);

enum class GeodesicMode { kFull, kReduced };

struct GeodesicOptions {
  double mass = 1.0;
  double rtol = 1e-12;
  double atol = 1e-12;
  double guard = -1.0;          // separatrix guard, negative = default
  bool impose_shell = true;     // rescale |p| so that p^2/2m = E - V at t = 0
  double escape_radius = std::numeric_limits<double>::infinity();
};

/// Geodesic flow of the conformal metric built from (potential, E).
///   full:    x_l'' = -Gamma^{mn}_l x_m' x_n',  with x_k' = g_ki p^i / m
///   reduced: y^l'' = -M^l_{mn} y^m' y^n',      with y' = p / m
/// Samples are taken every `dt` (the adaptive Dormand-Prince stepper lands on
/// each sample time); momenta are reported in canonical form.
ClassicalTrajectory integrate_geodesic(const Potential& potential, double energy,
                                       GeodesicMode mode, const PhaseState& state0, double dt,
                                       double total_time, const GeodesicOptions& options = {});

struct DeviationSeries {
  std::vector<double> times;
  std::vector<Vec> xi;
  std::vector<Vec> dxi;
};

/// Integrates xi^l'' = -y^i' y^j' C^l_{ija} xi^a along a frozen trajectory
/// (RK4 over the trajectory's sample spacing, Hermite interpolation between
/// samples).
DeviationSeries classical_deviation(const Potential& potential, double energy,
                                    const ClassicalTrajectory& trajectory, const Vec& xi0,
                                    const Vec& dxi0, double mass = 1.0, double guard = -1.0);

/// Least-squares slope of ln|xi| against t.
double deviation_growth_rate(const DeviationSeries& series);

/// Largest Lyapunov exponent from the tangent map of the symplectic
/// integrator, renormalized every `renormalization_interval` time units.
double lyapunov_estimate(const Potential& potential, const PhaseState& state0, double dt,
                         double total_time, double renormalization_interval,
                         const HamiltonOptions& options = {});

/// Generic explicit Dormand-Prince 5(4) integration of y' = f(t, y) from t0 to
/// t1 with error control; returns y(t1).
template <typename F>
Vec dopri5(F&& f, double t0, double t1, Vec y, double rtol, double atol, double& h_hint);

}  // namespace qgd

#include "qgd/detail/dopri5.hpp"
