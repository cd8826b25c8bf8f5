#pragma once

#include <string>
#include <vector>

#include "qgd/classical.hpp"
#include "qgd/geometry.hpp"
#include "qgd/potentials.hpp"

namespace qgd {

/// Which tensor plays the role of G~ in the quantum part of the deviation
/// matrix: G - I (factor phi - 1, default) or G^{-1} - I (factor 1/phi - 1).
enum class QTildeConvention { kMetricMinusIdentity, kInverseMinusIdentity };
std::string to_string(QTildeConvention convention);
QTildeConvention q_tilde_convention_from_string(const std::string& name);

struct StabilityOptions {
  QTildeConvention convention = QTildeConvention::kMetricMinusIdentity;
  double guard = -1.0;          // |E - V| band, negative = default_guard(E)
  double tie_relative = 1e-10;  // eigenvalues within tie of 0 count as 0
};

/// Deviation matrices at one point of a conformal metric, with delta_ij
/// factored out:
///   c_a^l = 1/2 d_l d_a (-ln(E - V)),  q = g~ c,  v = c + q.
/// lambda / alpha are paired through the eigenvectors of c (columns of
/// `eigenvectors`, ascending lambda).
struct StabilityTensors {
  Mat c_matrix;
  Mat q_matrix;
  Mat v_matrix;
  Vec lambda;
  Vec alpha;
  Mat eigenvectors;
  Vec v_eigenvalues;  // of v_matrix, ascending
  double phi = 1.0;
  double on_shell_defect = 0.0;  // E - V
  double q_factor = 0.0;         // q = q_factor * c

  int dim() const { return static_cast<int>(c_matrix.rows()); }
};

/// Throws SeparatrixSingularity inside the guard band.
StabilityTensors stability_tensors(const Potential& potential, double energy, const Vec& point,
                                   const StabilityOptions& options = {});
/// Same, from a potential sample at the point.
StabilityTensors stability_tensors(const PotentialSample& sample, double energy,
                                   const StabilityOptions& options = {});

enum class StabilityClass {
  kStable,
  kUnstableClassicalAndQuantum,      // 0 <= alpha < -lambda
  kUnstableQuantumOnly,              // 0 <= lambda < -alpha
  kStableQuantumVsClassicalInstability,  // 0 < -lambda <= alpha
  kSeparatrixBand,
  kOutsideShell,
};
std::string to_string(StabilityClass cls);
StabilityClass stability_class_from_string(const std::string& name);
bool is_unstable(StabilityClass cls);

/// Position of one (lambda, alpha) pair relative to the inequalities.
enum class PairRelation {
  kBothNonnegative,        // 0 <= lambda, 0 <= alpha
  kQuantumDamped,          // 0 <= -alpha <= lambda
  kClassicalAndQuantum,    // 0 <= alpha < -lambda
  kQuantumOnly,            // 0 <= lambda < -alpha
  kQuantumStabilized,      // 0 < -lambda <= alpha
  kBothNegative,           // lambda < 0, alpha < 0
};
std::string to_string(PairRelation relation);
/// Inequality text for a relation, e.g. "0 <= -alpha <= lambda".
std::string inequality(PairRelation relation);
PairRelation pair_relation(double lambda, double alpha, double tie = 0.0);

struct Classification {
  StabilityClass cls = StabilityClass::kStable;
  int pair = -1;  // triggering pair, -1 when none
  // The triggering pair has both eigenvalues negative, which the written
  // inequalities do not cover; it is filed with the classical-and-quantum
  // class.
  bool extended = false;
};

/// Unstable iff the smallest eigenvalue of v is below -tie; the class is then
/// taken from the pair with the most negative lambda + alpha. Stable points
/// with a pair 0 < -lambda <= alpha are reported as quantum-stabilized.
Classification classify_point(const StabilityTensors& tensors, double tie_relative = 1e-10);

/// Same rule from paired eigenvalues alone (v eigenvalues = lambda + alpha,
/// exact when the pairs share eigenvectors); tie relative to the largest
/// magnitude among lambda, alpha and their sums.
Classification classify_eigenvalues(const Vec& lambda, const Vec& alpha,
                                    double tie_relative = 1e-10);

double tie_epsilon(const StabilityTensors& tensors, double tie_relative = 1e-10);

struct DeviationForce {
  Vec value;
  bool unprojected = false;  // zero velocity: P replaced by the identity
};

/// -|v|^2 v_matrix P xi with P = I - v v^T / |v|^2.
DeviationForce deviation_rhs(const StabilityTensors& tensors, const Vec& velocity, const Vec& xi);
Mat projector(const Vec& velocity, bool* unprojected = nullptr);

struct PlanarRegion {
  double x_min = -1.0, x_max = 1.0;
  double y_min = -1.0, y_max = 1.0;
};

struct StabilityCell {
  double x = 0.0, y = 0.0;
  double potential = 0.0;
  double phi = 0.0;  // NaN in the guard band
  double lambda[2] = {0.0, 0.0};
  double alpha[2] = {0.0, 0.0};
  StabilityClass cls = StabilityClass::kStable;
  int pair = -1;
  bool on_separatrix_band = false;
};

struct ContourSegment {
  double x0, y0, x1, y1;
};

struct StabilityMapOptions {
  StabilityOptions stability;
  // When true, cells with E < V are filed as outside_shell instead of being
  // classified (the default classifies them: phi < 0 there).
  bool mark_outside_shell = false;
  int workers = 0;  // 0 = worker_count()
};

/// Cells are centered: x_i = mid + (i - (nx - 1)/2) h, so symmetric regions
/// give exactly mirrored coordinates. Row-major, y outer.
struct StabilityMap {
  PlanarRegion region;
  int nx = 0, ny = 0;
  double energy = 0.0;
  std::vector<StabilityCell> cells;
  std::vector<ContourSegment> contour;  // V = E, marching squares on cell centers

  const StabilityCell& at(int ix, int iy) const { return cells[static_cast<size_t>(iy) * nx + ix]; }
};

StabilityMap stability_map(const Potential& potential, double energy, const PlanarRegion& region,
                           int nx, int ny, const StabilityMapOptions& options = {});

/// Re-derives classes from the stored eigenvalues (no tensor recomputation).
StabilityClass reclassify(const StabilityCell& cell, double tie_relative = 1e-10);

/// Connected components (4-neighbour) of cells with the given class.
std::vector<std::vector<int>> connected_components(const StabilityMap& map, StabilityClass cls);

/// V = E segments on a scalar field sampled at cell centers.
std::vector<ContourSegment> marching_squares(const std::vector<double>& field, int nx, int ny,
                                             const std::vector<double>& xs,
                                             const std::vector<double>& ys, double level);

// Table-1-style evaluation of packet cases on a planar potential.

struct PacketCase {
  std::string name;
  Vec q0;
  Vec p0;
  double width = 0.5;  // psi ~ exp(-|r - q0|^2 / 2 width^2)
};

struct PacketCaseOptions {
  StabilityOptions stability;
  double mass = 1.0;
  double dt = 1e-2;
  double duration = 20.0;
  int sample_stride = 10;          // evaluate every k-th integrator step
  double footprint_sigmas = 1.0;   // footprint radius in position std devs
  int footprint_rings = 2;
  int footprint_angles = 8;
  double escape_radius = 50.0;
  double chaotic_fraction = 0.5;   // unstable time fraction that makes a case chaotic
  // Shell energy for the tensors: the classical energy of the reference path
  // (default) or the packet <H>, which adds the zero-point spread.
  bool shell_from_packet = false;
};

struct PacketCaseRow {
  std::string name;
  double energy = 0.0;        // packet <H>
  double shell_energy = 0.0;  // energy used for the tensors
  PairRelation relation = PairRelation::kBothNonnegative;  // most frequent governing pair
  double relation_fraction[6] = {0, 0, 0, 0, 0, 0};       // indexed by PairRelation
  double unstable_fraction = 0.0;  // samples whose governing pair is unstable
  std::string behavior;            // "regular" or "chaotic"
  int samples = 0;
  int unprojected_samples = 0;
  bool escaped = false;
};

/// <H> of a Gaussian packet (5-point Gauss-Hermite per axis for <V>).
double packet_energy(const Potential& potential, const PacketCase& packet, double mass = 1.0);

/// Follows the classical path of the packet mean at the packet energy <H>.
/// At each sample the pair transverse to the velocity (lambda = n.c.n,
/// alpha = n.q.n) is evaluated at every footprint point (center plus rings
/// out to footprint_sigmas position std devs); the point with the smallest
/// lambda + alpha governs that sample. A case is chaotic when the governing
/// pair is unstable for at least chaotic_fraction of the samples. At zero
/// velocity the unprojected worst pair is used and the sample is counted in
/// unprojected_samples.
PacketCaseRow evaluate_packet_case(const Potential& potential, const PacketCase& packet,
                                   const PacketCaseOptions& options = {});

}  // namespace qgd
