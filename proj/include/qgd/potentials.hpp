#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qgd {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class PotentialKind { kFree, kHarmonic, kHenonHeiles, kFiveWell };

std::string to_string(PotentialKind kind);
PotentialKind potential_kind_from_string(const std::string& name);

/// Value, gradient and Hessian of V at one point.
struct PotentialSample {
  double value = 0.0;
  Vec gradient;
  Mat hessian;
};

/// Fixed-size 2D sample used by grid sweeps; hessian is (xx, xy, yy).
struct Sample2 {
  double value;
  double gx, gy;
  double hxx, hxy, hyy;
};

struct FiveWellParams {
  double depth = 1.0;         // A
  double half_spacing = 2.0;  // a
  double center = -40.0;      // B
  double center_width = 1.0;  // w
};

/// Analytic potential-model input V(y).
///
///   free          V = 0
///   harmonic      V = omega^2 |y|^2 / 2
///   henon-heiles  V = (x^2 + y^2)/2 + lambda (x^2 y - y^3/3)
///   five-well     V = A[(x^2-a^2)^2 + (y^2-a^2)^2] + B exp(-(x^2+y^2)/w)
///
/// free and harmonic work in any dimension; the other two are planar.
class Potential {
 public:
  static Potential free(int dim = 2);
  static Potential harmonic(double omega = 1.0, int dim = 2);
  static Potential henon_heiles(double lambda = 1.0);
  static Potential five_well(const FiveWellParams& params = {});

  /// Builds from a kind name and named parameters; unknown names throw.
  static Potential from_params(const std::string& kind,
                               const std::map<std::string, double>& params,
                               int dim = 2);

  PotentialKind kind() const { return kind_; }
  int dim() const { return dim_; }
  std::string name() const { return to_string(kind_); }
  std::map<std::string, double> params() const;

  PotentialSample evaluate_all(const Vec& point) const;
  double value(const Vec& point) const;

  /// Planar fast path (dim() must be 2).
  Sample2 evaluate2(double x, double y) const;
  double value2(double x, double y) const;

  /// Escape energy for Henon-Heiles (1/(6 lambda^2)); infinity otherwise.
  double escape_energy() const;

 private:
  Potential(PotentialKind kind, int dim) : kind_(kind), dim_(dim) {}

  PotentialKind kind_;
  int dim_;
  double omega_ = 1.0;
  double lambda_ = 1.0;
  FiveWellParams five_{};
};

enum class CriticalKind { kMinimum, kSaddle, kMaximum };
std::string to_string(CriticalKind kind);

struct CriticalPoint {
  Vec location;
  double energy = 0.0;
  CriticalKind kind = CriticalKind::kMinimum;
};

struct Box {
  Vec lo;
  Vec hi;
};

struct SeedFailure {
  Vec seed;
  std::string reason;
};

struct CriticalSearch {
  std::vector<CriticalPoint> points;
  std::vector<SeedFailure> failures;
};

/// Damped Newton on grad V = 0 from a regular grid of seeds inside the box.
/// Converged points are deduplicated within `tolerance` and classified by the
/// signs of the Hessian eigenvalues. Seeds that leave the box or stall are
/// reported in `failures`.
CriticalSearch find_critical_points(const Potential& potential, const Box& region,
                                    double tolerance, int seeds_per_axis = 21);

/// Lowest saddle energy among saddles adjacent to the minimum nearest to
/// `near` (the energy at which that well first opens). A saddle is adjacent
/// when steepest descent from it, along its unstable direction, ends in the
/// well. Returns infinity when no adjacent saddle was found.
double separatrix_energy(const Potential& potential, const CriticalSearch& search,
                         const Vec& near);

}  // namespace qgd
