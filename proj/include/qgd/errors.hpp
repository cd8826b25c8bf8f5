#pragma once

#include <stdexcept>
#include <string>

namespace qgd {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The evaluation point lies inside the guard band around E = V, where the
// conformal factor E/(E-V) diverges.
class SeparatrixSingularity : public Error {
 public:
  SeparatrixSingularity(double energy, double potential_value)
      : Error("point inside separatrix guard band: E - V = " +
              std::to_string(energy - potential_value)),
        defect(energy - potential_value) {}
  double defect;
};

class TrajectoryEscape : public Error {
 public:
  TrajectoryEscape(double time, double radius)
      : Error("trajectory escaped at t = " + std::to_string(time) +
              " (|q| = " + std::to_string(radius) + ")"),
        time(time) {}
  double time;
};

class BoundaryBreach : public Error {
 public:
  BoundaryBreach(double time, double collar_mass)
      : Error("wavefunction mass in boundary collar " +
              std::to_string(collar_mass) + " at t = " + std::to_string(time)),
        time(time) {}
  double time;
};

class PacketOutsideGrid : public Error {
 public:
  using Error::Error;
};

class NonInvertibleMetric : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace qgd
