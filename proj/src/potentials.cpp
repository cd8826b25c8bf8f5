#include "qgd/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qgd/errors.hpp"

namespace qgd {

std::string to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::kFree: return "free";
    case PotentialKind::kHarmonic: return "harmonic";
    case PotentialKind::kHenonHeiles: return "henon-heiles";
    case PotentialKind::kFiveWell: return "five-well";
  }
  return "unknown";
}

PotentialKind potential_kind_from_string(const std::string& name) {
  if (name == "free") return PotentialKind::kFree;
  if (name == "harmonic") return PotentialKind::kHarmonic;
  if (name == "henon-heiles") return PotentialKind::kHenonHeiles;
  if (name == "five-well") return PotentialKind::kFiveWell;
  throw ConfigError("unknown potential kind '" + name + "'");
}

std::string to_string(CriticalKind kind) {
  switch (kind) {
    case CriticalKind::kMinimum: return "minimum";
    case CriticalKind::kSaddle: return "saddle";
    case CriticalKind::kMaximum: return "maximum";
  }
  return "unknown";
}

Potential Potential::free(int dim) {
  if (dim < 1) throw std::invalid_argument("potential dimension must be >= 1");
  return Potential(PotentialKind::kFree, dim);
}

Potential Potential::harmonic(double omega, int dim) {
  if (dim < 1) throw std::invalid_argument("potential dimension must be >= 1");
  if (!(omega > 0.0)) throw std::invalid_argument("harmonic omega must be positive");
  Potential p(PotentialKind::kHarmonic, dim);
  p.omega_ = omega;
  return p;
}

Potential Potential::henon_heiles(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("henon-heiles lambda must be positive");
  Potential p(PotentialKind::kHenonHeiles, 2);
  p.lambda_ = lambda;
  return p;
}

Potential Potential::five_well(const FiveWellParams& params) {
  if (!(params.depth > 0.0) || !(params.half_spacing > 0.0) || !(params.center_width > 0.0)) {
    throw std::invalid_argument("five-well requires positive depth, half_spacing and center_width");
  }
  Potential p(PotentialKind::kFiveWell, 2);
  p.five_ = params;
  return p;
}

Potential Potential::from_params(const std::string& kind,
                                 const std::map<std::string, double>& params, int dim) {
  auto take = [&](const char* key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  auto reject_unknown = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : params) {
      (void)value;
      bool ok = std::any_of(allowed.begin(), allowed.end(),
                            [&](const char* a) { return key == a; });
      if (!ok) throw ConfigError("unknown parameter '" + key + "' for potential '" + kind + "'");
    }
  };
  switch (potential_kind_from_string(kind)) {
    case PotentialKind::kFree:
      reject_unknown({});
      return free(dim);
    case PotentialKind::kHarmonic:
      reject_unknown({"omega"});
      return harmonic(take("omega", 1.0), dim);
    case PotentialKind::kHenonHeiles:
      reject_unknown({"lambda"});
      return henon_heiles(take("lambda", 1.0));
    case PotentialKind::kFiveWell: {
      reject_unknown({"A", "a", "B", "w"});
      FiveWellParams fw;
      fw.depth = take("A", fw.depth);
      fw.half_spacing = take("a", fw.half_spacing);
      fw.center = take("B", fw.center);
      fw.center_width = take("w", fw.center_width);
      return five_well(fw);
    }
  }
  throw ConfigError("unhandled potential kind");
}

std::map<std::string, double> Potential::params() const {
  switch (kind_) {
    case PotentialKind::kFree: return {};
    case PotentialKind::kHarmonic: return {{"omega", omega_}};
    case PotentialKind::kHenonHeiles: return {{"lambda", lambda_}};
    case PotentialKind::kFiveWell:
      return {{"A", five_.depth}, {"a", five_.half_spacing}, {"B", five_.center},
              {"w", five_.center_width}};
  }
  return {};
}

double Potential::escape_energy() const {
  if (kind_ == PotentialKind::kHenonHeiles) return 1.0 / (6.0 * lambda_ * lambda_);
  return std::numeric_limits<double>::infinity();
}

Sample2 Potential::evaluate2(double x, double y) const {
  switch (kind_) {
    case PotentialKind::kFree:
      return {0, 0, 0, 0, 0, 0};
    case PotentialKind::kHarmonic: {
      const double w2 = omega_ * omega_;
      return {0.5 * w2 * (x * x + y * y), w2 * x, w2 * y, w2, 0.0, w2};
    }
    case PotentialKind::kHenonHeiles: {
      const double l = lambda_;
      const double value = 0.5 * (x * x + y * y) + l * (x * x * y - y * y * y / 3.0);
      return {value,
              x + 2.0 * l * x * y,
              y + l * (x * x - y * y),
              1.0 + 2.0 * l * y,
              2.0 * l * x,
              1.0 - 2.0 * l * y};
    }
    case PotentialKind::kFiveWell: {
      const double A = five_.depth;
      const double a2 = five_.half_spacing * five_.half_spacing;
      const double B = five_.center;
      const double w = five_.center_width;
      const double u = x * x - a2;
      const double v = y * y - a2;
      const double e = B * std::exp(-(x * x + y * y) / w);
      // d/dx e = -2x/w e,  d2/dx2 e = (4x^2/w^2 - 2/w) e,  d2/dxdy e = 4xy/w^2 e
      return {A * (u * u + v * v) + e,
              4.0 * A * x * u - 2.0 * x / w * e,
              4.0 * A * y * v - 2.0 * y / w * e,
              A * (12.0 * x * x - 4.0 * a2) + (4.0 * x * x / (w * w) - 2.0 / w) * e,
              4.0 * x * y / (w * w) * e,
              A * (12.0 * y * y - 4.0 * a2) + (4.0 * y * y / (w * w) - 2.0 / w) * e};
    }
  }
  return {0, 0, 0, 0, 0, 0};
}

double Potential::value2(double x, double y) const { return evaluate2(x, y).value; }

PotentialSample Potential::evaluate_all(const Vec& point) const {
  if (point.size() != dim_) throw std::invalid_argument("point dimension mismatch");
  PotentialSample s;
  s.gradient = Vec::Zero(dim_);
  s.hessian = Mat::Zero(dim_, dim_);
  if (kind_ == PotentialKind::kFree) return s;
  if (kind_ == PotentialKind::kHarmonic) {
    const double w2 = omega_ * omega_;
    s.value = 0.5 * w2 * point.squaredNorm();
    s.gradient = w2 * point;
    s.hessian = w2 * Mat::Identity(dim_, dim_);
    return s;
  }
  const Sample2 p = evaluate2(point[0], point[1]);
  s.value = p.value;
  s.gradient << p.gx, p.gy;
  s.hessian << p.hxx, p.hxy, p.hxy, p.hyy;
  return s;
}

double Potential::value(const Vec& point) const {
  if (kind_ == PotentialKind::kFree) return 0.0;
  if (kind_ == PotentialKind::kHarmonic) return 0.5 * omega_ * omega_ * point.squaredNorm();
  return value2(point[0], point[1]);
}

namespace {

bool inside(const Box& box, const Vec& p) {
  for (int i = 0; i < p.size(); ++i) {
    if (p[i] < box.lo[i] || p[i] > box.hi[i]) return false;
  }
  return true;
}

CriticalKind classify_hessian(const Mat& hessian) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(hessian);
  const Vec& ev = eig.eigenvalues();
  if (ev.minCoeff() > 0.0) return CriticalKind::kMinimum;
  if (ev.maxCoeff() < 0.0) return CriticalKind::kMaximum;
  return CriticalKind::kSaddle;
}

}  // namespace

CriticalSearch find_critical_points(const Potential& potential, const Box& region,
                                    double tolerance, int seeds_per_axis) {
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const int n = potential.dim();
  if (region.lo.size() != n || region.hi.size() != n) {
    throw std::invalid_argument("search box dimension mismatch");
  }
  CriticalSearch out;

  const int total = static_cast<int>(std::pow(seeds_per_axis, n));
  for (int s = 0; s < total; ++s) {
    int rem = s;
    Vec seed(n);
    for (int d = 0; d < n; ++d) {
      const int i = rem % seeds_per_axis;
      rem /= seeds_per_axis;
      const double t = seeds_per_axis == 1 ? 0.5 : static_cast<double>(i) / (seeds_per_axis - 1);
      seed[d] = region.lo[d] + t * (region.hi[d] - region.lo[d]);
    }

    Vec q = seed;
    bool converged = false;
    std::string reason = "iteration limit";
    for (int it = 0; it < 200; ++it) {
      const PotentialSample ps = potential.evaluate_all(q);
      const double gnorm = ps.gradient.norm();
      if (gnorm < tolerance) {
        converged = true;
        break;
      }
      // Newton step on the gradient; fall back to a gradient step when the
      // Hessian is (nearly) singular.
      Eigen::FullPivLU<Mat> lu(ps.hessian);
      Vec step;
      if (lu.isInvertible() && lu.rcond() > 1e-12) {
        step = -lu.solve(ps.gradient);
      } else {
        step = -ps.gradient;
      }
      const double max_step = 0.25 * (region.hi - region.lo).maxCoeff();
      if (step.norm() > max_step) step *= max_step / step.norm();
      q += step;
      if (!inside(region, q)) {
        reason = "left search region";
        break;
      }
    }
    if (!converged) {
      out.failures.push_back({seed, reason});
      continue;
    }
    const bool duplicate = std::any_of(out.points.begin(), out.points.end(), [&](const auto& cp) {
      return (cp.location - q).norm() < std::max(tolerance, 1e-6);
    });
    if (duplicate) continue;
    const PotentialSample ps = potential.evaluate_all(q);
    out.points.push_back({q, ps.value, classify_hessian(ps.hessian)});
  }
  std::sort(out.points.begin(), out.points.end(),
            [](const CriticalPoint& a, const CriticalPoint& b) {
              if (a.energy != b.energy) return a.energy < b.energy;
              return std::lexicographical_compare(a.location.begin(), a.location.end(),
                                                  b.location.begin(), b.location.end());
            });
  return out;
}

namespace {

// Follows -grad V from `start` until it settles; returns the end point.
Vec descend(const Potential& potential, Vec q) {
  double step = 1e-2;
  double v = potential.value(q);
  for (int it = 0; it < 200000; ++it) {
    const PotentialSample ps = potential.evaluate_all(q);
    const double gnorm = ps.gradient.norm();
    if (gnorm < 1e-10) break;
    Vec trial = q - step * ps.gradient / std::max(1.0, gnorm);
    const double vt = potential.value(trial);
    if (vt < v) {
      q = trial;
      v = vt;
      step = std::min(step * 1.2, 0.1);
    } else {
      step *= 0.5;
      if (step < 1e-14) break;
    }
  }
  return q;
}

}  // namespace

double separatrix_energy(const Potential& potential, const CriticalSearch& search,
                         const Vec& near) {
  const CriticalPoint* target = nullptr;
  for (const auto& cp : search.points) {
    if (cp.kind != CriticalKind::kMinimum) continue;
    if (!target || (cp.location - near).norm() < (target->location - near).norm()) target = &cp;
  }
  if (!target) throw std::invalid_argument("no minimum found");

  double best = std::numeric_limits<double>::infinity();
  for (const auto& cp : search.points) {
    if (cp.kind != CriticalKind::kSaddle || cp.energy >= best) continue;
    Eigen::SelfAdjointEigenSolver<Mat> eig(potential.evaluate_all(cp.location).hessian);
    const Vec down = eig.eigenvectors().col(0);
    for (double sign : {1.0, -1.0}) {
      const Vec end = descend(potential, cp.location + sign * 1e-3 * down);
      if ((end - target->location).norm() < 1e-3) {
        best = cp.energy;
        break;
      }
    }
  }
  return best;
}

}  // namespace qgd
