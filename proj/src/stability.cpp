#include "qgd/stability.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "qgd/errors.hpp"
#include "qgd/parallel.hpp"

namespace qgd {

std::string to_string(QTildeConvention convention) {
  return convention == QTildeConvention::kMetricMinusIdentity ? "metric_minus_identity"
                                                              : "inverse_minus_identity";
}

QTildeConvention q_tilde_convention_from_string(const std::string& name) {
  if (name == "metric_minus_identity") return QTildeConvention::kMetricMinusIdentity;
  if (name == "inverse_minus_identity") return QTildeConvention::kInverseMinusIdentity;
  throw std::invalid_argument("unknown q_tilde_convention '" + name +
                              "' (expected metric_minus_identity or inverse_minus_identity)");
}

StabilityTensors stability_tensors(const Potential& potential, double energy, const Vec& point,
                                   const StabilityOptions& options) {
  return stability_tensors(potential.evaluate_all(point), energy, options);
}

StabilityTensors stability_tensors(const PotentialSample& sample, double energy,
                                   const StabilityOptions& options) {
  const MetricBundle b = metric_bundle(sample, energy, options.guard);
  const int n = b.dim();
  const Tensor4 dev = deviation_tensor(b);

  // C(l, i, j, a) = delta_ij c(l, a) for a conformal metric; average the
  // diagonal slots rather than trusting one of them.
  StabilityTensors t;
  t.c_matrix = Mat::Zero(n, n);
  for (int l = 0; l < n; ++l)
    for (int a = 0; a < n; ++a) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += dev(l, i, i, a);
      t.c_matrix(l, a) = s / n;
    }
  t.c_matrix = 0.5 * (t.c_matrix + t.c_matrix.transpose());

  t.phi = b.phi;
  t.on_shell_defect = b.on_shell_defect;
  t.q_factor = options.convention == QTildeConvention::kMetricMinusIdentity ? b.phi - 1.0
                                                                            : 1.0 / b.phi - 1.0;
  t.q_matrix = t.q_factor * t.c_matrix;
  t.v_matrix = t.c_matrix + t.q_matrix;

  Eigen::SelfAdjointEigenSolver<Mat> es(t.c_matrix);
  t.lambda = es.eigenvalues();
  t.eigenvectors = es.eigenvectors();
  t.alpha = Vec(n);
  for (int l = 0; l < n; ++l) {
    const Vec e = t.eigenvectors.col(l);
    t.alpha[l] = e.dot(t.q_matrix * e);
  }
  t.v_eigenvalues = Eigen::SelfAdjointEigenSolver<Mat>(t.v_matrix, Eigen::EigenvaluesOnly).eigenvalues();
  return t;
}

std::string to_string(StabilityClass cls) {
  switch (cls) {
    case StabilityClass::kStable: return "stable";
    case StabilityClass::kUnstableClassicalAndQuantum: return "unstable_classical_and_quantum";
    case StabilityClass::kUnstableQuantumOnly: return "unstable_quantum_only";
    case StabilityClass::kStableQuantumVsClassicalInstability:
      return "stable_quantum_vs_classical_instability";
    case StabilityClass::kSeparatrixBand: return "separatrix_band";
    case StabilityClass::kOutsideShell: return "outside_shell";
  }
  return "unknown";
}

StabilityClass stability_class_from_string(const std::string& name) {
  for (auto c : {StabilityClass::kStable, StabilityClass::kUnstableClassicalAndQuantum,
                 StabilityClass::kUnstableQuantumOnly,
                 StabilityClass::kStableQuantumVsClassicalInstability,
                 StabilityClass::kSeparatrixBand, StabilityClass::kOutsideShell}) {
    if (to_string(c) == name) return c;
  }
  throw std::invalid_argument("unknown stability class '" + name + "'");
}

bool is_unstable(StabilityClass cls) {
  return cls == StabilityClass::kUnstableClassicalAndQuantum ||
         cls == StabilityClass::kUnstableQuantumOnly;
}

std::string to_string(PairRelation relation) {
  switch (relation) {
    case PairRelation::kBothNonnegative: return "both_nonnegative";
    case PairRelation::kQuantumDamped: return "quantum_damped";
    case PairRelation::kClassicalAndQuantum: return "classical_and_quantum";
    case PairRelation::kQuantumOnly: return "quantum_only";
    case PairRelation::kQuantumStabilized: return "quantum_stabilized";
    case PairRelation::kBothNegative: return "both_negative";
  }
  return "unknown";
}

std::string inequality(PairRelation relation) {
  switch (relation) {
    case PairRelation::kBothNonnegative: return "0 <= lambda, 0 <= alpha";
    case PairRelation::kQuantumDamped: return "0 <= -alpha <= lambda";
    case PairRelation::kClassicalAndQuantum: return "0 <= alpha < -lambda";
    case PairRelation::kQuantumOnly: return "0 <= lambda < -alpha";
    case PairRelation::kQuantumStabilized: return "0 < -lambda <= alpha";
    case PairRelation::kBothNegative: return "lambda < 0, alpha < 0";
  }
  return "";
}

namespace {

double snap(double x, double tie) { return std::abs(x) <= tie ? 0.0 : x; }

}  // namespace

PairRelation pair_relation(double lambda, double alpha, double tie) {
  const double l = snap(lambda, tie);
  const double a = snap(alpha, tie);
  if (l >= 0.0 && a >= 0.0) return PairRelation::kBothNonnegative;
  if (l < 0.0 && a < 0.0) return PairRelation::kBothNegative;
  if (l >= 0.0) return -a <= l ? PairRelation::kQuantumDamped : PairRelation::kQuantumOnly;
  return a < -l ? PairRelation::kClassicalAndQuantum : PairRelation::kQuantumStabilized;
}

double tie_epsilon(const StabilityTensors& t, double tie_relative) {
  const double scale = std::max({t.c_matrix.cwiseAbs().maxCoeff(), t.q_matrix.cwiseAbs().maxCoeff(),
                                 t.v_matrix.cwiseAbs().maxCoeff()});
  return tie_relative * scale;
}

namespace {

Classification classify_pairs(const Vec& lambda, const Vec& alpha, double min_v, double tie) {
  Classification out;
  const int n = static_cast<int>(lambda.size());
  if (min_v < -tie) {
    int worst = 0;
    double worst_v = std::numeric_limits<double>::infinity();
    for (int l = 0; l < n; ++l) {
      const double v = snap(lambda[l], tie) + snap(alpha[l], tie);
      if (v < worst_v) {
        worst_v = v;
        worst = l;
      }
    }
    out.pair = worst;
    const PairRelation r = pair_relation(lambda[worst], alpha[worst], tie);
    if (r == PairRelation::kQuantumOnly) {
      out.cls = StabilityClass::kUnstableQuantumOnly;
    } else {
      out.cls = StabilityClass::kUnstableClassicalAndQuantum;
      out.extended = r == PairRelation::kBothNegative;
    }
    return out;
  }
  for (int l = 0; l < n; ++l) {
    if (pair_relation(lambda[l], alpha[l], tie) == PairRelation::kQuantumStabilized) {
      out.cls = StabilityClass::kStableQuantumVsClassicalInstability;
      out.pair = l;
      return out;
    }
  }
  return out;
}

}  // namespace

Classification classify_point(const StabilityTensors& t, double tie_relative) {
  const double tie = tie_epsilon(t, tie_relative);
  return classify_pairs(t.lambda, t.alpha, t.v_eigenvalues.minCoeff(), tie);
}

Classification classify_eigenvalues(const Vec& lambda, const Vec& alpha, double tie_relative) {
  if (lambda.size() != alpha.size() || lambda.size() == 0) {
    throw std::invalid_argument("lambda and alpha must be non-empty and paired");
  }
  const Vec v = lambda + alpha;
  const double scale = std::max({lambda.cwiseAbs().maxCoeff(), alpha.cwiseAbs().maxCoeff(),
                                 v.cwiseAbs().maxCoeff()});
  return classify_pairs(lambda, alpha, v.minCoeff(), tie_relative * scale);
}

Mat projector(const Vec& velocity, bool* unprojected) {
  const int n = static_cast<int>(velocity.size());
  const double v2 = velocity.squaredNorm();
  if (unprojected) *unprojected = v2 == 0.0;
  if (v2 == 0.0) return Mat::Identity(n, n);
  return Mat::Identity(n, n) - velocity * velocity.transpose() / v2;
}

DeviationForce deviation_rhs(const StabilityTensors& t, const Vec& velocity, const Vec& xi) {
  DeviationForce f;
  const Mat p = projector(velocity, &f.unprojected);
  f.value = -velocity.squaredNorm() * (t.v_matrix * (p * xi));
  return f;
}

StabilityClass reclassify(const StabilityCell& cell, double tie_relative) {
  if (cell.cls == StabilityClass::kSeparatrixBand || cell.cls == StabilityClass::kOutsideShell) {
    return cell.cls;
  }
  Vec lambda(2), alpha(2);
  lambda << cell.lambda[0], cell.lambda[1];
  alpha << cell.alpha[0], cell.alpha[1];
  return classify_eigenvalues(lambda, alpha, tie_relative).cls;
}

namespace {

std::vector<double> centered_axis(double lo, double hi, int n) {
  std::vector<double> out(n);
  const double mid = 0.5 * (lo + hi);
  const double h = n > 1 ? (hi - lo) / n : 0.0;
  for (int i = 0; i < n; ++i) out[i] = mid + (i - 0.5 * (n - 1)) * h;
  return out;
}

}  // namespace

StabilityMap stability_map(const Potential& potential, double energy, const PlanarRegion& region,
                           int nx, int ny, const StabilityMapOptions& options) {
  if (nx < 2 || ny < 2) throw std::invalid_argument("stability map needs at least 2 cells per axis");
  if (potential.dim() != 2) throw std::invalid_argument("stability map needs a planar potential");
  if (!(region.x_max > region.x_min) || !(region.y_max > region.y_min)) {
    throw std::invalid_argument("stability map region is empty");
  }
  StabilityMap map;
  map.region = region;
  map.nx = nx;
  map.ny = ny;
  map.energy = energy;
  map.cells.resize(static_cast<size_t>(nx) * ny);
  const std::vector<double> xs = centered_axis(region.x_min, region.x_max, nx);
  const std::vector<double> ys = centered_axis(region.y_min, region.y_max, ny);

  parallel_for(
      map.cells.size(),
      [&](std::size_t begin, std::size_t end) {
        Vec r(2);
        for (std::size_t k = begin; k < end; ++k) {
          StabilityCell& cell = map.cells[k];
          cell.x = xs[k % nx];
          cell.y = ys[k / nx];
          r << cell.x, cell.y;
          const PotentialSample s = potential.evaluate_all(r);
          cell.potential = s.value;
          if (options.mark_outside_shell && energy < s.value) {
            cell.phi = energy / (energy - s.value);
            cell.cls = StabilityClass::kOutsideShell;
            continue;
          }
          try {
            const StabilityTensors t = stability_tensors(s, energy, options.stability);
            const Classification c = classify_point(t, options.stability.tie_relative);
            cell.phi = t.phi;
            for (int l = 0; l < 2; ++l) {
              cell.lambda[l] = t.lambda[l];
              cell.alpha[l] = t.alpha[l];
            }
            cell.cls = c.cls;
            cell.pair = c.pair;
          } catch (const SeparatrixSingularity&) {
            cell.phi = std::numeric_limits<double>::quiet_NaN();
            cell.cls = StabilityClass::kSeparatrixBand;
            cell.on_separatrix_band = true;
          }
        }
      },
      options.workers);

  std::vector<double> field(map.cells.size());
  for (std::size_t k = 0; k < field.size(); ++k) field[k] = map.cells[k].potential;
  map.contour = marching_squares(field, nx, ny, xs, ys, energy);
  return map;
}

std::vector<std::vector<int>> connected_components(const StabilityMap& map, StabilityClass cls) {
  const int nx = map.nx, ny = map.ny;
  std::vector<int> label(map.cells.size(), -1);
  std::vector<std::vector<int>> comps;
  for (int start = 0; start < nx * ny; ++start) {
    if (label[start] >= 0 || map.cells[start].cls != cls) continue;
    std::vector<int> comp;
    std::vector<int> stack = {start};
    label[start] = static_cast<int>(comps.size());
    while (!stack.empty()) {
      const int k = stack.back();
      stack.pop_back();
      comp.push_back(k);
      const int ix = k % nx, iy = k / nx;
      const std::array<std::array<int, 2>, 4> nb = {{{ix - 1, iy}, {ix + 1, iy}, {ix, iy - 1}, {ix, iy + 1}}};
      for (const auto& q : nb) {
        if (q[0] < 0 || q[0] >= nx || q[1] < 0 || q[1] >= ny) continue;
        const int j = q[1] * nx + q[0];
        if (label[j] >= 0 || map.cells[j].cls != cls) continue;
        label[j] = label[start];
        stack.push_back(j);
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

std::vector<ContourSegment> marching_squares(const std::vector<double>& field, int nx, int ny,
                                             const std::vector<double>& xs,
                                             const std::vector<double>& ys, double level) {
  std::vector<ContourSegment> out;
  auto f = [&](int i, int j) { return field[static_cast<size_t>(j) * nx + i] - level; };
  auto lerp = [](double a, double b, double fa, double fb) { return a + (b - a) * fa / (fa - fb); };
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      // corners: 0 (i,j) 1 (i+1,j) 2 (i+1,j+1) 3 (i,j+1)
      const double v[4] = {f(i, j), f(i + 1, j), f(i + 1, j + 1), f(i, j + 1)};
      const double cx[4] = {xs[i], xs[i + 1], xs[i + 1], xs[i]};
      const double cy[4] = {ys[j], ys[j], ys[j + 1], ys[j + 1]};
      std::vector<std::array<double, 2>> pts;
      for (int e = 0; e < 4; ++e) {
        const int a = e, b = (e + 1) % 4;
        if ((v[a] < 0.0) != (v[b] < 0.0)) {
          pts.push_back({lerp(cx[a], cx[b], v[a], v[b]), lerp(cy[a], cy[b], v[a], v[b])});
        }
      }
      if (pts.size() == 2) {
        out.push_back({pts[0][0], pts[0][1], pts[1][0], pts[1][1]});
      } else if (pts.size() == 4) {
        // Saddle cell: resolve with the center value.
        const double center = 0.25 * (v[0] + v[1] + v[2] + v[3]);
        if ((center < 0.0) == (v[0] < 0.0)) {
          out.push_back({pts[0][0], pts[0][1], pts[1][0], pts[1][1]});
          out.push_back({pts[2][0], pts[2][1], pts[3][0], pts[3][1]});
        } else {
          out.push_back({pts[0][0], pts[0][1], pts[3][0], pts[3][1]});
          out.push_back({pts[1][0], pts[1][1], pts[2][0], pts[2][1]});
        }
      }
    }
  }
  return out;
}

double packet_energy(const Potential& potential, const PacketCase& packet, double mass) {
  const int d = potential.dim();
  if (packet.q0.size() != d || packet.p0.size() != d) {
    throw std::invalid_argument("packet dimension does not match the potential");
  }
  if (!(packet.width > 0.0)) throw std::invalid_argument("packet width must be positive");
  // |psi|^2 is normal with standard deviation width / sqrt(2) per axis.
  static const double nodes[5] = {-2.0201828704560856, -0.9585724646138185, 0.0,
                                  0.9585724646138185, 2.0201828704560856};
  static const double weights[5] = {0.019953242059045913, 0.39361932315224116, 0.9453087204829419,
                                    0.39361932315224116, 0.019953242059045913};
  const double norm = std::pow(std::sqrt(M_PI), d);
  double v_mean = 0.0;
  std::vector<int> idx(d, 0);
  const int total = static_cast<int>(std::pow(5, d));
  Vec r(d);
  for (int k = 0; k < total; ++k) {
    int rem = k;
    double w = 1.0;
    for (int a = 0; a < d; ++a) {
      const int i = rem % 5;
      rem /= 5;
      // x = q0 + sqrt(2) * sigma * t with sigma = width / sqrt(2)
      r[a] = packet.q0[a] + packet.width * nodes[i];
      w *= weights[i];
    }
    v_mean += w * potential.value(r);
  }
  v_mean /= norm;
  const double p2 = packet.p0.squaredNorm() + d / (2.0 * packet.width * packet.width);
  return p2 / (2.0 * mass) + v_mean;
}

PacketCaseRow evaluate_packet_case(const Potential& potential, const PacketCase& packet,
                                   const PacketCaseOptions& options) {
  const int d = potential.dim();
  if (d != 2) throw std::invalid_argument("packet cases need a planar potential");
  PacketCaseRow row;
  row.name = packet.name;
  row.energy = packet_energy(potential, packet, options.mass);
  row.shell_energy = options.shell_from_packet
                         ? row.energy
                         : hamiltonian(potential, {packet.q0, packet.p0, 0.0}, options.mass);

  HamiltonOptions ho;
  ho.mass = options.mass;
  ho.escape_radius = options.escape_radius;
  ho.sample_stride = std::max(1, options.sample_stride);
  ClassicalTrajectory path;
  try {
    path = integrate_hamilton(potential, {packet.q0, packet.p0, 0.0}, options.dt,
                              options.duration, ho);
  } catch (const TrajectoryEscape& e) {
    row.escaped = true;
    path = integrate_hamilton(potential, {packet.q0, packet.p0, 0.0}, options.dt,
                              std::max(options.dt, e.time - options.dt), ho);
  }

  const double sigma = packet.width / std::sqrt(2.0);
  std::vector<Vec> offsets = {Vec::Zero(2)};
  for (int ring = 1; ring <= options.footprint_rings; ++ring) {
    const double radius = options.footprint_sigmas * sigma * ring / options.footprint_rings;
    for (int a = 0; a < options.footprint_angles; ++a) {
      const double th = 2.0 * M_PI * a / options.footprint_angles;
      Vec o(2);
      o << radius * std::cos(th), radius * std::sin(th);
      offsets.push_back(o);
    }
  }

  int unstable = 0;
  int tally[6] = {0, 0, 0, 0, 0, 0};
  for (const PhaseState& s : path.samples) {
    const Vec velocity = s.p / options.mass;
    const bool unprojected = velocity.squaredNorm() == 0.0;
    Vec transverse(2);
    transverse << -velocity[1], velocity[0];
    if (!unprojected) transverse.normalize();

    bool have = false;
    double best_v = std::numeric_limits<double>::infinity();
    double best_tie = 0.0, best_l = 0.0, best_a = 0.0;
    for (const Vec& o : offsets) {
      StabilityTensors t;
      try {
        t = stability_tensors(potential, row.shell_energy, s.q + o, options.stability);
      } catch (const SeparatrixSingularity&) {
        continue;
      }
      const double tie = tie_epsilon(t, options.stability.tie_relative);
      double l, a;
      if (unprojected) {
        const Classification c = classify_point(t, options.stability.tie_relative);
        const int k = c.pair >= 0 ? c.pair : 0;
        l = t.lambda[k];
        a = t.alpha[k];
      } else {
        l = transverse.dot(t.c_matrix * transverse);
        a = transverse.dot(t.q_matrix * transverse);
      }
      const double v = snap(l, tie) + snap(a, tie);
      if (v < best_v) {
        best_v = v;
        best_tie = tie;
        best_l = l;
        best_a = a;
        have = true;
      }
    }
    if (!have) continue;
    ++row.samples;
    if (unprojected) ++row.unprojected_samples;
    if (best_v < -best_tie) ++unstable;
    ++tally[static_cast<int>(pair_relation(best_l, best_a, best_tie))];
  }
  if (row.samples == 0) {
    throw std::runtime_error("packet case '" + packet.name + "' has no usable samples");
  }
  int modal = 0;
  for (int k = 0; k < 6; ++k) {
    row.relation_fraction[k] = static_cast<double>(tally[k]) / row.samples;
    if (tally[k] > tally[modal]) modal = k;
  }
  row.relation = static_cast<PairRelation>(modal);
  row.unstable_fraction = static_cast<double>(unstable) / row.samples;
  row.behavior = row.unstable_fraction >= options.chaotic_fraction ? "chaotic" : "regular";
  return row;
}

}  // namespace qgd
