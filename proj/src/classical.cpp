#include "qgd/classical.hpp"

#include <cmath>
#include <stdexcept>

#include "qgd/errors.hpp"

namespace qgd {

namespace {

int step_count(double dt, double total_time) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(total_time >= 0.0)) throw std::invalid_argument("total time must be non-negative");
  return static_cast<int>(std::llround(total_time / dt));
}

// Substep weights of the symmetric composition; each entry is one velocity
// Verlet kick-drift-kick with step w*dt.
std::vector<double> composition_weights(int order) {
  if (order == 2) return {1.0};
  if (order == 4) {
    const double c = std::cbrt(2.0);
    const double w1 = 1.0 / (2.0 - c);
    return {w1, -c * w1, w1};
  }
  throw std::invalid_argument("integrator order must be 2 or 4");
}

}  // namespace

double hamiltonian(const Potential& potential, const PhaseState& state, double mass) {
  return 0.5 * state.p.squaredNorm() / mass + potential.value(state.q);
}

ClassicalTrajectory integrate_hamilton(const Potential& potential, const PhaseState& state0,
                                       double dt, double total_time,
                                       const HamiltonOptions& options) {
  const int steps = step_count(dt, total_time);
  const auto weights = composition_weights(options.order);
  const double m = options.mass;
  const int stride = std::max(1, options.sample_stride);

  ClassicalTrajectory out;
  Vec q = state0.q;
  Vec p = state0.p;
  Vec force = -potential.evaluate_all(q).gradient;
  const double e0 = hamiltonian(potential, state0, m);
  out.samples.push_back(state0);

  for (int s = 1; s <= steps; ++s) {
    for (double w : weights) {
      const double h = w * dt;
      p += 0.5 * h * force;
      q += h / m * p;
      force = -potential.evaluate_all(q).gradient;
      p += 0.5 * h * force;
    }
    const double t = state0.t + s * dt;
    const double r = q.norm();
    if (r > options.escape_radius) throw TrajectoryEscape(t, r);
    const double e = 0.5 * p.squaredNorm() / m + potential.value(q);
    out.energy_drift = std::max(out.energy_drift, std::abs(e - e0));
    if (s % stride == 0 || s == steps) out.samples.push_back({q, p, t});
  }
  return out;
}

ClassicalTrajectory integrate_geodesic(const Potential& potential, double energy,
                                       GeodesicMode mode, const PhaseState& state0, double dt,
                                       double total_time, const GeodesicOptions& options) {
  const int steps = step_count(dt, total_time);
  const int n = potential.dim();
  const double m = options.mass;

  Vec p0 = state0.p;
  if (options.impose_shell) {
    const double kinetic = energy - potential.value(state0.q);
    if (kinetic < 0.0) throw std::invalid_argument("initial point lies outside the energy shell");
    const double pn = p0.norm();
    if (pn == 0.0) {
      if (kinetic > 0.0) throw std::invalid_argument("cannot put a zero momentum on shell");
    } else {
      p0 *= std::sqrt(2.0 * m * kinetic) / pn;
    }
  }

  // State vector: position then velocity (x' for full mode, y' for reduced).
  auto rhs = [&](double, const Vec& z) {
    const Vec pos = z.head(n);
    const Vec vel = z.tail(n);
    const MetricBundle b = metric_bundle(potential, energy, pos, options.guard);
    const ConnectionForms cf = christoffel(b);
    const Tensor3& conn = mode == GeodesicMode::kFull ? cf.gamma : cf.m_conn;
    Vec dz(2 * n);
    dz.head(n) = vel;
    for (int l = 0; l < n; ++l) {
      double a = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a -= conn(l, i, j) * vel[i] * vel[j];
      dz[n + l] = a;
    }
    return dz;
  };

  auto to_velocity = [&](const Vec& q, const Vec& p) -> Vec {
    if (mode == GeodesicMode::kReduced) return p / m;
    return metric_bundle(potential, energy, q, options.guard).phi * p / m;
  };
  auto to_momentum = [&](const Vec& q, const Vec& v) -> Vec {
    if (mode == GeodesicMode::kReduced) return m * v;
    return m * v / metric_bundle(potential, energy, q, options.guard).phi;
  };
  auto invariant = [&](const Vec& q, const Vec& v) {
    const MetricBundle b = metric_bundle(potential, energy, q, options.guard);
    if (mode == GeodesicMode::kFull) return 0.5 * m * v.squaredNorm() / b.phi;
    return 0.5 * m * v.squaredNorm() / b.on_shell_defect;
  };

  Vec z(2 * n);
  z.head(n) = state0.q;
  z.tail(n) = to_velocity(state0.q, p0);
  const double inv0 = invariant(z.head(n), z.tail(n));

  ClassicalTrajectory out;
  out.samples.push_back({state0.q, p0, state0.t});
  double h_hint = dt;
  for (int s = 1; s <= steps; ++s) {
    const double ta = state0.t + (s - 1) * dt;
    const double tb = state0.t + s * dt;
    z = dopri5(rhs, ta, tb, z, options.rtol, options.atol, h_hint);
    const Vec q = z.head(n);
    const Vec v = z.tail(n);
    if (q.norm() > options.escape_radius) throw TrajectoryEscape(tb, q.norm());
    out.energy_drift = std::max(out.energy_drift, std::abs(invariant(q, v) - inv0));
    out.samples.push_back({q, to_momentum(q, v), tb});
  }
  return out;
}

DeviationSeries classical_deviation(const Potential& potential, double energy,
                                    const ClassicalTrajectory& trajectory, const Vec& xi0,
                                    const Vec& dxi0, double mass, double guard) {
  const int n = potential.dim();
  const auto& s = trajectory.samples;
  if (s.empty()) throw std::invalid_argument("empty trajectory");

  // K(l, a) = y^i' y^j' C^l_{ija} at a phase point.
  auto coupling = [&](const Vec& q, const Vec& p) {
    const MetricBundle b = metric_bundle(potential, energy, q, guard);
    const Tensor4 c = deviation_tensor(b);
    const Vec v = p / mass;
    Mat k = Mat::Zero(n, n);
    for (int l = 0; l < n; ++l)
      for (int a = 0; a < n; ++a)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) k(l, a) += v[i] * v[j] * c(l, i, j, a);
    return k;
  };

  DeviationSeries out;
  Vec xi = xi0;
  Vec dxi = dxi0;
  out.times.push_back(s.front().t);
  out.xi.push_back(xi);
  out.dxi.push_back(dxi);

  Mat k_left = coupling(s.front().q, s.front().p);
  for (size_t i = 0; i + 1 < s.size(); ++i) {
    const PhaseState& a = s[i];
    const PhaseState& b = s[i + 1];
    const double h = b.t - a.t;
    // Cubic Hermite midpoint of (q, p) using q' = p/m and p' = -grad V.
    const Vec fa = -potential.evaluate_all(a.q).gradient;
    const Vec fb = -potential.evaluate_all(b.q).gradient;
    const Vec q_mid = 0.5 * (a.q + b.q) + h / 8.0 * (a.p - b.p) / mass;
    const Vec p_mid = 0.5 * (a.p + b.p) + h / 8.0 * (fa - fb);
    const Mat k_mid = coupling(q_mid, p_mid);
    const Mat k_right = coupling(b.q, b.p);

    // RK4 on (xi, xi') with xi'' = -K xi.
    const Vec x1 = xi, v1 = dxi;
    const Vec a1 = -k_left * x1;
    const Vec x2 = xi + 0.5 * h * v1, v2 = dxi + 0.5 * h * a1;
    const Vec a2 = -k_mid * x2;
    const Vec x3 = xi + 0.5 * h * v2, v3 = dxi + 0.5 * h * a2;
    const Vec a3 = -k_mid * x3;
    const Vec x4 = xi + h * v3, v4 = dxi + h * a3;
    const Vec a4 = -k_right * x4;
    xi += h / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4);
    dxi += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);

    out.times.push_back(b.t);
    out.xi.push_back(xi);
    out.dxi.push_back(dxi);
    k_left = k_right;
  }
  return out;
}

double deviation_growth_rate(const DeviationSeries& series) {
  double st = 0, sl = 0, stt = 0, stl = 0;
  int count = 0;
  for (size_t i = 0; i < series.times.size(); ++i) {
    const double norm = series.xi[i].norm();
    if (!(norm > 0.0)) continue;
    const double t = series.times[i];
    const double l = std::log(norm);
    st += t;
    sl += l;
    stt += t * t;
    stl += t * l;
    ++count;
  }
  if (count < 2) return 0.0;
  const double denom = count * stt - st * st;
  return denom == 0.0 ? 0.0 : (count * stl - st * sl) / denom;
}

double lyapunov_estimate(const Potential& potential, const PhaseState& state0, double dt,
                         double total_time, double renormalization_interval,
                         const HamiltonOptions& options) {
  const int steps = step_count(dt, total_time);
  if (steps == 0) return 0.0;
  const int every = std::max(1, static_cast<int>(std::llround(renormalization_interval / dt)));
  const auto weights = composition_weights(options.order);
  const double m = options.mass;
  const int n = potential.dim();

  Vec q = state0.q;
  Vec p = state0.p;
  Vec dq = Vec::Ones(n) / std::sqrt(static_cast<double>(n));
  Vec dp = Vec::Zero(n);
  PotentialSample ps = potential.evaluate_all(q);
  double log_sum = 0.0;

  auto renormalize = [&]() {
    const double norm = std::sqrt(dq.squaredNorm() + dp.squaredNorm());
    log_sum += std::log(norm);
    dq /= norm;
    dp /= norm;
  };

  for (int s = 1; s <= steps; ++s) {
    for (double w : weights) {
      const double h = w * dt;
      p -= 0.5 * h * ps.gradient;
      dp -= 0.5 * h * ps.hessian * dq;
      q += h / m * p;
      dq += h / m * dp;
      ps = potential.evaluate_all(q);
      p -= 0.5 * h * ps.gradient;
      dp -= 0.5 * h * ps.hessian * dq;
    }
    const double r = q.norm();
    if (r > options.escape_radius) throw TrajectoryEscape(state0.t + s * dt, r);
    if (s % every == 0 || s == steps) renormalize();
  }
  return log_sum / (steps * dt);
}

}  // namespace qgd
