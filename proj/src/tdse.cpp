#include "qgd/tdse.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

#include "qgd/errors.hpp"
#include "qgd/fft.hpp"
#include "qgd/geometry.hpp"

namespace qgd {

void validate(const GridSpec& grid) {
  if (grid.nx < 4 || grid.ny < 4) throw std::invalid_argument("grid needs at least 4 points per axis");
  if (grid.nx % 2 || grid.ny % 2) throw std::invalid_argument("grid sizes must be even");
  if (!(grid.x_max > grid.x_min) || !(grid.y_max > grid.y_min)) {
    throw std::invalid_argument("grid extent must be positive");
  }
  if (!(grid.collar_fraction >= 0.0 && grid.collar_fraction < 0.5)) {
    throw std::invalid_argument("collar_fraction must be in [0, 0.5)");
  }
}

GridState coherent_state(const CoherentSpec& spec, const GridSpec& grid) {
  validate(grid);
  if (!(spec.width > 0.0)) throw std::invalid_argument("packet width must be positive");
  const double margin = 6.0 * spec.width / std::sqrt(2.0);
  const double cx = grid.collar_fraction * (grid.x_max - grid.x_min);
  const double cy = grid.collar_fraction * (grid.y_max - grid.y_min);
  if (spec.x0 - margin < grid.x_min + cx || spec.x0 + margin > grid.x_max - cx ||
      spec.y0 - margin < grid.y_min + cy || spec.y0 + margin > grid.y_max - cy) {
    throw PacketOutsideGrid("packet at (" + std::to_string(spec.x0) + ", " + std::to_string(spec.y0) +
                            ") with width " + std::to_string(spec.width) +
                            " does not fit the grid interior with a 6 sigma margin");
  }
  GridState s;
  s.grid = grid;
  s.psi.resize(grid.size());
  const double inv = 1.0 / (2.0 * spec.width * spec.width);
  double sum = 0.0;
  for (int j = 0; j < grid.ny; ++j) {
    const double y = grid.y(j);
    for (int i = 0; i < grid.nx; ++i) {
      const double x = grid.x(i);
      const double r2 = (x - spec.x0) * (x - spec.x0) + (y - spec.y0) * (y - spec.y0);
      const cplx v = std::exp(-r2 * inv) * std::polar(1.0, spec.px0 * x + spec.py0 * y);
      s.psi[static_cast<size_t>(j) * grid.nx + i] = v;
      sum += std::norm(v);
    }
  }
  const double scale = 1.0 / std::sqrt(sum * grid.cell_area());
  for (cplx& v : s.psi) v *= scale;
  return s;
}

double TrajectoryRecord::norm_drift() const {
  double d = 0.0;
  for (double n : norm) d = std::max(d, std::abs(n - norm.front()));
  return d;
}

double TrajectoryRecord::energy_drift() const {
  if (energy.empty()) return 0.0;
  double d = 0.0;
  for (double e : energy) d = std::max(d, std::abs(e - energy.front()));
  const double ref = std::abs(energy.front());
  return ref > 0.0 ? d / ref : d;
}

struct SplitOperator::Impl {
  GridSpec grid;
  PropagateOptions options;
  const kernels::Table* k = nullptr;
  Fft fft;
  std::vector<double> xs, ys, x2, y2, v, zeros;
  std::vector<double> kx, ky, kx2, ky2, kinetic;
  std::vector<double> kx_line, ky_line;
  std::vector<unsigned char> collar;
  double cached_dt = std::numeric_limits<double>::quiet_NaN();
  std::vector<cplx> v_half, v_full, k_phase;
  mutable std::vector<cplx> scratch;

  Impl(const GridSpec& g, const Potential& potential, const PropagateOptions& o)
      : grid(g), options(o), fft({g.ny, g.nx}) {
    validate(grid);
    if (potential.dim() != 2) throw std::invalid_argument("TDSE grids are planar");
    if (!(options.mass > 0.0)) throw std::invalid_argument("mass must be positive");
    k = options.kernels ? options.kernels : &kernels::active();
    const size_t n = grid.size();
    xs.resize(n), ys.resize(n), x2.resize(n), y2.resize(n), v.resize(n), zeros.assign(n, 0.0);
    kx.resize(n), ky.resize(n), kx2.resize(n), ky2.resize(n), kinetic.resize(n);
    collar.assign(n, 0);
    kx_line = wavenumbers(grid.nx, grid.x_max - grid.x_min, false);
    ky_line = wavenumbers(grid.ny, grid.y_max - grid.y_min, false);
    const double cx = grid.collar_fraction * (grid.x_max - grid.x_min);
    const double cy = grid.collar_fraction * (grid.y_max - grid.y_min);
    for (int j = 0; j < grid.ny; ++j) {
      const double y = grid.y(j);
      for (int i = 0; i < grid.nx; ++i) {
        const size_t idx = static_cast<size_t>(j) * grid.nx + i;
        const double x = grid.x(i);
        xs[idx] = x;
        ys[idx] = y;
        x2[idx] = x * x;
        y2[idx] = y * y;
        v[idx] = potential.value2(x, y);
        kx[idx] = kx_line[i];
        ky[idx] = ky_line[j];
        kx2[idx] = kx_line[i] * kx_line[i];
        ky2[idx] = ky_line[j] * ky_line[j];
        kinetic[idx] = (kx2[idx] + ky2[idx]) / (2.0 * options.mass);
        collar[idx] = (x < grid.x_min + cx || x > grid.x_max - cx || y < grid.y_min + cy ||
                       y > grid.y_max - cy)
                          ? 1
                          : 0;
      }
    }
  }

  void prepare(double dt) {
    if (dt == cached_dt) return;
    const size_t n = grid.size();
    v_half.resize(n), v_full.resize(n), k_phase.resize(n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
      v_half[i] = std::polar(1.0, -0.5 * dt * v[i]);
      v_full[i] = std::polar(1.0, -dt * v[i]);
      k_phase[i] = std::polar(inv_n, -dt * kinetic[i]);
    }
    cached_dt = dt;
  }

  Expectations expect(const std::vector<cplx>& psi) const {
    const size_t n = grid.size();
    const double da = grid.cell_area();
    Expectations e;
    const kernels::Moments a = k->moments(psi.data(), xs.data(), ys.data(), v.data(), n);
    const kernels::Moments b = k->moments(psi.data(), x2.data(), y2.data(), zeros.data(), n);
    e.norm = a.s0 * da;
    e.x = a.s1 / a.s0;
    e.y = a.s2 / a.s0;
    e.potential = a.s3 / a.s0;
    e.x2 = b.s1 / a.s0;
    e.y2 = b.s2 / a.s0;
    scratch = psi;
    fft.forward(scratch.data());
    const kernels::Moments c = k->moments(scratch.data(), kx.data(), ky.data(), kinetic.data(), n);
    const kernels::Moments d = k->moments(scratch.data(), kx2.data(), ky2.data(), zeros.data(), n);
    e.px = c.s1 / c.s0;
    e.py = c.s2 / c.s0;
    e.kinetic = c.s3 / c.s0;
    e.px2 = d.s1 / c.s0;
    e.py2 = d.s2 / c.s0;
    e.energy = e.kinetic + e.potential;
    return e;
  }

  double collar_mass(const std::vector<cplx>& psi) const {
    double m = 0.0;
    for (size_t i = 0; i < psi.size(); ++i) {
      if (collar[i]) m += std::norm(psi[i]);
    }
    return m * grid.cell_area();
  }
};

SplitOperator::SplitOperator(const GridSpec& grid, const Potential& potential,
                             const PropagateOptions& options)
    : impl_(std::make_unique<Impl>(grid, potential, options)) {}
SplitOperator::~SplitOperator() = default;
SplitOperator::SplitOperator(SplitOperator&&) noexcept = default;
SplitOperator& SplitOperator::operator=(SplitOperator&&) noexcept = default;

const GridSpec& SplitOperator::grid() const { return impl_->grid; }
const PropagateOptions& SplitOperator::options() const { return impl_->options; }
const std::vector<double>& SplitOperator::potential_values() const { return impl_->v; }

Expectations SplitOperator::expectations(const GridState& state) const {
  return impl_->expect(state.psi);
}

double SplitOperator::collar_mass(const GridState& state) const {
  return impl_->collar_mass(state.psi);
}

void SplitOperator::apply_momentum(const std::vector<cplx>& psi, int axis,
                                   std::vector<cplx>& out) const {
  const Impl& m = *impl_;
  out = psi;
  m.fft.forward(out.data());
  const double inv_n = 1.0 / static_cast<double>(m.grid.size());
  const std::vector<double>& kk = axis == 0 ? m.kx : m.ky;
  // Nyquist mode dropped so the derivative of a real function stays real.
  for (size_t i = 0; i < out.size(); ++i) {
    const int ix = static_cast<int>(i % m.grid.nx);
    const int iy = static_cast<int>(i / m.grid.nx);
    const bool nyq = axis == 0 ? ix == m.grid.nx / 2 : iy == m.grid.ny / 2;
    out[i] *= nyq ? 0.0 : kk[i] * inv_n;
  }
  m.fft.inverse(out.data());
}

namespace {
void push_sample(TrajectoryRecord& r, double t, const Expectations& e) {
  r.t.push_back(t);
  r.x.push_back(e.x);
  r.y.push_back(e.y);
  r.px.push_back(e.px);
  r.py.push_back(e.py);
  r.norm.push_back(e.norm);
  r.energy.push_back(e.energy);
}
}  // namespace

TrajectoryRecord SplitOperator::propagate(GridState& state, double dt, long steps) {
  Impl& m = *impl_;
  if (state.psi.size() != m.grid.size()) throw std::invalid_argument("state does not match the grid");
  TrajectoryRecord rec;
  const int stride = std::max(1, m.options.sample_stride);
  auto check_breach = [&](double t) {
    const double mass = m.collar_mass(state.psi);
    if (mass > m.options.collar_threshold) {
      rec.breached = true;
      rec.breach_time = t;
      rec.breach_mass = mass;
      if (m.options.throw_on_breach) throw BoundaryBreach(t, mass);
      return true;
    }
    return false;
  };
  push_sample(rec, state.time, m.expect(state.psi));
  if (check_breach(state.time) || steps <= 0 || dt == 0.0) return rec;

  m.prepare(dt);
  const size_t n = m.grid.size();
  const double t0 = state.time;
  cplx* psi = state.psi.data();
  bool leading_half_applied = false;
  for (long s = 0; s < steps; ++s) {
    if (!leading_half_applied) m.k->multiply(psi, m.v_half.data(), n);
    m.fft.forward(psi);
    m.k->multiply(psi, m.k_phase.data(), n);
    m.fft.inverse(psi);
    const bool sample = (s + 1) % stride == 0 || s + 1 == steps;
    if (sample) {
      m.k->multiply(psi, m.v_half.data(), n);
      leading_half_applied = false;
      state.time = t0 + static_cast<double>(s + 1) * dt;
      push_sample(rec, state.time, m.expect(state.psi));
      if (check_breach(state.time)) break;
    } else {
      // Trailing half step of this step fused with the leading half of the next.
      m.k->multiply(psi, m.v_full.data(), n);
      leading_half_applied = true;
    }
  }
  return rec;
}

TrajectoryRecord propagate(GridState& state, const Potential& potential, double dt, long steps,
                           const PropagateOptions& options) {
  SplitOperator op(state.grid, potential, options);
  return op.propagate(state, dt, steps);
}

Expectations expectations(const GridState& state, const Potential& potential, double mass) {
  PropagateOptions o;
  o.mass = mass;
  SplitOperator op(state.grid, potential, o);
  return op.expectations(state);
}

namespace {

// C1 step: 0 below guard, 1 above 2 guard.
double shell_window(double defect, double guard) {
  const double a = std::abs(defect);
  if (a <= guard) return 0.0;
  if (a >= 2.0 * guard) return 1.0;
  const double s = (a - guard) / guard;
  return s * s * (3.0 - 2.0 * s);
}

struct Sandwich {
  SplitOperator op;
  std::vector<cplx> p[2];
  double norm = 0.0;
  Expectations e;
};

Sandwich momentum_images(const GridState& state, const Potential& potential, double mass) {
  PropagateOptions o;
  o.mass = mass;
  Sandwich s{SplitOperator(state.grid, potential, o), {}, 0.0, {}};
  s.e = s.op.expectations(state);
  s.norm = s.e.norm;
  for (int a = 0; a < 2; ++a) s.op.apply_momentum(state.psi, a, s.p[a]);
  return s;
}

}  // namespace

EhrenfestResult ehrenfest_residual(const GridState& state, const Potential& potential,
                                   const ShellWindowOptions& options) {
  const double mass = options.mass;
  Sandwich s = momentum_images(state, potential, mass);
  const GridSpec& g = state.grid;
  EhrenfestResult r;
  r.energy = std::isnan(options.energy) ? s.e.energy : options.energy;
  const double guard = options.guard_relative * std::abs(r.energy);
  const size_t n = g.size();
  std::vector<double> fx(n), fy(n), cut(n);
  double gx = 0.0, gy = 0.0, total = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const size_t idx = static_cast<size_t>(j) * g.nx + i;
      const Sample2 v = potential.evaluate2(g.x(i), g.y(j));
      const double defect = r.energy - v.value;
      const double w = shell_window(defect, guard);
      fx[idx] = w > 0.0 ? w * v.gx / defect : 0.0;
      fy[idx] = w > 0.0 ? w * v.gy / defect : 0.0;
      cut[idx] = 1.0 - w;
      const double rho = std::norm(state.psi[idx]);
      gx += rho * v.gx;
      gy += rho * v.gy;
      total += rho;
    }
  }
  const kernels::Table& k = kernels::active();
  double ax = 0.0, ay = 0.0;
  for (int a = 0; a < 2; ++a) {
    const kernels::Moments m = k.moments(s.p[a].data(), fx.data(), fy.data(), cut.data(), n);
    ax += m.s1;
    ay += m.s2;
  }
  const kernels::Moments mc = k.moments(state.psi.data(), cut.data(), cut.data(), cut.data(), n);
  r.discarded_mass = mc.s1 / mc.s0;
  r.acceleration = Vec(2);
  r.acceleration << -ax / (2.0 * mass * mass * total), -ay / (2.0 * mass * mass * total);
  r.mean_force = Vec(2);
  r.mean_force << -gx / (total * mass), -gy / (total * mass);
  r.residual = r.acceleration - r.mean_force;
  return r;
}

namespace {

// K(l, i, j, a) = g^{am}(d_m g^{ln} d_n g_ij + g^{ln} d_m d_n g_ij) = 2 g^{am} C(l, i, j, m).
Tensor4 deviation_bracket(const MetricBundle& b) {
  const Tensor4 c = deviation_tensor(b);
  const int d = b.dim();
  Tensor4 k(d);
  for (int l = 0; l < d; ++l)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int a = 0; a < d; ++a) {
          double s = 0.0;
          for (int m = 0; m < d; ++m) s += b.g_inv(a, m) * c(l, i, j, m);
          k(l, i, j, a) = 2.0 * s;
        }
  return k;
}

}  // namespace

DeviationExpectation deviation_expectation(const GridState& state, const Potential& potential,
                                           double energy, const ShellWindowOptions& options) {
  const double mass = options.mass;
  Sandwich s = momentum_images(state, potential, mass);
  const GridSpec& g = state.grid;
  const double guard = options.guard_relative * std::abs(energy);
  const double da = g.cell_area();

  double peak = 0.0;
  for (int a = 0; a < 2; ++a)
    for (const cplx& v : s.p[a]) peak = std::max(peak, std::norm(v));
  const double negligible = 1e-30 * peak;

  cplx acc[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  cplx pp[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  double cut_mass = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const size_t idx = static_cast<size_t>(j) * g.nx + i;
      const cplx p0 = s.p[0][idx], p1 = s.p[1][idx];
      const cplx pv[2] = {p0, p1};
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) pp[a][b] += std::conj(pv[a]) * pv[b];
      if (std::max(std::norm(p0), std::norm(p1)) <= negligible) continue;
      Vec r(2);
      r << g.x(i), g.y(j);
      const PotentialSample ps = potential.evaluate_all(r);
      const double defect = energy - ps.value;
      const double w = shell_window(defect, guard);
      cut_mass += (1.0 - w) * std::norm(state.psi[idx]);
      if (w == 0.0) continue;
      const Tensor4 k = deviation_bracket(metric_bundle(ps, energy, 0.0));
      for (int l = 0; l < 2; ++l)
        for (int a = 0; a < 2; ++a) {
          cplx sum = 0.0;
          for (int ii = 0; ii < 2; ++ii)
            for (int jj = 0; jj < 2; ++jj) sum += std::conj(pv[ii]) * k(l, ii, jj, a) * pv[jj];
          acc[l][a] += w * sum;
        }
    }
  }
  DeviationExpectation out;
  out.matrix = Mat(2, 2);
  out.momentum_second_moment = Mat(2, 2);
  const double scale = -da / (2.0 * mass * mass * s.norm);
  for (int l = 0; l < 2; ++l)
    for (int a = 0; a < 2; ++a) {
      out.matrix(l, a) = scale * acc[l][a].real();
      out.imaginary = std::max(out.imaginary, std::abs(scale * acc[l][a].imag()));
      out.momentum_second_moment(l, a) = (pp[l][a] * da / s.norm).real();
    }
  out.discarded_mass = cut_mass * da / s.norm;
  out.mean_position = Vec(2);
  out.mean_position << s.e.x, s.e.y;
  return out;
}

Mat pointwise_deviation(const Potential& potential, double energy, const Vec& point,
                        const Mat& momentum_second_moment, double mass) {
  const Tensor4 k = deviation_bracket(metric_bundle(potential, energy, point));
  const int d = potential.dim();
  Mat m = Mat::Zero(d, d);
  for (int l = 0; l < d; ++l)
    for (int a = 0; a < d; ++a)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(l, a) += momentum_second_moment(i, j) * k(l, i, j, a);
  return -m / (2.0 * mass * mass);
}

void fit_growth(TwinResult& result, double system_size) {
  result.growth_rate = 0.0;
  result.fit_points = 0;
  const auto& t = result.t;
  const auto& d = result.distance;
  size_t first = 0;
  while (first < d.size() && !(t[first] > t.front() && d[first] > 0.0)) ++first;
  if (first >= d.size()) return;
  const double lower = 10.0 * d[first];
  const double upper = 0.1 * system_size;
  size_t begin = first;
  while (begin < d.size() && d[begin] < lower) ++begin;
  if (begin >= d.size()) begin = first;
  size_t end = begin;
  while (end < d.size() && d[end] < upper) ++end;
  if (end < d.size()) ++end;  // include the crossing sample
  double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
  int count = 0;
  for (size_t i = begin; i < end; ++i) {
    if (!(d[i] > 0.0)) continue;
    const double l = std::log(d[i]);
    st += t[i];
    sl += l;
    stt += t[i] * t[i];
    stl += t[i] * l;
    ++count;
  }
  result.fit_points = count;
  if (count < 3) return;
  result.fit_t0 = t[begin];
  result.fit_t1 = t[end - 1];
  const double den = count * stt - st * st;
  if (den > 0.0) result.growth_rate = (count * stl - st * sl) / den;
}

TwinResult twin_divergence(const Potential& potential, const GridSpec& grid, const CoherentSpec& spec,
                           const Vec& delta_p, double dt, double duration,
                           const TwinOptions& options) {
  if (delta_p.size() != 2) throw std::invalid_argument("delta_p must be planar");
  if (!(dt > 0.0) || !(duration >= 0.0)) throw std::invalid_argument("dt must be positive");
  CoherentSpec kicked = spec;
  kicked.px0 += delta_p[0];
  kicked.py0 += delta_p[1];
  GridState a = coherent_state(spec, grid);
  GridState b = coherent_state(kicked, grid);
  const long steps = std::lround(duration / dt);

  TwinResult r;
  auto run = [&](GridState& s, TrajectoryRecord& rec) {
    SplitOperator op(grid, potential, options.propagate);
    rec = op.propagate(s, dt, steps);
  };
  if (options.concurrent) {
    std::exception_ptr err;
    std::thread th([&] {
      try {
        run(b, r.second);
      } catch (...) {
        err = std::current_exception();
      }
    });
    run(a, r.first);
    th.join();
    if (err) std::rethrow_exception(err);
  } else {
    run(a, r.first);
    run(b, r.second);
  }
  r.breached = r.first.breached || r.second.breached;
  const size_t n = std::min(r.first.size(), r.second.size());
  r.t.assign(r.first.t.begin(), r.first.t.begin() + static_cast<long>(n));
  r.distance.resize(n);
  for (size_t i = 0; i < n; ++i) {
    r.distance[i] = std::hypot(r.first.x[i] - r.second.x[i], r.first.y[i] - r.second.y[i]);
  }
  const double size = options.system_size > 0.0
                          ? options.system_size
                          : std::min(grid.x_max - grid.x_min, grid.y_max - grid.y_min);
  fit_growth(r, size);
  return r;
}

}  // namespace qgd
