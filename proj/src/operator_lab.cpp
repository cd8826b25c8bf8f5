#include "qgd/operator_lab.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "qgd/errors.hpp"

namespace qgd::lab {

namespace {
const std::complex<double> kI(0.0, 1.0);
}  // namespace

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::kFlat: return "flat";
    case MetricKind::kConformal: return "conformal";
    case MetricKind::kBump: return "bump";
  }
  return "unknown";
}

MetricSpec flat_metric() { return {}; }

MetricSpec conformal_metric(const Potential& potential, double energy, double taper_width) {
  if (!(taper_width > 0.0)) throw std::invalid_argument("taper width must be positive");
  MetricSpec m;
  m.kind = MetricKind::kConformal;
  m.potential = potential;
  m.energy = energy;
  m.taper_width = taper_width;
  return m;
}

MetricSpec bump_metric(int dims) {
  MetricSpec m;
  m.kind = MetricKind::kBump;
  if (dims == 1) {
    m.bump_amplitude = 0.3;
    m.bump_width = 1.0;
    m.bump_matrix = Mat::Constant(1, 1, 0.3);
  } else {
    m.bump_width = 0.6;
    m.bump_matrix = Mat(2, 2);
    m.bump_matrix << 0.3, 0.1, 0.1, 0.2;
  }
  return m;
}

PotentialSample tapered_potential(const MetricSpec& metric, const Vec& point) {
  if (!metric.potential) throw std::invalid_argument("conformal metric needs a potential");
  const PotentialSample v = metric.potential->evaluate_all(point);
  const double s2 = metric.taper_width * metric.taper_width;
  const double w = std::exp(-point.squaredNorm() / s2);
  const Vec dw = -2.0 * w / s2 * point;
  const int d = static_cast<int>(point.size());
  const Mat d2w = w * (4.0 / (s2 * s2) * point * point.transpose() - 2.0 / s2 * Mat::Identity(d, d));
  PotentialSample out;
  out.value = v.value * w;
  out.gradient = v.gradient * w + v.value * dw;
  out.hessian = v.hessian * w + v.gradient * dw.transpose() + dw * v.gradient.transpose() +
                v.value * d2w;
  return out;
}

Operators::Operators(const MetricSpec& metric, const GridSpec& grid, double mass)
    : metric_(metric), grid_(grid), mass_(mass) {
  const int d = grid.dims;
  if (d != 1 && d != 2) throw std::invalid_argument("operator lab supports 1 or 2 dimensions");
  if (grid.points < 4) throw std::invalid_argument("grid needs at least 4 points per axis");
  if (!(grid.half_extent > 0.0)) throw std::invalid_argument("grid extent must be positive");
  if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");
  const int n = grid.points;
  size_ = d == 1 ? n : static_cast<std::size_t>(n) * n;
  spacing_ = 2.0 * grid.half_extent / n;
  cell_volume_ = std::pow(spacing_, d);
  fft_ = std::make_unique<Fft>(d == 1 ? std::vector<int>{n} : std::vector<int>{n, n});
  k_.assign(d, wavenumbers(n, 2.0 * grid.half_extent, true));

  coords_.assign(d, Field(size_));
  for (std::size_t idx = 0; idx < size_; ++idx) {
    const Vec r = node(idx);
    for (int k = 0; k < d; ++k) coords_[k][idx] = r[k];
  }

  g_.assign(d * d, Field::Zero(size_));
  for (std::size_t idx = 0; idx < size_; ++idx) {
    const Vec r = node(idx);
    Mat gm = Mat::Identity(d, d);
    switch (metric.kind) {
      case MetricKind::kFlat:
        break;
      case MetricKind::kConformal: {
        if (!metric.potential) throw std::invalid_argument("conformal metric needs a potential");
        if (metric.potential->dim() != d) {
          throw std::invalid_argument("potential dimension does not match the grid");
        }
        const double s2 = metric.taper_width * metric.taper_width;
        const double defect =
            metric.energy - metric.potential->value(r) * std::exp(-r.squaredNorm() / s2);
        if (std::abs(defect) <= default_guard(metric.energy)) {
          throw NonInvertibleMetric("conformal factor diverges on the grid");
        }
        gm *= metric.energy / defect;
        break;
      }
      case MetricKind::kBump: {
        const double b = std::exp(-r.squaredNorm() / (metric.bump_width * metric.bump_width));
        if (d == 1) {
          gm(0, 0) += metric.bump_amplitude * b;
        } else {
          if (metric.bump_matrix.rows() != 2 || metric.bump_matrix.cols() != 2) {
            throw std::invalid_argument("2D bump metric needs a 2x2 matrix");
          }
          gm += b * metric.bump_matrix;
        }
        break;
      }
    }
    const double det = gm.determinant();
    if (!(std::abs(det) > metric.det_guard)) {
      throw NonInvertibleMetric("metric determinant below guard at grid node " +
                                std::to_string(idx));
    }
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) g_[i * d + j][idx] = gm(i, j);
  }

  g_inv_.assign(d * d, Field::Zero(size_));
  for (std::size_t idx = 0; idx < size_; ++idx) {
    Mat gm(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) gm(i, j) = g_[i * d + j][idx];
    const Mat inv = gm.inverse();
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) g_inv_[i * d + j][idx] = inv(i, j);
  }

  dg_.assign(d * d * d, Field());
  dg_inv_.assign(d * d * d, Field());
  for (int a = 0; a < d; ++a)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        dg_[(a * d + i) * d + j] = derivative(g_[i * d + j], a);
        dg_inv_[(a * d + i) * d + j] = derivative(g_inv_[i * d + j], a);
      }
}

std::size_t Operators::index(int i0, int i1) const {
  return static_cast<std::size_t>(i0) + static_cast<std::size_t>(i1) * grid_.points;
}

Vec Operators::node(std::size_t idx) const {
  Vec r(grid_.dims);
  const int n = grid_.points;
  r[0] = -grid_.half_extent + static_cast<double>(idx % n) * spacing_;
  if (grid_.dims == 2) r[1] = -grid_.half_extent + static_cast<double>(idx / n) * spacing_;
  return r;
}

State Operators::spectral(const State& psi, int axis) const {
  State f = psi;
  fft_->forward(f.data());
  const int n = grid_.points;
  const auto& k = k_[axis];
  for (std::size_t idx = 0; idx < size_; ++idx) {
    const int j = axis == 0 ? static_cast<int>(idx % n) : static_cast<int>(idx / n);
    f[idx] *= kI * k[j] / static_cast<double>(size_);
  }
  fft_->inverse(f.data());
  return f;
}

Field Operators::derivative(const Field& f, int axis) const {
  return spectral(f.cast<std::complex<double>>(), axis).real();
}

State Operators::p(int k, const State& psi) const { return -kI * spectral(psi, k); }

State Operators::x(int k, const State& psi) const { return coords_[k].cwiseProduct(psi); }

State Operators::hg(const State& psi) const {
  const int d = dims();
  std::vector<State> pj(d);
  for (int j = 0; j < d; ++j) pj[j] = p(j, psi);
  State out = State::Zero(size_);
  for (int i = 0; i < d; ++i) {
    State inner = State::Zero(size_);
    for (int j = 0; j < d; ++j) inner += g(i, j).cwiseProduct(pj[j]);
    out += p(i, inner);
  }
  return out / (2.0 * mass_);
}

State Operators::x_dot(int k, const State& psi) const {
  return kI * (hg(x(k, psi)) - x(k, hg(psi)));
}

State Operators::y_dot(int l, const State& psi) const {
  State out = State::Zero(size_);
  for (int k = 0; k < dims(); ++k) {
    out += x_dot(k, mul(g_inv(k, l), psi)) + mul(g_inv(k, l), x_dot(k, psi));
  }
  return 0.5 * out;
}

double Operators::norm(const State& psi) const {
  return std::sqrt(psi.squaredNorm() * cell_volume_);
}

ProbeSet make_probes(const Operators& ops, int count, std::uint64_t seed, double center_radius,
                     double width, double momentum_scale) {
  if (count < 1) throw std::invalid_argument("need at least one probe");
  const int d = ops.dims();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  ProbeSet set;
  set.interior_margin = std::max(0.0, ops.grid().half_extent - center_radius - 8.0 * width);
  for (int s = 0; s < count; ++s) {
    Probe pr;
    pr.width = width;
    pr.center = Vec(d);
    do {
      for (int k = 0; k < d; ++k) pr.center[k] = center_radius * unit(rng);
    } while (pr.center.norm() > center_radius);
    pr.momentum = Vec(d);
    for (int k = 0; k < d; ++k) pr.momentum[k] = momentum_scale * unit(rng);

    State psi(ops.size());
    for (std::size_t idx = 0; idx < ops.size(); ++idx) {
      const Vec r = ops.node(idx) - pr.center;
      psi[idx] = std::exp(-r.squaredNorm() / (2.0 * width * width) + kI * pr.momentum.dot(r));
    }
    psi /= ops.norm(psi);
    set.probes.push_back(pr);
    set.states.push_back(std::move(psi));
  }
  return set;
}

double exterior_mass(const Operators& ops, const State& psi, double margin) {
  const double edge = ops.grid().half_extent - margin;
  double mass = 0.0;
  for (std::size_t idx = 0; idx < ops.size(); ++idx) {
    const Vec r = ops.node(idx);
    if (r.cwiseAbs().maxCoeff() > edge) mass += std::norm(psi[idx]);
  }
  return mass * ops.cell_volume();
}

namespace {

using Op = std::function<State(const State&)>;

struct Entry {
  int components = 1;
  std::function<State(int, const State&)> lhs;
  std::function<State(int, const State&)> rhs;
  bool gated = true;
  std::string note;
};

const std::vector<std::string>& gated_names() {
  static const std::vector<std::string> names = {
      "velocity",
      "momentum_from_velocity",
      "velocity_position",
      "velocity_velocity",
      "y_velocity_position",
      "momentum_position",
      "y_acceleration",
      "hamiltonian_inverse_metric",
      "y_acceleration_from_x",
      "hamiltonian_from_y_velocity",
      "x_acceleration_anticommutator",
      "x_acceleration_momentum",
      "y_velocity_x_velocity",
      "metric_x_velocity",
      "metric_y_velocity_frame",
      "metric_y_velocity",
  };
  return names;
}

const std::vector<std::string>& diagnostic_names() {
  static const std::vector<std::string> names = {
      "metric_y_velocity_literal",
      "metric_y_velocity_routes",
      "x_acceleration_first_term",
      "x_acceleration_momentum_negated_correction",
  };
  return names;
}

// {A, B} psi and [A, B] psi for operator closures.
State anti(const Op& a, const Op& b, const State& psi) { return a(b(psi)) + b(a(psi)); }
State comm(const Op& a, const Op& b, const State& psi) { return a(b(psi)) - b(a(psi)); }

// K_lij = d_n g_li g_nj + d_n g_lj g_ni - d_n g_ij g_ln at every node.
Field k_field(const Operators& o, int l, int i, int j) {
  Field k = Field::Zero(o.size());
  for (int n = 0; n < o.dims(); ++n) {
    k += o.dg(n, l, i).cwiseProduct(o.g(n, j)) + o.dg(n, l, j).cwiseProduct(o.g(n, i)) -
         o.dg(n, i, j).cwiseProduct(o.g(l, n));
  }
  return k;
}

Entry make_entry(const Operators& o, const std::string& name) {
  const int d = o.dims();
  const double m = o.mass();
  const std::size_t size = o.size();
  auto xdot = [&o](int k) { return Op([&o, k](const State& s) { return o.x_dot(k, s); }); };
  auto ydot = [&o](int l) { return Op([&o, l](const State& s) { return o.y_dot(l, s); }); };
  auto pop = [&o](int k) { return Op([&o, k](const State& s) { return o.p(k, s); }); };
  auto xop = [&o](int k) { return Op([&o, k](const State& s) { return o.x(k, s); }); };
  auto fop = [&o](Field f) {
    return Op([&o, f = std::move(f)](const State& s) { return o.mul(f, s); });
  };
  const Op h = [&o](const State& s) { return o.hg(s); };
  // x_l'' = i[H_G, x_l']
  auto xddot = [&o, h](int l) {
    return Op([&o, h, l](const State& s) {
      return State(kI * (h(o.x_dot(l, s)) - o.x_dot(l, h(s))));
    });
  };
  // B^n = sum_m {g^{nm}, x_m'} (twice the y-velocity, from its definition)
  auto b_op = [&o, d](int n) {
    return Op([&o, d, n](const State& s) {
      State out = State::Zero(o.size());
      for (int a = 0; a < d; ++a) {
        out += o.x_dot(a, o.mul(o.g_inv(a, n), s)) + o.mul(o.g_inv(a, n), o.x_dot(a, s));
      }
      return out;
    });
  };

  Entry e;
  if (name == "velocity") {
    e.components = d;
    e.lhs = [&o](int k, const State& s) { return o.x_dot(k, s); };
    e.rhs = [&o, d, m, size](int k, const State& s) {
      State out = State::Zero(size);
      for (int i = 0; i < d; ++i) out += o.p(i, o.mul(o.g(i, k), s)) + o.mul(o.g(i, k), o.p(i, s));
      return State(out / (2.0 * m));
    };
  } else if (name == "momentum_from_velocity") {
    e.components = d;
    e.lhs = [&o, d, m, size](int l, const State& s) {
      State out = State::Zero(size);
      for (int k = 0; k < d; ++k)
        out += o.x_dot(k, o.mul(o.g_inv(k, l), s)) + o.mul(o.g_inv(k, l), o.x_dot(k, s));
      return State(0.5 * m * out);
    };
    e.rhs = [&o](int l, const State& s) { return o.p(l, s); };
  } else if (name == "velocity_position") {
    e.components = d * d;
    e.lhs = [=](int c, const State& s) { return comm(xdot(c / d), xop(c % d), s); };
    e.rhs = [&o, d, m](int c, const State& s) {
      return State(-kI / m * o.mul(o.g(c % d, c / d), s));
    };
  } else if (name == "velocity_velocity") {
    e.components = d * d;
    e.lhs = [=](int c, const State& s) { return comm(xdot(c / d), xdot(c % d), s); };
    e.rhs = [&o, d, m, size](int c, const State& s) {
      const int k = c / d, l = c % d;
      State out = State::Zero(size);
      for (int i = 0; i < d; ++i) {
        Field f = Field::Zero(size);
        for (int q = 0; q < d; ++q)
          f += o.g(l, q).cwiseProduct(o.dg(q, i, k)) - o.g(k, q).cwiseProduct(o.dg(q, i, l));
        out += o.p(i, o.mul(f, s)) + o.mul(f, o.p(i, s));
      }
      return State(kI / (2.0 * m * m) * out);
    };
  } else if (name == "y_velocity_position") {
    e.components = d * d;
    e.lhs = [=](int c, const State& s) { return comm(ydot(c / d), xop(c % d), s); };
    e.rhs = [d, m](int c, const State& s) {
      return State((c / d == c % d ? -kI / m : 0.0) * s);
    };
  } else if (name == "momentum_position") {
    e.components = d * d;
    e.lhs = [=](int c, const State& s) { return comm(pop(c / d), xop(c % d), s); };
    e.rhs = [d](int c, const State& s) { return State((c / d == c % d ? -kI : 0.0) * s); };
  } else if (name == "y_acceleration") {
    e.components = d;
    e.lhs = [=](int l, const State& s) { return State(kI * comm(h, ydot(l), s)); };
    e.rhs = [&o, d, size](int l, const State& s) {
      std::vector<State> yj(d);
      for (int j = 0; j < d; ++j) yj[j] = o.y_dot(j, s);
      State out = State::Zero(size);
      for (int i = 0; i < d; ++i) {
        State inner = State::Zero(size);
        for (int j = 0; j < d; ++j) inner += o.mul(o.dg(l, i, j), yj[j]);
        out += o.y_dot(i, inner);
      }
      return State(-0.5 * out);
    };
  } else if (name == "hamiltonian_inverse_metric") {
    e.components = d * d;
    e.lhs = [=, &o](int c, const State& s) { return comm(h, fop(o.g_inv(c / d, c % d)), s); };
    e.rhs = [&o, d, m, size](int c, const State& s) {
      const int k = c / d, i = c % d;
      State out = State::Zero(size);
      for (int n = 0; n < d; ++n) {
        Field f = Field::Zero(size);
        for (int q = 0; q < d; ++q) f += o.dg_inv(q, k, i).cwiseProduct(o.g(q, n));
        out += o.mul(f, o.p(n, s)) + o.p(n, o.mul(f, s));
      }
      return State(-kI / (2.0 * m) * out);
    };
  } else if (name == "y_acceleration_from_x") {
    e.components = d;
    e.lhs = [=](int i, const State& s) { return State(kI * comm(h, ydot(i), s)); };
    e.rhs = [=, &o](int i, const State& s) {
      State out = State::Zero(size);
      for (int k = 0; k < d; ++k) out += 0.5 * anti(xddot(k), fop(o.g_inv(k, i)), s);
      for (int k = 0; k < d; ++k) {
        for (int n = 0; n < d; ++n) {
          Field f = Field::Zero(size);
          for (int q = 0; q < d; ++q) f += o.dg_inv(q, k, i).cwiseProduct(o.g(q, n));
          const Op inner = [=](const State& t) { return anti(fop(f), b_op(n), t); };
          out += anti(xdot(k), inner, s) / 8.0;
        }
      }
      return out;
    };
  } else if (name == "hamiltonian_from_y_velocity") {
    e.components = 1;
    e.lhs = [h](int, const State& s) { return h(s); };
    e.rhs = [&o, d, m, size](int, const State& s) {
      std::vector<State> yj(d);
      for (int j = 0; j < d; ++j) yj[j] = o.y_dot(j, s);
      State out = State::Zero(size);
      for (int i = 0; i < d; ++i) {
        State inner = State::Zero(size);
        for (int j = 0; j < d; ++j) inner += o.mul(o.g(i, j), yj[j]);
        out += o.y_dot(i, inner);
      }
      return State(0.5 * m * out);
    };
  } else if (name == "x_acceleration_anticommutator") {
    e.components = d;
    e.lhs = [=](int l, const State& s) { return xddot(l)(s); };
    e.rhs = [=, &o](int l, const State& s) {
      State out = State::Zero(size);
      // sum_i {A_i, D_i},  A_i = sum_n {B^n, d_i g_ln},  D_i = sum_j g_ij B^j
      for (int i = 0; i < d; ++i) {
        const Op a_i = [=, &o](const State& t) {
          State r = State::Zero(size);
          for (int n = 0; n < d; ++n) r += anti(b_op(n), fop(o.dg(i, l, n)), t);
          return r;
        };
        const Op d_i = [=, &o](const State& t) {
          State r = State::Zero(size);
          for (int j = 0; j < d; ++j) r += o.mul(o.g(i, j), b_op(j)(t));
          return r;
        };
        out += anti(a_i, d_i, s);
      }
      // -2 sum_ij B^i h_ij B^j,  h_ij = sum_n g_ln d_n g_ij
      std::vector<State> bj(d);
      for (int j = 0; j < d; ++j) bj[j] = b_op(j)(s);
      for (int i = 0; i < d; ++i) {
        State inner = State::Zero(size);
        for (int j = 0; j < d; ++j) {
          Field hij = Field::Zero(size);
          for (int n = 0; n < d; ++n) hij += o.g(l, n).cwiseProduct(o.dg(n, i, j));
          inner += o.mul(hij, bj[j]);
        }
        out -= 2.0 * b_op(i)(inner);
      }
      return State(out / 16.0);
    };
  } else if (name == "x_acceleration_momentum" || name == "x_acceleration_first_term" ||
             name == "x_acceleration_momentum_negated_correction") {
    const double correction = name == "x_acceleration_momentum"     ? 1.0
                              : name == "x_acceleration_first_term" ? 0.0
                                                                    : -1.0;
    e.components = d;
    e.lhs = [=](int l, const State& s) { return xddot(l)(s); };
    e.rhs = [&o, d, m, size, correction](int l, const State& s) {
      State out = State::Zero(size);
      std::vector<State> pj(d);
      for (int j = 0; j < d; ++j) pj[j] = o.p(j, s);
      for (int i = 0; i < d; ++i) {
        State inner = State::Zero(size);
        for (int j = 0; j < d; ++j) inner += o.mul(k_field(o, l, i, j), pj[j]);
        out += o.p(i, inner);
      }
      out /= 2.0 * m * m;
      if (correction != 0.0) out += correction * o.mul(quantum_correction_field(o, l), s);
      return out;
    };
    if (correction == 0.0) {
      e.gated = false;
      e.note = "bilinear term alone; the gap is the c-number correction";
    } else if (correction < 0.0) {
      e.gated = false;
      e.note = "c-number correction with the opposite sign";
    }
  } else if (name == "y_velocity_x_velocity") {
    e.components = d * d;
    e.lhs = [=](int c, const State& s) { return comm(ydot(c / d), xdot(c % d), s); };
    e.rhs = [=, &o](int c, const State& s) {
      const int i = c / d, l = c % d;
      State out = State::Zero(size);
      for (int n = 0; n < d; ++n) out += anti(ydot(n), fop(o.dg(i, n, l)), s);
      return State(-kI / (2.0 * m) * out);
    };
  } else if (name == "metric_x_velocity") {
    e.components = d * d * d;
    e.lhs = [=, &o](int c, const State& s) {
      const int i = c / (d * d), j = (c / d) % d, l = c % d;
      return comm(fop(o.g(i, j)), xdot(l), s);
    };
    e.rhs = [&o, d, m, size](int c, const State& s) {
      const int i = c / (d * d), j = (c / d) % d, l = c % d;
      Field f = Field::Zero(size);
      for (int n = 0; n < d; ++n) f += o.g(n, l).cwiseProduct(o.dg(n, i, j));
      return State(kI / m * o.mul(f, s));
    };
  } else if (name == "metric_y_velocity_frame") {
    e.components = d * d * d;
    e.lhs = [=, &o](int c, const State& s) {
      const int i = c / (d * d), j = (c / d) % d, l = c % d;
      return comm(fop(o.g(i, j)), ydot(l), s);
    };
    e.rhs = [=, &o](int c, const State& s) {
      const int i = c / (d * d), j = (c / d) % d, l = c % d;
      State out = State::Zero(size);
      for (int k = 0; k < d; ++k) out += o.mul(o.g_inv(k, l), comm(fop(o.g(i, j)), xdot(k), s));
      return out;
    };
  } else if (name == "metric_y_velocity") {
    // d/dy^l realized through p^l = -i d/dy^l, i.e. i[p^l, f] = d_l f.
    e.components = d * d * d;
    e.lhs = [=, &o](int c, const State& s) {
      const int i = c / (d * d), j = (c / d) % d, l = c % d;
      return comm(fop(o.g(i, j)), ydot(l), s);
    };
    e.rhs = [&o, d, m](int c, const State& s) {
      const int i = c / (d * d), j = (c / d) % d, l = c % d;
      return State(kI / m * o.mul(o.dg(l, i, j), s));
    };
  } else if (name == "metric_y_velocity_literal") {
    e.components = d * d * d;
    e.gated = false;
    e.note = "g_ln d_n g_ij form; differs from the commutator unless g is flat";
    e.lhs = [=, &o](int c, const State& s) {
      const int i = c / (d * d), j = (c / d) % d, l = c % d;
      return comm(fop(o.g(i, j)), ydot(l), s);
    };
    e.rhs = [&o, d, m, size](int c, const State& s) {
      const int i = c / (d * d), j = (c / d) % d, l = c % d;
      Field f = Field::Zero(size);
      for (int n = 0; n < d; ++n) f += o.g(l, n).cwiseProduct(o.dg(n, i, j));
      return State(kI / m * o.mul(f, s));
    };
  } else if (name == "metric_y_velocity_routes") {
    // Route A: g^{kl} [g_ij, x_k'] with the metric/velocity commutator form.
    // Route B: the double-commutator expansion with [p, y] taken as [p, x].
    e.components = d * d * d;
    e.gated = false;
    e.note = "the two routes differ by (g_ln - delta_ln) d_n g_ij";
    e.lhs = [&o, d, m, size](int c, const State& s) {
      const int i = c / (d * d), j = (c / d) % d, l = c % d;
      Field f = Field::Zero(size);
      for (int k = 0; k < d; ++k)
        for (int n = 0; n < d; ++n)
          f += o.g_inv(k, l).cwiseProduct(o.g(n, k)).cwiseProduct(o.dg(n, i, j));
      return State(kI / m * o.mul(f, s));
    };
    e.rhs = [=, &o](int c, const State& s) {
      const int i = c / (d * d), j = (c / d) % d, l = c % d;
      const Op gij = fop(o.g(i, j));
      State out = State::Zero(size);
      for (int a = 0; a < d; ++a)
        for (int n = 0; n < d; ++n) {
          const Op gm = fop(o.g(a, n));
          const Op c1 = [=](const State& t) { return comm(pop(a), xop(l), t); };
          const Op c2 = [=](const State& t) { return comm(gij, pop(n), t); };
          const Op c3 = [=](const State& t) { return comm(gij, pop(a), t); };
          const Op c4 = [=](const State& t) { return comm(pop(n), xop(l), t); };
          out += c1(gm(c2(s))) + c3(gm(c4(s)));
        }
      return State(kI / (2.0 * m) * out);
    };
  } else {
    throw std::invalid_argument("unknown identity '" + name + "'");
  }
  return e;
}

}  // namespace

std::vector<std::string> identity_catalog() { return gated_names(); }
std::vector<std::string> diagnostic_catalog() { return diagnostic_names(); }

IdentityReport identity_residual(const Operators& ops, const std::string& identity,
                                 const ProbeSet& probes, double tolerance) {
  const Entry e = make_entry(ops, identity);
  IdentityReport report;
  report.identity = identity;
  report.tolerance = tolerance;
  report.gated = e.gated;
  report.note = e.note;
  for (const State& psi : probes.states) {
    double diff = 0.0;
    double scale = 0.0;
    for (int c = 0; c < e.components; ++c) {
      const State l = e.lhs(c, psi);
      const State r = e.rhs(c, psi);
      diff = std::max(diff, ops.norm(l - r));
      scale = std::max(scale, ops.norm(r));
    }
    const double res = scale > 1e-12 ? diff / scale : diff;
    report.residual = std::max(report.residual, res);
  }
  report.passed = report.residual < tolerance;
  return report;
}

Eigen::MatrixXcd dense(const Operators& ops, const std::function<State(const State&)>& op,
                       std::size_t cap) {
  const std::size_t n = ops.size();
  if (n > cap) throw std::length_error("grid too large for dense operator assembly");
  Eigen::MatrixXcd out(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    State e = State::Zero(n);
    e[c] = 1.0;
    out.col(c) = op(e);
  }
  return out;
}

double hermiticity_defect(const Operators& ops, const std::string& observable, int component,
                          std::size_t cap) {
  std::function<State(const State&)> op;
  if (observable == "hamiltonian") {
    op = [&ops](const State& s) { return ops.hg(s); };
  } else if (observable == "x_velocity") {
    op = [&ops, component](const State& s) { return ops.x_dot(component, s); };
  } else if (observable == "y_velocity") {
    op = [&ops, component](const State& s) { return ops.y_dot(component, s); };
  } else if (observable == "y_acceleration") {
    op = [&ops, component](const State& s) {
      return State(kI * (ops.hg(ops.y_dot(component, s)) - ops.y_dot(component, ops.hg(s))));
    };
  } else {
    throw std::invalid_argument("unknown observable '" + observable + "'");
  }
  const Eigen::MatrixXcd mtx = dense(ops, op, cap);
  const double scale = mtx.norm();
  return scale == 0.0 ? 0.0 : (mtx - mtx.adjoint()).norm() / scale;
}

Field quantum_correction_field(const Operators& ops, int l) {
  const int d = ops.dims();
  Field out = Field::Zero(ops.size());
  for (int j = 0; j < d; ++j) {
    Field s = Field::Zero(ops.size());
    for (int i = 0; i < d; ++i)
      for (int n = 0; n < d; ++n)
        s += ops.derivative(ops.dg(n, l, n), i).cwiseProduct(ops.g(i, j));
    out += ops.derivative(s, j);
  }
  return out / (4.0 * ops.mass() * ops.mass());
}

std::vector<std::size_t> random_nodes(const Operators& ops, int count, double radius,
                                      std::uint64_t seed) {
  std::vector<std::size_t> candidates;
  for (std::size_t idx = 0; idx < ops.size(); ++idx) {
    if (ops.node(idx).norm() < radius) candidates.push_back(idx);
  }
  if (static_cast<int>(candidates.size()) < count) {
    throw std::invalid_argument("not enough grid nodes inside the requested radius");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  candidates.resize(count);
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

ClassicalLimit classical_limit_check(const Operators& ops, const std::vector<std::size_t>& nodes) {
  const int d = ops.dims();
  const double m = ops.mass();
  const MetricSpec& spec = ops.metric();
  ClassicalLimit out;
  out.nodes = nodes;

  std::vector<Field> corrections(d);
  for (int l = 0; l < d; ++l) corrections[l] = quantum_correction_field(ops, l);

  double max_ref = 0.0;
  for (std::size_t idx : nodes) {
    const Vec r = ops.node(idx);
    Mat g(d, d);
    Tensor3 dg(d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        g(i, j) = ops.g(i, j)[idx];
        for (int n = 0; n < d; ++n) dg(n, i, j) = ops.dg(n, i, j)[idx];
      }

    // Classical side: analytic connection of the same metric at the node.
    ConnectionForms cf;
    Mat g_exact = g;
    if (spec.kind == MetricKind::kConformal) {
      const MetricBundle b = metric_bundle(tapered_potential(spec, r), spec.energy);
      cf = christoffel(b);
      g_exact = b.g;
    } else if (spec.kind == MetricKind::kFlat) {
      cf = christoffel(Mat::Identity(d, d), Tensor3(d));
      g_exact = Mat::Identity(d, d);
    } else {
      cf = christoffel(g, dg);
    }

    std::vector<double> q(d * d * d), c(d * d * d);
    for (int l = 0; l < d; ++l)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          double k = 0.0;
          for (int n = 0; n < d; ++n) k += dg(n, l, i) * g(n, j) + dg(n, l, j) * g(n, i) - dg(n, i, j) * g(l, n);
          double gam = 0.0;
          for (int p = 0; p < d; ++p)
            for (int s = 0; s < d; ++s) gam += cf.gamma(l, p, s) * g_exact(p, i) * g_exact(s, j);
          const int at = (l * d + i) * d + j;
          q[at] = k / (2.0 * m * m);
          c[at] = -gam / (m * m);
          out.max_abs_diff = std::max(out.max_abs_diff, std::abs(q[at] - c[at]));
          max_ref = std::max(max_ref, std::abs(c[at]));
        }
    out.quantum_coefficient.push_back(std::move(q));
    out.gamma.push_back(std::move(c));
    Vec corr(d);
    for (int l = 0; l < d; ++l) corr[l] = corrections[l][idx];
    out.quantum_correction.push_back(corr);
  }
  out.max_rel_diff = max_ref > 0.0 ? out.max_abs_diff / max_ref : out.max_abs_diff;
  return out;
}

std::vector<State> hg_small_evolution(const Operators& ops, const State& psi, double dt,
                                      int steps, std::size_t cap) {
  if (steps < 0) throw std::invalid_argument("steps must be non-negative");
  std::vector<State> out{psi};
  if (steps == 0) return out;
  const Eigen::MatrixXcd h = dense(ops, [&ops](const State& s) { return ops.hg(s); }, cap);
  const Eigen::MatrixXcd hs = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(hs);
  const Eigen::MatrixXcd& v = eig.eigenvectors();
  Eigen::VectorXcd phase(v.cols());
  for (int i = 0; i < phase.size(); ++i) phase[i] = std::exp(-kI * eig.eigenvalues()[i] * dt);
  Eigen::VectorXcd coeff = v.adjoint() * psi;
  for (int s = 0; s < steps; ++s) {
    coeff = coeff.cwiseProduct(phase);
    out.push_back(v * coeff);
  }
  return out;
}

std::complex<double> free_gaussian(double x, double t, double center, double width, double k0,
                                   double mass) {
  const std::complex<double> a = 1.0 + kI * t / (mass * width * width);
  const double shift = x - center - k0 * t / mass;
  const std::complex<double> expo = -shift * shift / (2.0 * width * width * a) +
                                    kI * k0 * (x - center) - kI * k0 * k0 * t / (2.0 * mass);
  return std::pow(M_PI * width * width, -0.25) / std::sqrt(a) * std::exp(expo);
}

const std::vector<std::string>& audited_identities() {
  static const std::vector<std::string> names = {"x_acceleration_anticommutator",
                                                 "x_acceleration_momentum"};
  return names;
}

std::vector<SuiteRow> run_identity_suite(const SuiteCase& c, bool include_diagnostics) {
  const Operators fine(c.metric, c.grid);
  const ProbeSet fine_probes =
      make_probes(fine, c.probe_count, c.seed, c.center_radius, c.probe_width, 1.0);
  std::optional<Operators> coarse;
  std::optional<ProbeSet> coarse_probes;
  if (c.coarse_points > 0) {
    coarse.emplace(c.metric, GridSpec{c.grid.dims, c.coarse_points, c.grid.half_extent});
    coarse_probes = make_probes(*coarse, c.probe_count, c.seed, c.center_radius, c.probe_width, 1.0);
  }
  std::vector<std::string> names = identity_catalog();
  if (include_diagnostics) {
    for (const auto& d : diagnostic_catalog()) names.push_back(d);
  }
  const auto& audited = audited_identities();
  std::vector<SuiteRow> rows;
  for (const std::string& name : names) {
    const IdentityReport r = identity_residual(fine, name, fine_probes, c.tolerance);
    SuiteRow row;
    row.label = c.label;
    row.identity = name;
    row.dims = c.grid.dims;
    row.points = c.grid.points;
    row.residual = r.residual;
    row.tolerance = c.tolerance;
    row.within_tolerance = r.residual < c.tolerance;
    row.gated = r.gated;
    row.audited = std::find(audited.begin(), audited.end(), name) != audited.end();
    row.note = r.note;
    if (coarse) {
      row.coarse_points = c.coarse_points;
      row.coarse_residual = identity_residual(*coarse, name, *coarse_probes, c.tolerance).residual;
      const double floor = 1e-3 * c.tolerance;
      row.refined = row.residual < row.coarse_residual ||
                    (row.residual <= floor && row.coarse_residual <= floor);
    }
    row.passed = (row.gated && !row.audited) ? row.within_tolerance && row.refined : true;
    rows.push_back(row);
  }
  return rows;
}

std::vector<SuiteCase> standard_suite(std::uint64_t seed) {
  std::vector<SuiteCase> cases;
  auto add = [&](std::string label, MetricSpec metric, int dims, int points, double extent,
                 int coarse, double width, double radius, double tol) {
    SuiteCase c;
    c.label = std::move(label);
    c.metric = std::move(metric);
    c.grid = GridSpec{dims, points, extent};
    c.coarse_points = coarse;
    c.probe_width = width;
    c.center_radius = radius;
    c.seed = seed;
    c.tolerance = tol;
    cases.push_back(std::move(c));
  };
  const Potential h1 = Potential::harmonic(0.5, 1);
  const Potential h2 = Potential::harmonic(0.5, 2);
  add("flat-1d", flat_metric(), 1, 256, 10.0, 128, 0.3, 2.0, 1e-6);
  add("flat-2d", flat_metric(), 2, 64, 3.0, 48, 0.3, 0.8, 1e-5);
  add("conformal-1d", conformal_metric(h1, 1.0), 1, 256, 6.0, 128, 0.35, 0.3, 1e-6);
  add("conformal-2d", conformal_metric(h2, 1.0), 2, 64, 3.0, 48, 0.35, 0.3, 1e-5);
  add("bump-1d", bump_metric(1), 1, 256, 10.0, 128, 0.3, 1.5, 1e-6);
  add("bump-2d", bump_metric(2), 2, 64, 3.0, 48, 0.3, 0.6, 1e-5);
  return cases;
}

}  // namespace qgd::lab
