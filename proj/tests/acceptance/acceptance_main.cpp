// Acceptance runner: one PASS/FAIL line per primary criterion.
//
//   qgd_acceptance [--configs DIR] [--work DIR] [--only NAME]
//                  [--known-unattainable NAME[,NAME...]]
//
// Exit status is nonzero when a criterion fails that is not listed as known
// unattainable (those still print FAIL).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qgd/classical.hpp"
#include "qgd/experiment.hpp"
#include "qgd/operator_lab.hpp"
#include "qgd/stability.hpp"
#include "qgd/tdse.hpp"

#ifndef QGD_CONFIG_DIR
#define QGD_CONFIG_DIR "configs"
#endif

using namespace qgd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string sci(double v) { return fmt("%.2e", v); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string config_dir = QGD_CONFIG_DIR;
std::string work_dir = "acceptance_runs";

RunManifest run_config(const std::string& name) {
  const ExperimentConfig c = validate_config((fs::path(config_dir) / name).string());
  const RunManifest m = run_experiment(c, (fs::path(work_dir) / fs::path(name).stem()).string());
  if (m.status != "ok") {
    std::string e = name + ":";
    for (const auto& s : m.errors) e += " " + s;
    throw std::runtime_error(e);
  }
  return m;
}

// Operator identity suite across flat, conformal and bump metrics.
Outcome operator_identities() {
  const auto t0 = std::chrono::steady_clock::now();
  int gated = 0, passed = 0, refined = 0;
  double worst = 0.0;
  std::string failures, audit;
  for (const lab::SuiteCase& c : lab::standard_suite()) {
    for (const lab::SuiteRow& r : lab::run_identity_suite(c, false)) {
      if (r.audited) {
        if (c.metric.kind != lab::MetricKind::kFlat) {
          audit += " " + c.label + "/" + r.identity +
                   "=" + sci(r.residual);
        }
        continue;
      }
      ++gated;
      passed += r.passed;
      refined += r.refined;
      worst = std::max(worst, r.residual / r.tolerance);
      if (!r.passed) failures += " " + c.label + "/" + r.identity + "=" + sci(r.residual);
    }
  }
  const double t = seconds_since(t0);
  Outcome o;
  o.pass = passed == gated && t < 300.0;
  o.detail = std::to_string(passed) + "/" + std::to_string(gated) + " gated identities within tolerance, " +
             std::to_string(refined) + " refined; worst residual/tol " + fmt("%.3f", worst) + "; " +
             fmt("%.0f s", t) + "; audited (outside gate):" + audit + failures;
  return o;
}

// Bilinear coefficient of the momentum-ordered acceleration vs the classical
// connection; quantum correction nonzero and stable under grid doubling.
Outcome classical_limit() {
  const auto t0 = std::chrono::steady_clock::now();
  double rel = 0.0, corr = 0.0, conv = 0.0;
  const Potential h1 = Potential::harmonic(0.5, 1), h2 = Potential::harmonic(0.5, 2);
  struct Case {
    lab::MetricSpec metric;
    int dims, coarse, fine;
    double half;
  };
  const std::vector<Case> cases = {{lab::conformal_metric(h1, 1.0), 1, 256, 512, 6.0},
                                   {lab::conformal_metric(h2, 1.0), 2, 64, 128, 3.0}};
  for (const Case& c : cases) {
    lab::GridSpec gc{c.dims, c.coarse, c.half}, gf{c.dims, c.fine, c.half};
    const lab::Operators oc(c.metric, gc), of(c.metric, gf);
    const auto nodes = lab::random_nodes(oc, 20, 0.8, 17);
    const lab::ClassicalLimit cl = lab::classical_limit_check(oc, nodes);
    rel = std::max(rel, cl.max_rel_diff);
    for (int l = 0; l < c.dims; ++l) {
      const lab::Field qc = lab::quantum_correction_field(oc, l);
      const lab::Field qf = lab::quantum_correction_field(of, l);
      double scale = 0.0, diff = 0.0;
      for (std::size_t n : nodes) {
        const Vec x = oc.node(n);
        // Coincident node on the doubled grid.
        const int i0 = static_cast<int>(std::lround((x[0] + c.half) / of.spacing()));
        const int i1 = c.dims == 2 ? static_cast<int>(std::lround((x[1] + c.half) / of.spacing())) : 0;
        const std::size_t m = of.index(i0, i1);
        scale = std::max(scale, std::abs(qf[m]));
        diff = std::max(diff, std::abs(qc[n] - qf[m]));
      }
      corr = std::max(corr, scale);
      conv = std::max(conv, diff / scale);
    }
  }
  Outcome o;
  o.pass = rel <= 1e-6 && corr > 1e-3 && conv <= 1e-6;
  o.detail = "max rel diff vs -Gamma/m^2 " + sci(rel) + " at 20 points (1D, 2D conformal); correction max " +
             sci(corr) + ", change under grid doubling " + sci(conv) + "; " + fmt("%.1f s", seconds_since(t0));
  return o;
}

// Reduced geodesic flow vs Hamilton's equations from on-shell seeds.
Outcome embedding_equivalence() {
  const Potential hh = Potential::henon_heiles(1.0);
  const double e = 0.125;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-0.5, 0.5), a(0.0, 2 * M_PI);
  double worst = 0.0;
  int seeds = 0;
  while (seeds < 10) {
    Vec q(2);
    q << u(rng), u(rng);
    const double ke = e - hh.value(q);
    if (ke < 0.01) continue;
    const double th = a(rng);
    PhaseState s0{q, Vec(2), 0.0};
    s0.p << std::sqrt(2 * ke) * std::cos(th), std::sqrt(2 * ke) * std::sin(th);
    HamiltonOptions ho;
    ho.sample_stride = 100;
    const auto ref = integrate_hamilton(hh, s0, 1e-4, 10.0, ho);
    const auto geo = integrate_geodesic(hh, e, GeodesicMode::kReduced, s0, 1e-2, 10.0);
    for (std::size_t k = 0; k < ref.samples.size(); ++k) {
      worst = std::max(worst, (geo.samples[k].q - ref.samples[k].q).norm());
    }
    ++seeds;
  }
  return {worst <= 1e-5, "max |q_geo - q_ham| " + sci(worst) + " over T = 10, 10 seeds (HH E = 1/8)"};
}

// c_matrix against a finite-difference Hessian of -ln(E - V), and alpha = (phi - 1) lambda.
Outcome conformal_oracle() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-3.5, 3.5);
  double worst_c = 0.0, worst_a = 0.0;
  int points = 0;
  const Potential pots[] = {Potential::five_well(), Potential::henon_heiles(0.5)};
  const double energies[] = {12.0, 0.5};
  while (points < 100) {
    const int which = points % 2;
    const Potential& v = pots[which];
    const double e = energies[which];
    Vec x(2);
    x << u(rng), u(rng);
    if (which == 1) x *= 0.4;
    if (std::abs(e - v.value(x)) < 0.05 * std::abs(e)) continue;
    const StabilityTensors t = stability_tensors(v, e, x);
    auto f = [&](double dx, double dy) {
      Vec p = x;
      p[0] += dx;
      p[1] += dy;
      return -std::log(std::abs(e - v.value(p)));
    };
    // Richardson-extrapolated central differences.
    auto hess = [&](double h) {
      Mat m(2, 2);
      m(0, 0) = (f(h, 0) - 2 * f(0, 0) + f(-h, 0)) / (h * h);
      m(1, 1) = (f(0, h) - 2 * f(0, 0) + f(0, -h)) / (h * h);
      m(0, 1) = m(1, 0) = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h * h);
      return m;
    };
    const double h = 1e-3;
    const Mat fd = 0.5 * (4.0 * hess(h / 2) - hess(h)) / 3.0;
    worst_c = std::max(worst_c, (t.c_matrix - fd).norm() / fd.norm());
    for (int k = 0; k < 2; ++k) {
      worst_a = std::max(worst_a, std::abs(t.alpha[k] - (t.phi - 1) * t.lambda[k]) /
                                      std::max(1.0, std::abs((t.phi - 1) * t.lambda[k])));
    }
    ++points;
  }
  return {worst_c <= 1e-6 && worst_a <= 1e-10,
          "c vs FD Hessian rel " + sci(worst_c) + ", alpha vs (phi-1) lambda " + sci(worst_a) +
              " at 100 points (five-well, HH)"};
}

Outcome tdse_correctness() {
  GridSpec g;  // 256^2 on [-8, 8]^2
  // Free spreading against the analytic Gaussian.
  double free_err = 0.0;
  {
    GridState s = coherent_state({-1.0, 0.5, 0.8, -0.3, 1.0}, g);
    auto exact_at = [&](int i, int j, double t) {
      return lab::free_gaussian(g.x(i), t, -1.0, 1.0, 0.8, 1.0) * lab::free_gaussian(g.y(j), t, 0.5, 1.0, -0.3, 1.0);
    };
    // Global phase convention fixed from the initial state at a node near the center.
    const int ic = static_cast<int>((-1.0 - g.x_min) / g.dx()), jc = static_cast<int>((0.5 - g.y_min) / g.dy());
    const cplx ref = s.psi[static_cast<std::size_t>(jc) * g.nx + ic] / exact_at(ic, jc, 0.0);
    const cplx phase = ref / std::abs(ref);
    propagate(s, Potential::free(), 1e-3, 1000);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const cplx exact = phase * exact_at(i, j, 1.0);
        free_err = std::max(free_err, std::abs(s.psi[static_cast<std::size_t>(j) * g.nx + i] - exact));
      }
  }
  // Harmonic coherent state returns after one period.
  double ret_err = 0.0, ehr_err = 0.0;
  {
    const Potential h = Potential::harmonic(1.0);
    const CoherentSpec spec{1.5, -0.5, 0.0, 1.0, 1.0};
    GridState s = coherent_state(spec, g);
    const auto psi0 = s.psi;
    const long steps = 6283;
    PropagateOptions o;
    o.sample_stride = 100;
    const TrajectoryRecord r = propagate(s, h, 2 * M_PI / steps, steps, o);
    for (std::size_t i = 0; i < psi0.size(); ++i) ret_err = std::max(ret_err, std::abs(s.psi[i] - psi0[i]));
    Vec q0(2), p0(2);
    q0 << spec.x0, spec.y0;
    p0 << spec.px0, spec.py0;
    HamiltonOptions ho;
    ho.sample_stride = 100;
    const auto c = integrate_hamilton(h, {q0, p0, 0.0}, 2 * M_PI / steps, 2 * M_PI, ho);
    for (std::size_t k = 0; k < std::min(r.size(), c.samples.size()); ++k) {
      ehr_err = std::max(ehr_err, std::hypot(r.x[k] - c.samples[k].q[0], r.y[k] - c.samples[k].q[1]));
    }
  }
  // Unitarity over 10^4 steps on an anharmonic potential.
  double drift = 0.0;
  {
    GridState s = coherent_state({0.2, 0.4, 0.5, 0.0, 1.0}, g);
    PropagateOptions o;
    o.sample_stride = 1000;
    drift = propagate(s, Potential::henon_heiles(0.1), 1e-3, 10000, o).norm_drift();
  }
  Outcome o;
  o.pass = free_err <= 1e-5 && ret_err <= 1e-5 && drift < 1e-10 && ehr_err <= 1e-5;
  o.detail = "free Gaussian max|dpsi| " + sci(free_err) + ", harmonic return " + sci(ret_err) +
             ", norm drift/1e4 steps " + sci(drift) + ", Ehrenfest vs classical " + sci(ehr_err);
  return o;
}

Outcome henon_heiles_divergence() {
  const auto t0 = std::chrono::steady_clock::now();
  const RunManifest reg = run_config("hh_twin_regular.json");
  const RunManifest cha = run_config("hh_twin_chaotic.json");
  const double gr = reg.invariants["growth_rate"].get<double>();
  const double gc = cha.invariants["growth_rate"].get<double>();
  const double dmax = reg.invariants["max_distance"].get<double>();
  const double dp = reg.invariants["delta_p_norm"].get<double>();
  const double dmax_c = cha.invariants["max_distance"].get<double>();

  // Classical exponents for the same seeds.
  const ExperimentConfig cr = validate_config((fs::path(config_dir) / "hh_twin_regular.json").string());
  const ExperimentConfig cc = validate_config((fs::path(config_dir) / "hh_twin_chaotic.json").string());
  auto lyap = [](const ExperimentConfig& c) {
    Vec q(2), p(2);
    q << c.evolve.packet.x0, c.evolve.packet.y0;
    p << c.evolve.packet.px0, c.evolve.packet.py0;
    return lyapunov_estimate(*c.potential, {q, p, 0.0}, 2e-3, 200.0, 1.0);
  };
  const double lr = lyap(cr), lc = lyap(cc);
  const double t = seconds_since(t0);

  const bool growth_ok = gr > 0.0 ? gc >= 5.0 * gr : gc > 0.0;
  Outcome o;
  o.pass = growth_ok && dmax < 5.0 * dp && lc >= 10.0 * lr && t < 600.0;
  o.detail = "growth chaotic " + fmt("%.4f", gc) + " vs regular " + fmt("%.4f", gr) +
             (growth_ok ? " (>= 5x)" : " (< 5x)") + "; regular max D " + sci(dmax) + " vs 5|dp| " + sci(5 * dp) +
             "; chaotic max D " + sci(dmax_c) + "; classical Lyapunov " + fmt("%.4f", lc) + " vs " +
             fmt("%.4f", lr) + " (" + fmt("%.0fx", lc / lr) + "); " + fmt("%.0f s", t);
  return o;
}

Outcome stability_map_structure() {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig c = validate_config((fs::path(config_dir) / "five_well_map.json").string());
  const StabilityMap m = stability_map(*c.potential, *c.energy, c.map.region, c.map.nx, c.map.ny, c.map.options);
  const double t = seconds_since(t0);
  const auto basins = connected_components(m, StabilityClass::kStable);
  // Symmetry group of the square: mirrors in both axes and the diagonal.
  long broken = 0;
  const int n = m.nx;
  bool square = m.nx == m.ny;
  for (int j = 0; j < m.ny && square; ++j)
    for (int i = 0; i < n; ++i) {
      const auto cls = m.at(i, j).cls;
      broken += cls != m.at(n - 1 - i, j).cls;
      broken += cls != m.at(i, n - 1 - j).cls;
      broken += cls != m.at(j, i).cls;
    }
  // Basins are separated: no stable cell borders a cell of another basin.
  std::vector<int> label(m.cells.size(), -1);
  for (std::size_t b = 0; b < basins.size(); ++b)
    for (int idx : basins[b]) label[idx] = static_cast<int>(b);
  long touching = 0;
  for (int j = 0; j < m.ny; ++j)
    for (int i = 0; i + 1 < n; ++i) {
      const int a = label[j * n + i], b = label[j * n + i + 1];
      touching += a >= 0 && b >= 0 && a != b;
    }
  Outcome o;
  o.pass = square && basins.size() == 5 && broken == 0 && touching == 0 && t < 120.0;
  o.detail = std::to_string(basins.size()) + " stable basins at E = " + fmt("%.6f", *c.energy) +
             " (central separatrix - 0.01), " + std::to_string(broken) + " symmetry mismatches, " +
             std::to_string(m.nx) + "x" + std::to_string(m.ny) + " cells in " + fmt("%.1f s", t);
  return o;
}

Outcome table_reproduction() {
  const RunManifest m = run_config("feit_fleck_table.json");
  const std::vector<std::string> expected = {"regular", "regular", "chaotic", "regular"};
  std::string got;
  bool ok = m.invariants["cases"].size() == expected.size();
  for (std::size_t k = 0; k < m.invariants["cases"].size(); ++k) {
    const auto& c = m.invariants["cases"][k];
    const std::string cls = c["class"].get<std::string>();
    got += (k ? ", " : "") + c["case"].get<std::string>() + "=" + cls + " [" +
           c["relation"].get<std::string>() + ", " + fmt("%.2f", c["unstable_fraction"].get<double>()) + "]";
    ok = ok && k < expected.size() && cls == expected[k];
  }
  return {ok, got};
}

Outcome cross_route() {
  GridSpec g;
  g.x_min = g.y_min = -3.0;
  g.x_max = g.y_max = 3.0;
  const Potential h = Potential::harmonic(1.0);
  std::vector<double> rel;
  std::string detail;
  for (double w : {0.2, 0.15, 0.1}) {
    const GridState s = coherent_state({0.2, 0.0, 0.3, 0.0, w}, g);
    const DeviationExpectation d = deviation_expectation(s, h, 1.0);
    const Mat p = pointwise_deviation(h, 1.0, d.mean_position, d.momentum_second_moment);
    rel.push_back((d.matrix - p).norm() / p.norm());
    detail += (detail.empty() ? "" : ", ") + fmt("w %.2f: ", w) + fmt("%.3f", rel.back());
  }
  const bool ok = rel[0] <= 0.1 && rel[1] < rel[0] && rel[2] < rel[1];
  return {ok, "relative mismatch " + detail + " (harmonic, E = 1)"};
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> known;
  std::string only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    auto next = [&]() -> std::string {
      if (i + 1 >= argc) {
        std::fprintf(stderr, "%s needs a value\n", a.c_str());
        std::exit(2);
      }
      return argv[++i];
    };
    if (a == "--configs") {
      config_dir = next();
    } else if (a == "--work") {
      work_dir = next();
    } else if (a == "--only") {
      only = next();
    } else if (a == "--known-unattainable") {
      for (const auto& n : split(next())) known.insert(n);
    } else {
      std::fprintf(stderr, "unknown argument %s\n", a.c_str());
      return 2;
    }
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"operator-identities", operator_identities},
      {"classical-limit", classical_limit},
      {"embedding-equivalence", embedding_equivalence},
      {"conformal-tensor-oracle", conformal_oracle},
      {"tdse-correctness", tdse_correctness},
      {"henon-heiles-divergence", henon_heiles_divergence},
      {"stability-map-structure", stability_map_structure},
      {"feit-fleck-table", table_reproduction},
      {"cross-route-consistency", cross_route},
  };

  int failed = 0, unexpected = 0, ran = 0;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && name != only) continue;
    ++ran;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) {
      ++failed;
      if (!known.count(name)) ++unexpected;
    }
    std::printf("%s %s: %s%s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
                !o.pass && known.count(name) ? " [known unattainable]" : "");
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria pass\n", ran - failed, ran);
  return unexpected == 0 ? 0 : 1;
}
