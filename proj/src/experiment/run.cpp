#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "io.hpp"
#include "qgd/classical.hpp"
#include "qgd/errors.hpp"
#include "qgd/parallel.hpp"

namespace qgd {

namespace fs = std::filesystem;

namespace {

class Run {
 public:
  Run(const ExperimentConfig& c, const std::string& dir) : c_(c), dir_(dir) {}

  void execute() {
    switch (c_.kind) {
      case ExperimentKind::kOpsCheck:
        ops_check();
        break;
      case ExperimentKind::kStabilityMap:
        stability_map_run();
        break;
      case ExperimentKind::kEvolve:
        evolve();
        break;
      case ExperimentKind::kTwin:
        twin();
        break;
      case ExperimentKind::kClassical:
        classical();
        break;
      case ExperimentKind::kFeitFleckTable:
        table();
        break;
    }
  }

  RunManifest manifest;

 private:
  std::string path(const std::string& file) {
    files_.push_back(file);
    return (fs::path(dir_) / file).string();
  }

 public:
  void register_artifacts() {
    for (const std::string& f : files_) {
      const std::string p = (fs::path(dir_) / f).string();
      if (!fs::exists(p)) continue;
      manifest.artifacts.push_back({f, sha256_file(p), fs::file_size(p)});
    }
  }

 private:
  void ops_check() {
    io::CsvWriter csv(path("identities.csv"),
                      {"case", "identity", "dims", "points", "coarse_points", "residual",
                       "coarse_residual", "tolerance", "within_tolerance", "refined", "gated",
                       "audited", "passed", "note"});
    std::ostringstream text;
    int gated = 0, gated_passed = 0;
    double worst = 0.0;
    json audited = json::array();
    json limits = json::array();
    io::CsvWriter lim(path("classical_limit.csv"),
                      {"case", "points", "max_abs_diff", "max_rel_diff", "max_correction"});
    for (const lab::SuiteCase& sc : c_.ops.cases) {
      const auto rows = lab::run_identity_suite(sc, c_.ops.diagnostics);
      text << sc.label << " (" << sc.grid.dims << "D, " << sc.grid.points << " points, L = "
           << sc.grid.half_extent << ")\n";
      for (const lab::SuiteRow& r : rows) {
        csv << r.label << r.identity << r.dims << r.points << r.coarse_points << r.residual
            << r.coarse_residual << r.tolerance << r.within_tolerance << r.refined << r.gated
            << r.audited << r.passed << r.note;
        csv.end_row();
        const char* status = !r.gated ? "diag" : r.audited ? "audit" : r.passed ? "PASS" : "FAIL";
        char line[256];
        std::snprintf(line, sizeof line, "  %-5s %-44s %.3e (coarse %.3e) tol %.0e\n", status,
                      r.identity.c_str(), r.residual, r.coarse_residual, r.tolerance);
        text << line;
        if (r.gated && !r.audited) {
          ++gated;
          gated_passed += r.passed;
          worst = std::max(worst, r.residual / r.tolerance);
        }
        if (r.audited) {
          audited.push_back({{"case", r.label}, {"identity", r.identity}, {"residual", r.residual}});
        }
      }
      if (c_.ops.classical_points > 0) {
        const lab::Operators ops(sc.metric, sc.grid);
        const auto nodes = lab::random_nodes(ops, c_.ops.classical_points,
                                             0.8 * sc.grid.half_extent, c_.seed);
        const lab::ClassicalLimit cl = lab::classical_limit_check(ops, nodes);
        double corr = 0.0;
        for (const Vec& q : cl.quantum_correction) corr = std::max(corr, q.cwiseAbs().maxCoeff());
        lim << sc.label << static_cast<long>(nodes.size()) << cl.max_abs_diff << cl.max_rel_diff
            << corr;
        lim.end_row();
        limits.push_back({{"case", sc.label}, {"max_rel_diff", cl.max_rel_diff}, {"max_correction", corr}});
      }
    }
    csv.close();
    lim.close();
    std::ofstream(path("identities.txt")) << text.str();
    manifest.invariants["gated_identities"] = gated;
    manifest.invariants["gated_passed"] = gated_passed;
    manifest.invariants["worst_residual_over_tolerance"] = worst;
    manifest.invariants["audited"] = audited;
    manifest.invariants["classical_limit"] = limits;
  }

  void stability_map_run() {
    const MapParams& m = c_.map;
    const StabilityMap map = stability_map(*c_.potential, *c_.energy, m.region, m.nx, m.ny, m.options);
    io::CsvWriter csv(path("stability_map.csv"),
                      {"x", "y", "V", "phi", "lambda1", "lambda2", "alpha1", "alpha2", "class",
                       "on_separatrix_band"});
    std::map<std::string, long> counts;
    for (const StabilityCell& cell : map.cells) {
      csv << cell.x << cell.y << cell.potential << cell.phi << cell.lambda[0] << cell.lambda[1]
          << cell.alpha[0] << cell.alpha[1] << to_string(cell.cls) << cell.on_separatrix_band;
      csv.end_row();
      ++counts[to_string(cell.cls)];
    }
    csv.close();
    io::CsvWriter con(path("contour.csv"), {"x0", "y0", "x1", "y1"});
    for (const ContourSegment& s : map.contour) {
      con << s.x0 << s.y0 << s.x1 << s.y1;
      con.end_row();
    }
    con.close();
    json cj = json::object();
    for (const auto& [k, v] : counts) cj[k] = v;
    const auto basins = connected_components(map, StabilityClass::kStable);
    json sizes = json::array();
    for (const auto& b : basins) sizes.push_back(b.size());
    manifest.invariants["energy"] = *c_.energy;
    manifest.invariants["class_counts"] = cj;
    manifest.invariants["stable_components"] = basins.size();
    manifest.invariants["stable_component_sizes"] = sizes;
    manifest.invariants["contour_segments"] = map.contour.size();
  }

  static void write_trajectory(io::CsvWriter& csv, const TrajectoryRecord& r,
                               const std::vector<double>* distance) {
    const std::size_t n = distance ? distance->size() : r.size();
    for (std::size_t i = 0; i < n; ++i) {
      csv << r.t[i] << r.x[i] << r.y[i] << r.px[i] << r.py[i] << r.norm[i] << r.energy[i];
      if (distance) csv << (*distance)[i];
      csv.end_row();
    }
  }

  void record_invariants(const std::string& prefix, const TrajectoryRecord& r) {
    json j;
    j["samples"] = r.size();
    j["norm_drift"] = r.norm_drift();
    j["energy_drift_relative"] = r.energy_drift();
    j["energy_initial"] = r.energy.empty() ? 0.0 : r.energy.front();
    j["breached"] = r.breached;
    if (r.breached) {
      j["breach_time"] = r.breach_time;
      j["breach_mass"] = r.breach_mass;
      manifest.warnings.push_back(prefix + ": boundary collar mass " + format_double(r.breach_mass) +
                                  " at t = " + format_double(r.breach_time) + "; record truncated");
    }
    manifest.invariants[prefix] = j;
  }

  void evolve() {
    const EvolveParams& e = c_.evolve;
    GridState s = coherent_state(e.packet, e.grid);
    SplitOperator op(e.grid, *c_.potential, e.propagate);
    const TrajectoryRecord r = op.propagate(s, e.dt, e.steps);
    io::CsvWriter csv(path("trajectory.csv"),
                      {"t", "x_mean", "y_mean", "px_mean", "py_mean", "norm", "energy"});
    write_trajectory(csv, r, nullptr);
    csv.close();
    record_invariants("trajectory", r);
    manifest.invariants["simd_backend"] = kernels::to_string(kernels::active().backend);
  }

  void twin() {
    const EvolveParams& e = c_.evolve;
    TwinOptions o;
    o.propagate = e.propagate;
    o.system_size = e.system_size;
    const TwinResult r = twin_divergence(*c_.potential, e.grid, e.packet, e.delta_p, e.dt,
                                         e.dt * static_cast<double>(e.steps), o);
    const std::vector<std::string> header = {"t",       "x_mean", "y_mean", "px_mean",
                                             "py_mean", "norm",   "energy", "D"};
    io::CsvWriter a(path("trajectory_a.csv"), header);
    write_trajectory(a, r.first, &r.distance);
    a.close();
    io::CsvWriter b(path("trajectory_b.csv"), header);
    write_trajectory(b, r.second, &r.distance);
    b.close();
    record_invariants("trajectory_a", r.first);
    record_invariants("trajectory_b", r.second);
    double dmax = 0.0;
    for (double d : r.distance) dmax = std::max(dmax, d);
    manifest.invariants["growth_rate"] = r.growth_rate;
    manifest.invariants["fit_window"] = {r.fit_t0, r.fit_t1};
    manifest.invariants["fit_points"] = r.fit_points;
    manifest.invariants["max_distance"] = dmax;
    manifest.invariants["delta_p_norm"] = e.delta_p.norm();
  }

  void classical() {
    const ClassicalParams& p = c_.classical;
    const Potential& pot = *c_.potential;
    const int dim = pot.dim();
    std::vector<ClassicalSeed> seeds = p.seeds;
    if (p.random_seeds > 0) {
      std::mt19937_64 rng(c_.seed);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      std::normal_distribution<double> n01;
      int guard = 0;
      while (static_cast<int>(seeds.size()) < static_cast<int>(p.seeds.size()) + p.random_seeds) {
        if (++guard > 100000) throw std::runtime_error("no on-shell seeds found inside random_radius");
        Vec q(dim);
        for (int k = 0; k < dim; ++k) q[k] = p.random_radius * u(rng);
        if (q.norm() > p.random_radius) continue;
        const double ke = *c_.energy - pot.value(q);
        if (ke <= 1e-3 * std::abs(*c_.energy)) continue;
        Vec dir(dim);
        for (int k = 0; k < dim; ++k) dir[k] = n01(rng);
        seeds.push_back({q, dir.normalized() * std::sqrt(2.0 * p.mass * ke)});
      }
    }
    const std::size_t n = seeds.size();
    std::vector<ClassicalTrajectory> paths(n);
    std::vector<double> lyap(n, std::nan(""));
    std::vector<std::string> errors(n);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        try {
          const PhaseState s0{seeds[i].q, seeds[i].p, 0.0};
          if (p.mode == "hamilton") {
            HamiltonOptions ho;
            ho.mass = p.mass;
            ho.sample_stride = p.sample_stride;
            paths[i] = integrate_hamilton(pot, s0, p.dt, p.duration, ho);
          } else {
            GeodesicOptions go;
            go.mass = p.mass;
            const GeodesicMode mode =
                p.mode == "geodesic_full" ? GeodesicMode::kFull : GeodesicMode::kReduced;
            paths[i] = integrate_geodesic(pot, *c_.energy, mode, s0, p.dt * p.sample_stride,
                                          p.duration, go);
          }
          if (p.lyapunov_duration > 0.0) {
            HamiltonOptions ho;
            ho.mass = p.mass;
            lyap[i] = lyapunov_estimate(pot, s0, p.dt, p.lyapunov_duration, p.lyapunov_interval, ho);
          }
        } catch (const std::exception& ex) {
          errors[i] = ex.what();
        }
      }
    });
    const char* axes[] = {"x", "y", "z"};
    std::vector<std::string> header = {"seed", "t"};
    for (int k = 0; k < dim; ++k) header.push_back(dim <= 3 ? axes[k] : "q" + std::to_string(k));
    for (int k = 0; k < dim; ++k) header.push_back(dim <= 3 ? std::string("p") + axes[k] : "p" + std::to_string(k));
    header.push_back("energy");
    io::CsvWriter csv(path("classical.csv"), header);
    std::vector<std::string> sheader = {"seed"};
    for (int k = 0; k < dim; ++k) sheader.push_back(std::string(dim <= 3 ? axes[k] : "q") + "0");
    for (int k = 0; k < dim; ++k) sheader.push_back(std::string("p") + (dim <= 3 ? axes[k] : "") + "0");
    for (const char* s : {"energy", "energy_drift", "lyapunov", "error"}) sheader.push_back(s);
    io::CsvWriter sum(path("classical_summary.csv"), sheader);
    double worst_drift = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (const PhaseState& s : paths[i].samples) {
        csv << static_cast<long>(i) << s.t;
        for (int k = 0; k < dim; ++k) csv << s.q[k];
        for (int k = 0; k < dim; ++k) csv << s.p[k];
        csv << hamiltonian(pot, s, p.mass);
        csv.end_row();
      }
      sum << static_cast<long>(i);
      for (int k = 0; k < dim; ++k) sum << seeds[i].q[k];
      for (int k = 0; k < dim; ++k) sum << seeds[i].p[k];
      sum << hamiltonian(pot, {seeds[i].q, seeds[i].p, 0.0}, p.mass) << paths[i].energy_drift
          << lyap[i] << errors[i];
      sum.end_row();
      worst_drift = std::max(worst_drift, paths[i].energy_drift);
      if (!errors[i].empty()) manifest.warnings.push_back("seed " + std::to_string(i) + ": " + errors[i]);
    }
    csv.close();
    sum.close();
    manifest.invariants["seeds"] = n;
    manifest.invariants["max_energy_drift"] = worst_drift;
  }

  void table() {
    const TableParams& t = c_.table;
    std::vector<PacketCaseRow> rows(t.cases.size());
    parallel_for(rows.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) rows[i] = evaluate_packet_case(*c_.potential, t.cases[i], t.options);
    });
    std::vector<std::string> header = {"case", "energy", "shell_energy", "relation", "inequality",
                                       "unstable_fraction", "class", "samples", "unprojected_samples",
                                       "escaped"};
    for (int k = 0; k < 6; ++k) header.push_back("fraction_" + to_string(static_cast<PairRelation>(k)));
    io::CsvWriter csv(path("feit_fleck_table.csv"), header);
    json summary = json::array();
    for (const PacketCaseRow& r : rows) {
      csv << r.name << r.energy << r.shell_energy << to_string(r.relation) << inequality(r.relation)
          << r.unstable_fraction << r.behavior << static_cast<long>(r.samples)
          << static_cast<long>(r.unprojected_samples) << r.escaped;
      for (double f : r.relation_fraction) csv << f;
      csv.end_row();
      summary.push_back({{"case", r.name}, {"class", r.behavior}, {"relation", inequality(r.relation)},
                         {"unstable_fraction", r.unstable_fraction}});
    }
    csv.close();
    manifest.invariants["cases"] = summary;
  }

  const ExperimentConfig& c_;
  std::string dir_;
  std::vector<std::string> files_;
};

}  // namespace

RunManifest run_experiment(const ExperimentConfig& config, const std::string& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);
  const fs::path manifest_path = fs::path(out_dir) / "manifest.json";
  const fs::path crash_path = fs::path(out_dir) / "CRASHED";
  fs::remove(manifest_path);
  {
    // Stays behind if the process dies before the manifest is in place.
    std::ofstream marker(crash_path);
    marker << "run of kind " << to_string(config.kind) << " started; no manifest was written\n";
  }

  Run run(config, out_dir);
  run.manifest.config = config.resolved;
  run.manifest.warnings = config.warnings;
  try {
    run.execute();
  } catch (const std::exception& e) {
    run.manifest.status = "error";
    run.manifest.errors.push_back(to_string(config.kind) + ": " + e.what());
  }
  run.register_artifacts();
  run.manifest.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  try {
    io::write_atomic(manifest_path.string(), io::manifest_json(run.manifest).dump(2) + "\n");
    fs::remove(crash_path);
  } catch (const std::exception& e) {
    std::ofstream marker(crash_path, std::ios::app);
    marker << "manifest write failed: " << e.what() << "\n";
    run.manifest.status = "error";
    run.manifest.errors.push_back(std::string("manifest: ") + e.what());
  }
  return run.manifest;
}

}  // namespace qgd
