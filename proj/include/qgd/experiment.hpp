#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgd/operator_lab.hpp"
#include "qgd/stability.hpp"
#include "qgd/tdse.hpp"

namespace qgd {

using json = nlohmann::ordered_json;

enum class ExperimentKind { kOpsCheck, kStabilityMap, kEvolve, kTwin, kClassical, kFeitFleckTable };
std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

inline constexpr int kConfigVersion = 1;

struct OpsCheckParams {
  bool standard = true;
  std::vector<lab::SuiteCase> cases;  // used when !standard
  bool diagnostics = true;
  int classical_points = 20;
};

struct MapParams {
  PlanarRegion region;
  int nx = 200, ny = 200;
  StabilityMapOptions options;
};

struct EvolveParams {
  GridSpec grid;
  CoherentSpec packet;
  double dt = 1e-3;
  long steps = 1000;
  PropagateOptions propagate;
  Vec delta_p;              // twin only
  double system_size = 0.0;  // twin only
};

struct ClassicalSeed {
  Vec q, p;
};

struct ClassicalParams {
  std::vector<ClassicalSeed> seeds;
  std::string mode = "hamilton";  // hamilton | geodesic_full | geodesic_reduced
  double dt = 1e-3;
  double duration = 10.0;
  int sample_stride = 10;
  double mass = 1.0;
  double lyapunov_duration = 0.0;  // 0 = skip
  double lyapunov_interval = 1.0;
  int random_seeds = 0;  // extra on-shell seeds drawn with the rng seed
  double random_radius = 1.0;
};

struct TableParams {
  std::vector<PacketCase> cases;
  PacketCaseOptions options;
};

struct ExperimentConfig {
  int version = kConfigVersion;
  ExperimentKind kind = ExperimentKind::kEvolve;
  std::optional<Potential> potential;
  json potential_echo;
  std::optional<double> energy;
  json energy_echo;  // as written (number or separatrix object)
  std::uint64_t seed = 0;
  std::string out_dir;

  OpsCheckParams ops;
  MapParams map;
  EvolveParams evolve;
  ClassicalParams classical;
  TableParams table;

  std::vector<std::string> warnings;
  json resolved;  // full config echo with defaults applied
};

/// Strict parse: unknown keys, wrong types and missing required fields throw
/// ConfigError naming the offending key path.
ExperimentConfig parse_config(const json& document);
/// Reads and parses a file; JSON syntax errors carry line and column.
ExperimentConfig validate_config(const std::string& path);

struct Artifact {
  std::string file;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string status = "ok";  // ok | error
  json config;
  std::vector<Artifact> artifacts;
  json invariants = json::object();
  std::vector<std::string> warnings;
  std::vector<std::string> errors;
  double wall_time = 0.0;
};

/// Dispatches to the owning module and writes CSVs, then manifest.json last
/// (temporary file + rename). A failure to write the manifest leaves a
/// CRASHED marker instead.
RunManifest run_experiment(const ExperimentConfig& config, const std::string& out_dir);

std::string sha256_file(const std::string& path);

/// Fixed-width helpers shared by the writers: 17 significant digits.
std::string format_double(double v);

}  // namespace qgd
