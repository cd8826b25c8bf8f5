#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "qgd/errors.hpp"
#include "qgd/experiment.hpp"

namespace qgd {

namespace {

const char* kKindNames[] = {"ops-check", "stability-map", "evolve",
                            "twin",      "classical",     "feit-fleck-table"};

std::string section_name(ExperimentKind kind) {
  std::string s = to_string(kind);
  for (char& c : s) {
    if (c == '-') c = '_';
  }
  return s;
}

// Strict reader over one JSON object: every key must be consumed.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) {
    return has(key) ? required_number(key) : fallback;
  }
  double required_number(const std::string& key) {
    const json& v = need(key);
    if (!v.is_number()) throw ConfigError(at(key) + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(at(key) + ": must be finite");
    return d;
  }
  long integer(const std::string& key, long fallback) {
    if (!has(key)) return fallback;
    const json& v = need(key);
    if (!v.is_number_integer()) throw ConfigError(at(key) + ": expected an integer");
    return v.get<long>();
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = need(key);
    if (!v.is_boolean()) throw ConfigError(at(key) + ": expected true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? required_string(key) : fallback;
  }
  std::string required_string(const std::string& key) {
    const json& v = need(key);
    if (!v.is_string()) throw ConfigError(at(key) + ": expected a string");
    return v.get<std::string>();
  }
  std::vector<double> numbers(const std::string& key, std::size_t count) {
    const json& v = need(key);
    if (!v.is_array() || (count && v.size() != count)) {
      throw ConfigError(at(key) + ": expected an array of " +
                        (count ? std::to_string(count) + " " : std::string()) + "numbers");
    }
    std::vector<double> out;
    for (const json& e : v) {
      if (!e.is_number()) throw ConfigError(at(key) + ": expected numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  Obj object(const std::string& key) { return Obj(need(key), at(key)); }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const std::string& path() const { return path_; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown key '" + at(it.key()) + "'");
    }
  }

 private:
  const json& need(const std::string& key) {
    if (!has(key)) throw ConfigError("missing required key '" + at(key) + "'");
    seen_.insert(key);
    return j_.at(key);
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

GridSpec parse_grid(Obj& section, json& echo) {
  GridSpec g;
  if (section.has("grid")) {
    Obj o = section.object("grid");
    if (o.has("points")) {
      const json& p = o.raw("points");
      if (p.is_number_integer()) {
        g.nx = g.ny = p.get<int>();
      } else if (p.is_array() && p.size() == 2 && p[0].is_number_integer() && p[1].is_number_integer()) {
        g.nx = p[0].get<int>();
        g.ny = p[1].get<int>();
      } else {
        throw ConfigError(o.at("points") + ": expected an integer or [nx, ny]");
      }
    }
    if (o.has("extent")) {
      const auto e = o.numbers("extent", 4);
      g.x_min = e[0], g.x_max = e[1], g.y_min = e[2], g.y_max = e[3];
    }
    g.collar_fraction = o.number("collar_fraction", g.collar_fraction);
    o.finish();
  }
  try {
    validate(g);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(section.at("grid") + ": " + e.what());
  }
  echo["grid"] = {{"points", {g.nx, g.ny}},
                  {"extent", {g.x_min, g.x_max, g.y_min, g.y_max}},
                  {"collar_fraction", g.collar_fraction}};
  return g;
}

CoherentSpec parse_packet(Obj& section, json& echo) {
  CoherentSpec s;
  Obj o = section.object("packet");
  s.x0 = o.number("x0", 0.0);
  s.y0 = o.number("y0", 0.0);
  s.px0 = o.number("px0", 0.0);
  s.py0 = o.number("py0", 0.0);
  s.width = o.number("width", 1.0);
  o.finish();
  require(s.width > 0.0, o.at("width") + ": must be positive");
  echo["packet"] = {{"x0", s.x0}, {"y0", s.y0}, {"px0", s.px0}, {"py0", s.py0}, {"width", s.width}};
  return s;
}

StabilityOptions parse_stability(Obj& o, json& echo) {
  StabilityOptions s;
  try {
    s.convention = q_tilde_convention_from_string(
        o.string("convention", to_string(QTildeConvention::kMetricMinusIdentity)));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(o.at("convention") + ": " + e.what());
  }
  s.guard = o.number("guard", s.guard);
  s.tie_relative = o.number("tie_relative", s.tie_relative);
  require(s.tie_relative >= 0.0, o.at("tie_relative") + ": must be >= 0");
  echo["convention"] = to_string(s.convention);
  echo["guard"] = s.guard;
  echo["tie_relative"] = s.tie_relative;
  return s;
}

void parse_ops(ExperimentConfig& c, Obj& o, json& echo) {
  c.ops.diagnostics = o.boolean("diagnostics", true);
  c.ops.classical_points = static_cast<int>(o.integer("classical_points", 20));
  require(c.ops.classical_points >= 0, o.at("classical_points") + ": must be >= 0");
  echo["diagnostics"] = c.ops.diagnostics;
  echo["classical_points"] = c.ops.classical_points;
  if (!o.has("cases") || (o.raw("cases").is_string() && o.raw("cases") == "standard")) {
    c.ops.standard = true;
    c.ops.cases = lab::standard_suite(c.seed);
    echo["cases"] = "standard";
    return;
  }
  const json& arr = o.raw("cases");
  require(arr.is_array() && !arr.empty(), o.at("cases") + ": expected \"standard\" or a case list");
  c.ops.standard = false;
  json cases = json::array();
  for (std::size_t k = 0; k < arr.size(); ++k) {
    Obj co(arr[k], o.at("cases") + "[" + std::to_string(k) + "]");
    lab::SuiteCase sc;
    const std::string metric = co.required_string("metric");
    sc.grid.dims = static_cast<int>(co.integer("dims", 1));
    require(sc.grid.dims == 1 || sc.grid.dims == 2, co.at("dims") + ": must be 1 or 2");
    sc.grid.points = static_cast<int>(co.integer("points", sc.grid.dims == 1 ? 256 : 64));
    sc.grid.half_extent = co.number("half_extent", sc.grid.dims == 1 ? 10.0 : 3.0);
    sc.coarse_points = static_cast<int>(co.integer("coarse_points", 0));
    sc.probe_count = static_cast<int>(co.integer("probes", 5));
    sc.probe_width = co.number("probe_width", 0.3);
    sc.center_radius = co.number("center_radius", 1.0);
    sc.tolerance = co.number("tolerance", sc.grid.dims == 1 ? 1e-6 : 1e-5);
    const double taper = co.number("taper_width", 0.6);
    sc.seed = c.seed;
    if (metric == "flat") {
      sc.metric = lab::flat_metric();
    } else if (metric == "bump") {
      sc.metric = lab::bump_metric(sc.grid.dims);
    } else if (metric == "conformal") {
      require(c.potential.has_value(), co.at("metric") + ": conformal needs a top-level potential");
      require(c.energy.has_value(), co.at("metric") + ": conformal needs a top-level energy");
      require(c.potential->dim() == sc.grid.dims ||
                  c.potential->kind() == PotentialKind::kFree ||
                  c.potential->kind() == PotentialKind::kHarmonic,
              co.at("dims") + ": potential dimension mismatch");
      auto params = c.potential->params();
      const Potential p = Potential::from_params(c.potential->name(), params, sc.grid.dims);
      sc.metric = lab::conformal_metric(p, *c.energy, taper);
    } else {
      throw ConfigError(co.at("metric") + ": unknown metric '" + metric + "' (flat, conformal, bump)");
    }
    sc.label = co.string("label", metric + "-" + std::to_string(sc.grid.dims) + "d");
    co.finish();
    require(sc.grid.points >= 8 && sc.grid.points % 2 == 0, co.at("points") + ": must be even and >= 8");
    require(sc.probe_count > 0, co.at("probes") + ": must be positive");
    cases.push_back({{"label", sc.label},
                     {"metric", metric},
                     {"dims", sc.grid.dims},
                     {"points", sc.grid.points},
                     {"half_extent", sc.grid.half_extent},
                     {"coarse_points", sc.coarse_points},
                     {"probes", sc.probe_count},
                     {"probe_width", sc.probe_width},
                     {"center_radius", sc.center_radius},
                     {"tolerance", sc.tolerance},
                     {"taper_width", taper}});
    c.ops.cases.push_back(std::move(sc));
  }
  echo["cases"] = cases;
}

void parse_map(ExperimentConfig& c, Obj& o, json& echo) {
  require(c.energy.has_value(), "stability-map needs a top-level energy");
  MapParams& m = c.map;
  if (o.has("region")) {
    const auto r = o.numbers("region", 4);
    m.region = {r[0], r[1], r[2], r[3]};
  }
  require(m.region.x_max > m.region.x_min && m.region.y_max > m.region.y_min,
          o.at("region") + ": must be [x_min, x_max, y_min, y_max] with positive extent");
  if (o.has("cells")) {
    const auto n = o.numbers("cells", 2);
    m.nx = static_cast<int>(n[0]);
    m.ny = static_cast<int>(n[1]);
  }
  require(m.nx >= 2 && m.ny >= 2, o.at("cells") + ": at least 2 x 2");
  m.options.mark_outside_shell = o.boolean("mark_outside_shell", false);
  m.options.stability = parse_stability(o, echo);
  echo["region"] = {m.region.x_min, m.region.x_max, m.region.y_min, m.region.y_max};
  echo["cells"] = {m.nx, m.ny};
  echo["mark_outside_shell"] = m.options.mark_outside_shell;
}

void parse_evolve(ExperimentConfig& c, Obj& o, json& echo, bool twin) {
  EvolveParams& e = c.evolve;
  e.grid = parse_grid(o, echo);
  e.packet = parse_packet(o, echo);
  e.dt = o.number("dt", 1e-3);
  require(e.dt > 0.0, o.at("dt") + ": must be positive");
  require(!(o.has("steps") && o.has("duration")), o.path() + ": give steps or duration, not both");
  if (o.has("duration")) {
    const double d = o.required_number("duration");
    require(d >= 0.0, o.at("duration") + ": must be >= 0");
    e.steps = std::lround(d / e.dt);
  } else {
    e.steps = o.integer("steps", e.steps);
  }
  require(e.steps >= 0, o.at("steps") + ": must be >= 0");
  e.propagate.mass = o.number("mass", 1.0);
  require(e.propagate.mass > 0.0, o.at("mass") + ": must be positive");
  e.propagate.sample_stride = static_cast<int>(o.integer("sample_stride", 10));
  require(e.propagate.sample_stride >= 1, o.at("sample_stride") + ": must be >= 1");
  e.propagate.collar_threshold = o.number("collar_threshold", 1e-8);
  echo["dt"] = e.dt;
  echo["steps"] = e.steps;
  echo["mass"] = e.propagate.mass;
  echo["sample_stride"] = e.propagate.sample_stride;
  echo["collar_threshold"] = e.propagate.collar_threshold;
  if (twin) {
    e.delta_p = to_vec(o.numbers("delta_p", 2));
    e.system_size = o.number("system_size", 0.0);
    require(e.system_size >= 0.0, o.at("system_size") + ": must be >= 0");
    echo["delta_p"] = vec_json(e.delta_p);
    echo["system_size"] = e.system_size;
  }
}

void parse_classical(ExperimentConfig& c, Obj& o, json& echo) {
  ClassicalParams& p = c.classical;
  p.mode = o.string("mode", "hamilton");
  require(p.mode == "hamilton" || p.mode == "geodesic_full" || p.mode == "geodesic_reduced",
          o.at("mode") + ": one of hamilton, geodesic_full, geodesic_reduced");
  if (p.mode != "hamilton") require(c.energy.has_value(), "geodesic modes need a top-level energy");
  const int dim = c.potential->dim();
  json seeds = json::array();
  if (o.has("seeds")) {
    const json& arr = o.raw("seeds");
    require(arr.is_array(), o.at("seeds") + ": expected an array");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      Obj so(arr[k], o.at("seeds") + "[" + std::to_string(k) + "]");
      ClassicalSeed s{to_vec(so.numbers("q", dim)), to_vec(so.numbers("p", dim))};
      so.finish();
      seeds.push_back({{"q", vec_json(s.q)}, {"p", vec_json(s.p)}});
      p.seeds.push_back(std::move(s));
    }
  }
  p.random_seeds = static_cast<int>(o.integer("random_seeds", 0));
  p.random_radius = o.number("random_radius", 1.0);
  require(p.random_seeds >= 0, o.at("random_seeds") + ": must be >= 0");
  require(!p.seeds.empty() || p.random_seeds > 0, o.path() + ": needs seeds or random_seeds");
  require(p.random_seeds == 0 || c.energy.has_value(), "random_seeds needs a top-level energy");
  p.dt = o.number("dt", 1e-3);
  p.duration = o.number("duration", 10.0);
  p.sample_stride = static_cast<int>(o.integer("sample_stride", 10));
  p.mass = o.number("mass", 1.0);
  p.lyapunov_duration = o.number("lyapunov_duration", 0.0);
  p.lyapunov_interval = o.number("lyapunov_interval", 1.0);
  require(p.dt > 0.0 && p.duration > 0.0, o.path() + ": dt and duration must be positive");
  require(p.sample_stride >= 1, o.at("sample_stride") + ": must be >= 1");
  require(p.mass > 0.0, o.at("mass") + ": must be positive");
  echo["mode"] = p.mode;
  echo["seeds"] = seeds;
  echo["random_seeds"] = p.random_seeds;
  echo["random_radius"] = p.random_radius;
  echo["dt"] = p.dt;
  echo["duration"] = p.duration;
  echo["sample_stride"] = p.sample_stride;
  echo["mass"] = p.mass;
  echo["lyapunov_duration"] = p.lyapunov_duration;
  echo["lyapunov_interval"] = p.lyapunov_interval;
}

void parse_table(ExperimentConfig& c, Obj& o, json& echo) {
  require(c.potential->dim() == 2, "feit-fleck-table needs a planar potential");
  TableParams& t = c.table;
  const json& arr = o.raw("cases");
  require(arr.is_array() && !arr.empty(), o.at("cases") + ": expected a non-empty array");
  json cases = json::array();
  for (std::size_t k = 0; k < arr.size(); ++k) {
    Obj co(arr[k], o.at("cases") + "[" + std::to_string(k) + "]");
    PacketCase pc;
    pc.name = co.required_string("name");
    pc.q0 = to_vec(co.numbers("q0", 2));
    pc.p0 = to_vec(co.numbers("p0", 2));
    pc.width = co.number("width", 1.0);
    co.finish();
    require(pc.width > 0.0, co.at("width") + ": must be positive");
    cases.push_back({{"name", pc.name}, {"q0", vec_json(pc.q0)}, {"p0", vec_json(pc.p0)}, {"width", pc.width}});
    t.cases.push_back(std::move(pc));
  }
  PacketCaseOptions& p = t.options;
  p.stability = parse_stability(o, echo);
  p.mass = o.number("mass", p.mass);
  p.dt = o.number("dt", p.dt);
  p.duration = o.number("duration", p.duration);
  p.sample_stride = static_cast<int>(o.integer("sample_stride", p.sample_stride));
  p.footprint_sigmas = o.number("footprint_sigmas", p.footprint_sigmas);
  p.footprint_rings = static_cast<int>(o.integer("footprint_rings", p.footprint_rings));
  p.footprint_angles = static_cast<int>(o.integer("footprint_angles", p.footprint_angles));
  p.escape_radius = o.number("escape_radius", p.escape_radius);
  p.chaotic_fraction = o.number("chaotic_fraction", p.chaotic_fraction);
  const std::string shell = o.string("shell_energy", "path");
  require(shell == "path" || shell == "packet", o.at("shell_energy") + ": path or packet");
  p.shell_from_packet = shell == "packet";
  require(p.dt > 0.0 && p.duration > 0.0, o.path() + ": dt and duration must be positive");
  require(p.sample_stride >= 1 && p.footprint_rings >= 0 && p.footprint_angles >= 1,
          o.path() + ": footprint and stride counts must be positive");
  echo["cases"] = cases;
  echo["mass"] = p.mass;
  echo["dt"] = p.dt;
  echo["duration"] = p.duration;
  echo["sample_stride"] = p.sample_stride;
  echo["footprint_sigmas"] = p.footprint_sigmas;
  echo["footprint_rings"] = p.footprint_rings;
  echo["footprint_angles"] = p.footprint_angles;
  echo["escape_radius"] = p.escape_radius;
  echo["chaotic_fraction"] = p.chaotic_fraction;
  echo["shell_energy"] = shell;
}

double resolve_energy(ExperimentConfig& c, Obj& top) {
  const json& e = top.raw("energy");
  if (e.is_number()) return e.get<double>();
  Obj o(e, "energy");
  require(c.potential.has_value(), "energy: relative forms need a potential");
  double value = 0.0;
  if (o.has("separatrix_offset")) {
    require(c.potential->dim() == 2, "energy.separatrix_offset needs a planar potential");
    const double offset = o.required_number("separatrix_offset");
    Vec near = Vec::Zero(2);
    if (o.has("near")) near = to_vec(o.numbers("near", 2));
    const double half = o.number("search_half_extent", 4.0);
    Box box{Vec::Constant(2, -half), Vec::Constant(2, half)};
    const CriticalSearch cs = find_critical_points(*c.potential, box, 1e-10);
    const double sep = separatrix_energy(*c.potential, cs, near);
    require(std::isfinite(sep), "energy.separatrix_offset: no saddle adjacent to the well near " +
                                    std::to_string(near[0]) + ", " + std::to_string(near[1]));
    value = sep + offset;
  } else if (o.has("escape_fraction")) {
    const double f = o.required_number("escape_fraction");
    const double esc = c.potential->escape_energy();
    require(std::isfinite(esc), "energy.escape_fraction: potential has no escape energy");
    value = f * esc;
  } else {
    throw ConfigError("energy: expected a number, {\"separatrix_offset\": ...} or {\"escape_fraction\": ...}");
  }
  o.finish();
  return value;
}

}  // namespace

std::string to_string(ExperimentKind kind) { return kKindNames[static_cast<int>(kind)]; }

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (int k = 0; k < 6; ++k) {
    if (name == kKindNames[k]) return static_cast<ExperimentKind>(k);
  }
  throw ConfigError("unknown experiment kind '" + name +
                    "' (ops-check, stability-map, evolve, twin, classical, feit-fleck-table)");
}

ExperimentConfig parse_config(const json& document) {
  Obj top(document, "");
  ExperimentConfig c;
  require(top.has("version"), "missing required key 'version'");
  const json& ver = top.raw("version");
  require(ver.is_number_integer(), "version: expected an integer");
  c.version = ver.get<int>();
  require(c.version == kConfigVersion,
          "version: unsupported config version " + std::to_string(c.version) + " (expected " +
              std::to_string(kConfigVersion) + ")");
  c.kind = experiment_kind_from_string(top.required_string("kind"));
  c.seed = static_cast<std::uint64_t>(top.integer("seed", 0));
  c.out_dir = top.string("out_dir", "");

  json echo;
  echo["version"] = c.version;
  echo["kind"] = to_string(c.kind);
  echo["seed"] = c.seed;

  if (top.has("potential")) {
    Obj p = top.object("potential");
    const std::string kind = p.required_string("kind");
    std::map<std::string, double> params;
    if (p.has("params")) {
      const json& pj = p.raw("params");
      require(pj.is_object(), "potential.params: expected an object");
      for (auto it = pj.begin(); it != pj.end(); ++it) {
        require(it.value().is_number(), "potential.params." + it.key() + ": expected a number");
        params[it.key()] = it.value().get<double>();
      }
    }
    const int dim = static_cast<int>(p.integer("dim", 2));
    p.finish();
    try {
      c.potential = Potential::from_params(kind, params, dim);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("potential: ") + e.what());
    }
    json pe;
    pe["kind"] = kind;
    json pp = json::object();
    for (const auto& [k, v] : c.potential->params()) pp[k] = v;
    pe["params"] = pp;
    pe["dim"] = c.potential->dim();
    c.potential_echo = pe;
    echo["potential"] = pe;
  } else {
    require(c.kind == ExperimentKind::kOpsCheck, "missing required key 'potential'");
  }

  if (top.has("energy")) {
    c.energy_echo = top.raw("energy");
    c.energy = resolve_energy(c, top);
    echo["energy"] = *c.energy;
    if (!c.energy_echo.is_number()) echo["energy_spec"] = c.energy_echo;
  }

  const std::string section = section_name(c.kind);
  for (const char* other : kKindNames) {
    std::string s = other;
    for (char& ch : s) {
      if (ch == '-') ch = '_';
    }
    if (s != section && top.has(s)) {
      throw ConfigError("section '" + s + "' does not apply to kind '" + to_string(c.kind) + "'");
    }
  }
  json sec_echo = json::object();
  const json empty = json::object();
  Obj sec = top.has(section) ? top.object(section) : Obj(empty, section);
  switch (c.kind) {
    case ExperimentKind::kOpsCheck:
      parse_ops(c, sec, sec_echo);
      break;
    case ExperimentKind::kStabilityMap:
      require(c.potential->dim() == 2, "stability-map needs a planar potential");
      parse_map(c, sec, sec_echo);
      break;
    case ExperimentKind::kEvolve:
      parse_evolve(c, sec, sec_echo, false);
      break;
    case ExperimentKind::kTwin:
      parse_evolve(c, sec, sec_echo, true);
      break;
    case ExperimentKind::kClassical:
      parse_classical(c, sec, sec_echo);
      break;
    case ExperimentKind::kFeitFleckTable:
      parse_table(c, sec, sec_echo);
      break;
  }
  sec.finish();
  top.finish();
  echo[section] = sec_echo;

  if (c.kind == ExperimentKind::kEvolve || c.kind == ExperimentKind::kTwin) {
    require(c.potential->dim() == 2, to_string(c.kind) + " needs a planar potential");
  }
  if (c.kind == ExperimentKind::kStabilityMap) {
    // The classically allowed region is empty below the global minimum; the
    // map is still meaningful (every cell is outside the shell).
    const MapParams& m = c.map;
    double vmin = std::numeric_limits<double>::infinity();
    for (int j = 0; j <= 40; ++j)
      for (int i = 0; i <= 40; ++i) {
        vmin = std::min(vmin, c.potential->value2(m.region.x_min + (m.region.x_max - m.region.x_min) * i / 40.0,
                                                  m.region.y_min + (m.region.y_max - m.region.y_min) * j / 40.0));
      }
    Box box{Vec(2), Vec(2)};
    box.lo << m.region.x_min, m.region.y_min;
    box.hi << m.region.x_max, m.region.y_max;
    for (const CriticalPoint& p : find_critical_points(*c.potential, box, 1e-10, 11).points) {
      if (p.kind == CriticalKind::kMinimum) vmin = std::min(vmin, p.energy);
    }
    if (*c.energy < vmin) {
      c.warnings.push_back("empty classical region: E = " + format_double(*c.energy) +
                           " is below the potential minimum " + format_double(vmin) +
                           " in the map region");
    }
  }
  c.resolved = echo;
  return c;
}

ExperimentConfig validate_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // Byte offset -> line and column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": JSON parse error: " + e.what());
  }
  return parse_config(doc);
}

}  // namespace qgd
