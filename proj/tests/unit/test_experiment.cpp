#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "qgd/errors.hpp"
#include "qgd/experiment.hpp"

using namespace qgd;
namespace fs = std::filesystem;

namespace {

json base_evolve() {
  return json::parse(R"({
    "version": 1, "kind": "evolve",
    "potential": {"kind": "harmonic", "params": {"omega": 1}},
    "evolve": {"grid": {"points": 64, "extent": [-8, 8, -8, 8]},
               "packet": {"x0": 1, "y0": 0, "px0": 0, "py0": 0.5, "width": 1},
               "dt": 0.01, "steps": 50, "sample_stride": 10}
  })");
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qgd_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string error_of(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, ValidEvolveParses) {
  const ExperimentConfig c = parse_config(base_evolve());
  EXPECT_EQ(c.kind, ExperimentKind::kEvolve);
  EXPECT_EQ(c.evolve.grid.nx, 64);
  EXPECT_EQ(c.evolve.steps, 50);
  EXPECT_EQ(c.resolved["evolve"]["dt"], 0.01);
}

TEST(Config, UnknownKeysNamePath) {
  json d = base_evolve();
  d["evolve"]["packet"]["wdith"] = 1.0;
  EXPECT_NE(error_of(d).find("evolve.packet.wdith"), std::string::npos) << error_of(d);
  d = base_evolve();
  d["extra"] = 1;
  EXPECT_NE(error_of(d).find("extra"), std::string::npos);
}

TEST(Config, RejectsBadVersionTypesAndSections) {
  json d = base_evolve();
  d["version"] = 2;
  EXPECT_NE(error_of(d).find("version"), std::string::npos);
  d = base_evolve();
  d.erase("version");
  EXPECT_NE(error_of(d).find("version"), std::string::npos);
  d = base_evolve();
  d["evolve"]["dt"] = "fast";
  EXPECT_NE(error_of(d).find("evolve.dt"), std::string::npos);
  d = base_evolve();
  d["twin"] = json::object();
  EXPECT_NE(error_of(d).find("twin"), std::string::npos);
  d = base_evolve();
  d["kind"] = "sweep";
  EXPECT_NE(error_of(d).find("sweep"), std::string::npos);
  d = base_evolve();
  d["potential"]["params"]["lambda"] = 1;
  EXPECT_NE(error_of(d).find("lambda"), std::string::npos);
}

TEST(Config, SyntaxErrorCarriesLineAndColumn) {
  const fs::path dir = temp_dir("syntax");
  fs::create_directories(dir);
  const fs::path f = dir / "bad.json";
  std::ofstream(f) << "{\n  \"version\": 1,\n  \"kind\": evolve\n}\n";
  try {
    validate_config(f.string());
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(Config, SeparatrixEnergyResolved) {
  const json d = json::parse(R"({
    "version": 1, "kind": "stability-map",
    "potential": {"kind": "henon-heiles", "params": {"lambda": 1}},
    "energy": {"separatrix_offset": -0.01, "search_half_extent": 2},
    "stability_map": {"cells": [10, 10], "region": [-1, 1, -1, 1]}
  })");
  const ExperimentConfig c = parse_config(d);
  EXPECT_NEAR(*c.energy, 1.0 / 6.0 - 0.01, 1e-10);
}

TEST(Config, EmptyClassicalRegionWarns) {
  const json d = json::parse(R"({
    "version": 1, "kind": "stability-map",
    "potential": {"kind": "harmonic"}, "energy": -1,
    "stability_map": {"cells": [10, 10], "region": [-1, 1, -1, 1]}
  })");
  const ExperimentConfig c = parse_config(d);
  ASSERT_FALSE(c.warnings.empty());
  EXPECT_NE(c.warnings[0].find("empty classical region"), std::string::npos);
}

TEST(Run, EvolveWritesManifestLastAndIsDeterministic) {
  const ExperimentConfig c = parse_config(base_evolve());
  const fs::path a = temp_dir("run_a"), b = temp_dir("run_b");
  const RunManifest ma = run_experiment(c, a.string());
  const RunManifest mb = run_experiment(c, b.string());
  ASSERT_EQ(ma.status, "ok");
  EXPECT_TRUE(fs::exists(a / "manifest.json"));
  EXPECT_FALSE(fs::exists(a / "CRASHED"));
  ASSERT_EQ(ma.artifacts.size(), 1u);
  EXPECT_EQ(ma.artifacts[0].file, "trajectory.csv");
  EXPECT_EQ(ma.artifacts[0].sha256, mb.artifacts[0].sha256);
  EXPECT_EQ(ma.artifacts[0].sha256, sha256_file((a / "trajectory.csv").string()));
  std::ifstream in(a / "trajectory.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "t,x_mean,y_mean,px_mean,py_mean,norm,energy");
  const json m = json::parse(std::ifstream(a / "manifest.json"));
  EXPECT_EQ(m["config"]["kind"], "evolve");
  EXPECT_FALSE(m["invariants"]["trajectory"]["breached"].get<bool>());
}

TEST(Run, PhysicsErrorGivesErrorManifest) {
  json d = base_evolve();
  d["evolve"]["packet"]["x0"] = 7.0;
  const ExperimentConfig c = parse_config(d);
  const fs::path dir = temp_dir("run_err");
  const RunManifest m = run_experiment(c, dir.string());
  EXPECT_EQ(m.status, "error");
  ASSERT_FALSE(m.errors.empty());
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  EXPECT_FALSE(fs::exists(dir / "CRASHED"));
}

TEST(Run, StaleManifestIsReplaced) {
  const fs::path dir = temp_dir("run_stale");
  fs::create_directories(dir);
  std::ofstream(dir / "manifest.json") << "stale";
  const RunManifest m = run_experiment(parse_config(base_evolve()), dir.string());
  EXPECT_EQ(m.status, "ok");
  const json j = json::parse(std::ifstream(dir / "manifest.json"));
  EXPECT_EQ(j["status"], "ok");
}

TEST(Sha256, KnownVector) {
  const fs::path dir = temp_dir("sha");
  fs::create_directories(dir);
  std::ofstream(dir / "abc.txt", std::ios::binary) << "abc";
  EXPECT_EQ(sha256_file((dir / "abc.txt").string()),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
