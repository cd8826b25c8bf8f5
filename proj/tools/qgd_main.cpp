#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qgd/errors.hpp"
#include "qgd/experiment.hpp"

namespace {

struct RunArgs {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

int run(qgd::ExperimentKind kind, const RunArgs& args) {
  qgd::ExperimentConfig c;
  try {
    c = qgd::validate_config(args.config);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "qgd: %s\n", e.what());
    return 2;
  }
  if (c.kind != kind) {
    std::fprintf(stderr, "qgd: config '%s' is of kind '%s', not '%s'\n", args.config.c_str(),
                 qgd::to_string(c.kind).c_str(), qgd::to_string(kind).c_str());
    return 2;
  }
  if (args.seed) {
    c.seed = *args.seed;
    c.resolved["seed"] = c.seed;
  }
  std::string dir = !args.out_dir.empty() ? args.out_dir : c.out_dir;
  if (dir.empty()) dir = "runs/" + qgd::to_string(kind);

  qgd::RunManifest m;
  try {
    m = qgd::run_experiment(c, dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "qgd: %s\n", e.what());
    return 1;
  }
  for (const std::string& w : m.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  for (const std::string& e : m.errors) std::fprintf(stderr, "error: %s\n", e.c_str());
  std::printf("%s: %s (%zu artifacts, %.2f s) -> %s\n", qgd::to_string(kind).c_str(),
              m.status.c_str(), m.artifacts.size(), m.wall_time,
              (std::filesystem::path(dir) / "manifest.json").string().c_str());
  return m.status == "ok" ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum geodesic dynamics experiments"};
  app.require_subcommand(1);

  const qgd::ExperimentKind kinds[] = {
      qgd::ExperimentKind::kOpsCheck,  qgd::ExperimentKind::kStabilityMap,
      qgd::ExperimentKind::kEvolve,    qgd::ExperimentKind::kTwin,
      qgd::ExperimentKind::kClassical, qgd::ExperimentKind::kFeitFleckTable};
  RunArgs args;
  std::uint64_t seed = 0;
  int status = 0;
  for (qgd::ExperimentKind kind : kinds) {
    CLI::App* sub = app.add_subcommand(qgd::to_string(kind));
    sub->add_option("--config", args.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out-dir", args.out_dir, "run directory (overrides out_dir in the config)");
    auto* seed_opt = sub->add_option("--seed", seed, "rng seed (overrides the config)");
    sub->callback([&, kind, seed_opt] {
      if (seed_opt->count() > 0) args.seed = seed;
      status = run(kind, args);
    });
  }

  CLI::App* val = app.add_subcommand("validate", "check a config without running it");
  std::string vpath;
  val->add_option("config", vpath)->required();
  val->callback([&] {
    try {
      const qgd::ExperimentConfig c = qgd::validate_config(vpath);
      for (const std::string& w : c.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      std::cout << c.resolved.dump(2) << "\n";
    } catch (const std::exception& e) {
      std::fprintf(stderr, "qgd: %s\n", e.what());
      status = 2;
    }
  });

  CLI11_PARSE(app, argc, argv);
  return status;
}
