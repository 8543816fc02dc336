#include "mobility/reports.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace mobility;
  CLI::App app{"Returner/explorer mobility analytics over gridded trajectories"};
  app.set_version_flag("--version", "mobility 0.1.0");

  std::string subcommand;
  std::string config_path, data, poi, out, period;
  std::optional<int> k, threads;
  std::optional<std::uint64_t> seed;

  std::string names;
  for (const auto& n : subcommands()) names += (names.empty() ? "" : ", ") + n;
  app.add_option("subcommand", subcommand, "One of: " + names)->required()->check(CLI::IsMember(subcommands()));
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--data", data, "Trajectory CSV (uid,d,t,x,y)");
  app.add_option("--poi", poi, "POI CSV (x,y,POI_count)");
  app.add_option("--out", out, "Output directory");
  app.add_option("--period", period, "Restrict period reports to one configured period");
  app.add_option("--k", k, "Top-k for classification")->check(CLI::Range(2, 1000));
  app.add_option("--threads", threads, "Worker threads")->check(CLI::Range(1, 1024));
  app.add_option("--seed", seed, "Seed for the synthetic generator");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
    if (!data.empty()) cfg.data = data;
    if (!poi.empty()) cfg.poi = poi;
    if (!out.empty()) cfg.out = out;
    if (!period.empty()) cfg.period = period;
    if (k) cfg.k = *k;
    if (threads) cfg.threads = *threads;
    if (seed) {
      cfg.seed = *seed;
      if (cfg.scenario) cfg.scenario->seed = *seed;
    }
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return run_command(subcommand, cfg, std::cerr);
}
