#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "experiments.hpp"

using namespace ckm::tools;

int main(int argc, char** argv) {
  CLI::App app{"Controlled Kuramoto model experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Seed for graphs and initial phases");
  app.add_option("--out", out, "Output directory");
  app.add_option("--threads", threads, "Worker threads")->check(CLI::Range(1, 1024));

  const std::vector<std::pair<const char*, const char*>> commands{
      {"simulate", "Integrate from random phases; trajectory and steady-state CSV"},
      {"enumerate", "All 2^n equilibria with spectra (JSON)"},
      {"bifurcate", "Saddle-node and pitchfork points plus branch diagrams (CSV)"},
      {"sweep-gain", "Steady-state deviation band over a b1 grid (CSV)"},
      {"compare", "L2 distance to the continuum profile over n (CSV)"},
      {"continuum", "Continuum profile U(x) (CSV)"},
      {"graph-dump", "Weight matrix as a coordinate list"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  CLI11_PARSE(app, argc, argv);

  ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
    if (seed) cfg.model.seed = *seed;
    if (out) cfg.out_dir = *out;
    if (threads) cfg.threads = *threads;
    cfg.validate();
  } catch (const std::exception& err) {
    std::cerr << "ckm: " << err.what() << '\n';
    return 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  RunReport report;
  if (name == "simulate") report = cmd_simulate(cfg).report;
  else if (name == "enumerate") report = cmd_enumerate(cfg).report;
  else if (name == "bifurcate") report = cmd_bifurcate(cfg).report;
  else if (name == "sweep-gain") report = cmd_sweep_gain(cfg).report;
  else if (name == "compare") report = cmd_compare(cfg).report;
  else if (name == "continuum") report = cmd_continuum(cfg).report;
  else report = cmd_graph_dump(cfg);

  for (const auto& w : report.warnings) std::cerr << "ckm " << name << ": warning: " << w << '\n';
  for (const auto& f : report.failures) std::cerr << "ckm " << name << ": error: " << f << '\n';
  for (const auto& o : report.outputs) std::cout << (cfg.out_dir / o).string() << '\n';
  return report.exit_code();
}
