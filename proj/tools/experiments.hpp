#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include <ckm/bifurcation.hpp>
#include <ckm/continuum.hpp>
#include <ckm/equilibria.hpp>
#include <ckm/integrator.hpp>
#include <ckm/model.hpp>

namespace ckm::tools {

using nlohmann::json;

/// Command-specific knobs; each command reads the fields it needs.
struct ExperimentSettings {
  double t_end = 100.0;
  double sample_dt = 0.5;
  int node_start = 50;  // 1-based, every node_stride-th node from here (none if > n)
  int node_stride = 100;
  std::vector<double> b1_grid;  // empty: log-spaced default from the threshold
  int b1_points = 60;
  std::vector<int> n_list{50, 100, 200, 400};
  std::vector<GraphKind> kinds{GraphKind::Complete};
  std::vector<std::uint64_t> seeds;  // empty: the run seed only
  std::vector<Interval> flip_set;
  std::vector<std::string> patterns;  // empty: all patterns with both ends +1
  int xi_points = 200;
  GainRegime regime = GainRegime::Positive;
  double t_max = 200.0;
  double window = 10.0;
  double eps = 1e-9;
  int profile_points = 1001;
};

struct ExperimentConfig {
  ModelParams model;
  GraphKind graph_kind = GraphKind::Complete;
  IntegratorConfig integrator;
  ExperimentSettings experiment;
  std::filesystem::path out_dir = "out";
  int threads = 1;

  ExperimentConfig();
  /// Range checks for every block; throws InvalidArgument.
  void validate() const;
  std::uint64_t seed() const { return model.seed; }
};

/// Parses {"model", "graph", "integrator", "experiment"} blocks on top of the
/// defaults. Unknown keys anywhere are rejected.
ExperimentConfig config_from_json(const json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
json config_to_json(const ExperimentConfig& cfg);

/// Seed for row `index` of a sweep, independent of scheduling.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Runs fn(0..count-1) on `threads` workers. Each index's exception is kept
/// and reported in index order; the return value lists failed indices with
/// their messages.
std::vector<std::pair<std::size_t, std::string>> parallel_for(
    std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

/// Default b1 grid: `points` log-spaced values on [0.8 threshold, 1].
std::vector<double> default_b1_grid(double a, double pK, int points);

/// Report written next to every command's data as <command>_report.json.
struct RunReport {
  std::string command;
  std::vector<std::string> outputs;
  std::vector<std::string> failures;
  std::vector<std::string> warnings;
  json summary = json::object();

  bool ok() const { return failures.empty(); }
  int exit_code() const { return ok() ? 0 : 1; }
  json to_json(const ExperimentConfig& cfg) const;
};

void write_report(const RunReport& report, const ExperimentConfig& cfg);

// simulate ---------------------------------------------------------------

struct SimulationResult {
  RunReport report;
  std::vector<double> times;
  std::vector<int> nodes;  // 1-based indices of the traced nodes
  std::vector<std::vector<double>> traces;  // traces[k][node] = u - V, wrapped
  std::vector<double> final_deviation;  // all nodes at t_end, wrapped
  std::optional<ContinuumSolution> continuum;
};

/// Integrates the model on the configured graph from uniform random phases and
/// writes trajectory.csv and steady_state.csv.
SimulationResult cmd_simulate(const ExperimentConfig& cfg);

// enumerate --------------------------------------------------------------

struct EnumerationRow {
  EquilibriumRecord record;
  StabilityReport stability;
};

struct EnumerationResult {
  RunReport report;
  std::vector<EnumerationRow> rows;
  std::vector<int> multiplicity;
};

/// All 2^n equilibria with their spectra, written to equilibria.json.
EnumerationResult cmd_enumerate(const ExperimentConfig& cfg);

// bifurcate --------------------------------------------------------------

struct BranchDiagram {
  SignPattern sigma;
  Branch branch = Branch::Plus;
  std::vector<BranchRow> rows;
};

struct BifurcationResult {
  RunReport report;
  NoEquilibriumCheck drift;
  std::vector<BifurcationPoint> saddle_nodes;
  PitchforkScan pitchforks;
  std::vector<BranchDiagram> diagrams;
};

/// Saddle-nodes and branch diagrams for the configured patterns plus all
/// pitchforks; writes bifurcation_points.csv and branch_diagram.csv.
BifurcationResult cmd_bifurcate(const ExperimentConfig& cfg);

// sweep-gain -------------------------------------------------------------

struct SweepRow {
  double b1 = 0.0;
  double max_dev = 0.0;
  double min_dev = 0.0;
  std::optional<double> delta_u;
  double threshold = 0.0;
  bool converged = false;
  double t_reached = 0.0;
};

struct SweepResult {
  RunReport report;
  std::vector<SweepRow> rows;
};

/// Steady-state deviation band against +-delta_u over the b1 grid; writes
/// sweep_gain.csv.
SweepResult cmd_sweep_gain(const ExperimentConfig& cfg);

// compare ----------------------------------------------------------------

struct CompareRow {
  GraphKind kind = GraphKind::Complete;
  int n = 0;
  std::uint64_t seed = 0;
  double l2 = 0.0;
  bool converged = false;
};

struct CompareSummary {
  GraphKind kind = GraphKind::Complete;
  int n = 0;
  double median_l2 = 0.0;
  int samples = 0;
};

struct CompareResult {
  RunReport report;
  std::vector<CompareRow> rows;
  std::vector<CompareSummary> summary;
};

/// L2 distance between the embedded synchronized state and U for each
/// (kind, n, seed); writes compare.csv and compare_summary.csv.
CompareResult cmd_compare(const ExperimentConfig& cfg);

// continuum --------------------------------------------------------------

struct ContinuumResult {
  RunReport report;
  std::optional<ContinuumSolution> solution;
};

/// Tabulates U(x) (or its flipped variant) to profile.csv.
ContinuumResult cmd_continuum(const ExperimentConfig& cfg);

// graph-dump -------------------------------------------------------------

/// Writes the weight matrix as "i j w" lines (0-based, nonzeros only).
RunReport cmd_graph_dump(const ExperimentConfig& cfg);

}  // namespace ckm::tools
