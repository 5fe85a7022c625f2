#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <ckm/spectra.hpp>

#include "experiments.hpp"

using namespace ckm;
using namespace ckm::tools;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ckm_test_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small(int n, double b1, const std::string& dir) {
  ExperimentConfig cfg;
  cfg.model.n = n;
  cfg.model.b1 = b1;
  cfg.out_dir = scratch(dir);
  return cfg;
}

}  // namespace

TEST_CASE("config blocks override defaults") {
  const auto cfg = config_from_json(json::parse(R"({
    "model": {"n": 50, "a": 0.5, "p": 0.5, "gamma": 0.3, "b1": 0.4},
    "graph": {"kind": "sparse", "seed": 9},
    "integrator": {"rtol": 1e-8, "max_steps": 1000},
    "experiment": {"t_end": 20, "flip_set": [[0.9, 1.0]], "kinds": ["dense"], "gain_regime": "any",
                   "out_dir": "somewhere", "threads": 3}
  })"));
  CHECK(cfg.model.n == 50);
  CHECK(cfg.model.a == 0.5);
  CHECK(cfg.model.K == 0.5);
  CHECK(*cfg.model.gamma == 0.3);
  CHECK(cfg.graph_kind == GraphKind::RandomSparse);
  CHECK(cfg.seed() == 9);
  CHECK(cfg.integrator.rtol == 1e-8);
  CHECK(cfg.integrator.atol == 1e-11);
  CHECK(cfg.integrator.max_steps == 1000);
  CHECK(cfg.experiment.t_end == 20.0);
  REQUIRE(cfg.experiment.flip_set.size() == 1);
  CHECK(cfg.experiment.flip_set[0] == Interval{0.9, 1.0});
  CHECK(cfg.experiment.kinds == std::vector<GraphKind>{GraphKind::RandomDense});
  CHECK(cfg.experiment.regime == GainRegime::Any);
  CHECK(cfg.out_dir == fs::path("somewhere"));
  CHECK(cfg.threads == 3);
  CHECK_NOTHROW(cfg.validate());

  // The echo parses back to the same configuration.
  const auto again = config_from_json(config_to_json(cfg));
  CHECK(config_to_json(again) == config_to_json(cfg));
}

TEST_CASE("config rejects unknown keys and bad values") {
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"model": {"N": 5}})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"solver": {}})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"experiment": {"tend": 5}})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"model": {"n": "five"}})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"graph": {"kind": "ring"}})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"experiment": {"flip_set": [[0.1]]}})")), InvalidArgument);

  auto invalid = [](const char* text) {
    const auto cfg = config_from_json(json::parse(text));
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  };
  invalid(R"({"model": {"n": 2}})");
  invalid(R"({"model": {"p": 1.5}})");
  invalid(R"({"graph": {"kind": "sparse"}})");
  invalid(R"({"integrator": {"rtol": -1}})");
  invalid(R"({"experiment": {"n_list": [100, 50]}})");
  invalid(R"({"experiment": {"flip_set": [[0.1, 0.3], [0.2, 0.4]]}})");
  invalid(R"({"experiment": {"window": 300}})");
  invalid(R"({"model": {"n": 4}, "experiment": {"patterns": ["+++"]}})");
  invalid(R"({"experiment": {"b1_grid": [0.2, 0.0]}})");
}

TEST_CASE("load_config reads files") {
  const auto dir = scratch("load");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"model": {"n": 7}})";
  CHECK(load_config(dir / "c.json").model.n == 7);
  std::ofstream(dir / "broken.json") << "{ model";
  CHECK_THROWS_AS(load_config(dir / "broken.json"), InvalidArgument);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), InvalidArgument);
}

TEST_CASE("derived seeds are deterministic and distinct") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t k = 0; k < 1000; ++k) {
    CHECK(derive_seed(1, k) == derive_seed(1, k));
    seen.insert(derive_seed(1, k));
  }
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("parallel_for covers every index and reports failures in order") {
  for (int threads : {1, 3}) {
    std::vector<int> hits(50, 0);
    const auto failed = parallel_for(hits.size(), threads, [&](std::size_t k) {
      hits[k] += 1;
      if (k % 20 == 7) throw std::runtime_error("bad " + std::to_string(k));
    });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    REQUIRE(failed.size() == 3);
    CHECK(failed[0].first == 7);
    CHECK(failed[1].first == 27);
    CHECK(failed[2].second == "bad 47");
  }
}

TEST_CASE("default gain grid") {
  const auto g = default_b1_grid(1.0, 0.5, 60);
  REQUIRE(g.size() == 60);
  CHECK(g.front() == doctest::Approx(0.8 * existence_threshold(1.0, 0.5)).epsilon(1e-14));
  CHECK(g.back() == 1.0);
  for (std::size_t k = 2; k < g.size(); ++k) {
    CHECK(g[k] / g[k - 1] == doctest::Approx(g[1] / g[0]).epsilon(1e-12));
  }
}

TEST_CASE("enumerate at n = 3 gives 8 records and one stable") {
  const auto cfg = small(3, 2.0, "enum3");
  const auto res = cmd_enumerate(cfg);
  CHECK(res.report.exit_code() == 0);
  REQUIRE(res.rows.size() == 8);
  int stable = 0;
  for (const auto& r : res.rows) {
    if (r.stability.stability == StabilityClass::AsymptoticallyStable) {
      ++stable;
      CHECK(r.record.sigma == SignPattern::all_plus(3));
    }
  }
  CHECK(stable == 1);
  const auto j = json::parse(slurp(cfg.out_dir / "equilibria.json"));
  CHECK(j["count"] == 8);
  CHECK(j["stable"] == 1);
  CHECK(j["records"][0]["class"] == "stable");
  CHECK(json::parse(slurp(cfg.out_dir / "enumerate_report.json"))["status"] == "ok");
}

TEST_CASE("enumerate at n = 5 with large gain keeps only the all-plus stable point") {
  const auto res = cmd_enumerate(small(5, 1e3, "enum5"));
  REQUIRE(res.rows.size() == 32);
  int stable = 0;
  for (const auto& r : res.rows) stable += r.stability.stability == StabilityClass::AsymptoticallyStable;
  CHECK(stable == 1);
}

TEST_CASE("enumerate counts change by two across a pitchfork") {
  auto cfg = small(4, 0.2, "enum4");
  const auto pf = pitchfork_points(cfg.model).points;
  REQUIRE(!pf.empty());
  const double b_star = pf.front().b1_star;
  cfg.model.b1 = b_star * (1 + 1e-4);
  const auto above = cmd_enumerate(cfg).rows.size();
  cfg.model.b1 = b_star * (1 - 1e-4);
  const auto below = cmd_enumerate(cfg).rows.size();
  CHECK(above != below);
  CHECK(std::abs(static_cast<long>(above) - static_cast<long>(below)) == 2);
}

TEST_CASE("enumerate refuses oversized n") {
  const auto res = cmd_enumerate(small(21, 2.0, "enum21"));
  CHECK(res.report.exit_code() == 1);
  REQUIRE(res.report.failures.size() == 1);
  CHECK(res.report.failures[0].find("budget") != std::string::npos);
}

TEST_CASE("bifurcate counts and branch files") {
  for (int n = 4; n <= 6; ++n) {
    auto cfg = small(n, 0.2, "bif" + std::to_string(n));
    cfg.experiment.xi_points = 40;
    const auto res = cmd_bifurcate(cfg);
    CHECK(res.report.ok());
    CHECK(res.drift.holds);
    int super = 0;
    for (const auto& pt : res.saddle_nodes) super += pt.criticality == Criticality::Supercritical;
    CHECK(super == (1 << (n - 2)));
    CHECK(res.pitchforks.points.size() == (std::size_t{1} << (n - 2)));
    const auto text = slurp(cfg.out_dir / "bifurcation_points.csv");
    CHECK(text.rfind("# ckm bifurcation_points v1\nkind,sigma,branch,xi_star,b1_star,criticality,confirmed\n", 0) == 0);
    std::size_t lines = std::count(text.begin(), text.end(), '\n');
    CHECK(lines == 2 + res.saddle_nodes.size() + res.pitchforks.points.size());
    const auto branch = slurp(cfg.out_dir / "branch_diagram.csv");
    CHECK(static_cast<std::size_t>(std::count(branch.begin(), branch.end(), '\n')) ==
          2 + res.diagrams.size() * 40);
  }
}

TEST_CASE("bifurcate flags unbounded segments at small beta") {
  auto cfg = small(4, 0.2, "bifbeta");
  cfg.model.K = (cfg.model.n - 1) * cfg.model.nu() / 0.1;
  cfg.experiment.patterns = {"++++", "+--+", "-++-", "----"};
  const auto res = cmd_bifurcate(cfg);
  CHECK(res.report.ok());
  bool unbounded = false;
  for (const auto& d : res.diagrams) unbounded |= d.rows.back().segment > 0;
  CHECK(unbounded);
}

TEST_CASE("simulate on the complete graph lands on the profile") {
  auto cfg = small(100, 0.2, "sim");
  cfg.experiment.node_start = 5;
  cfg.experiment.node_stride = 10;
  const auto res = cmd_simulate(cfg);
  REQUIRE(res.report.ok());
  CHECK(res.nodes == std::vector<int>{5, 15, 25, 35, 45, 55, 65, 75, 85, 95});
  CHECK(res.times.front() == 0.0);
  CHECK(res.times.back() == 100.0);
  CHECK(res.times.size() == 201);
  REQUIRE(res.continuum);
  for (int i = 0; i < 100; ++i) {
    CHECK(std::abs(res.final_deviation[i] - U_eval(*res.continuum, (i + 0.5) / 100)) < 1e-4);
  }
  const auto steady = slurp(cfg.out_dir / "steady_state.csv");
  CHECK(steady.rfind("# ckm steady_state v1\nnode,x,deviation,U\n", 0) == 0);
  const auto traj = slurp(cfg.out_dir / "trajectory.csv");
  CHECK(traj.rfind("# ckm trajectory v1\nt,node5,node15,", 0) == 0);
}

TEST_CASE("simulate below the threshold leaves the profile column empty") {
  auto cfg = small(20, 0.05, "simlow");
  cfg.experiment.t_end = 5.0;
  const auto res = cmd_simulate(cfg);
  CHECK(res.report.ok());
  CHECK(!res.continuum);
  CHECK(res.nodes.empty());
  CHECK(res.report.warnings.size() == 1);
}

TEST_CASE("integrator failures give a nonzero exit code") {
  auto cfg = small(20, 0.2, "simfail");
  cfg.integrator.max_steps = 3;
  const auto res = cmd_simulate(cfg);
  CHECK(res.report.exit_code() == 1);
  CHECK(json::parse(slurp(cfg.out_dir / "simulate_report.json"))["status"] == "failed");
}

TEST_CASE("sweep output is byte-identical across runs and thread counts") {
  auto cfg = small(30, 0.2, "sweep1");
  cfg.experiment.b1_grid = {0.08, 0.15, 0.3, 0.6};
  const auto first = cmd_sweep_gain(cfg);
  CHECK(first.report.ok());
  REQUIRE(first.rows.size() == 4);
  CHECK_FALSE(first.rows[0].converged);
  CHECK(first.rows[3].converged);
  CHECK(!first.rows[0].delta_u);
  CHECK(first.rows[3].delta_u);
  const auto a = slurp(cfg.out_dir / "sweep_gain.csv");
  cmd_sweep_gain(cfg);
  CHECK(slurp(cfg.out_dir / "sweep_gain.csv") == a);
  cfg.threads = 3;
  cmd_sweep_gain(cfg);
  CHECK(slurp(cfg.out_dir / "sweep_gain.csv") == a);
  CHECK(a.rfind("# ckm sweep_gain v1\nb1,max_dev,min_dev,delta_u,neg_delta_u,threshold,converged,t_reached\n", 0) == 0);
  // The deviation band shrinks as the gain grows.
  CHECK(first.rows[3].max_dev < first.rows[2].max_dev);
  CHECK(first.rows[2].max_dev < first.rows[1].max_dev);
}

TEST_CASE("compare on the complete graph decreases with n") {
  auto cfg = small(50, 0.2, "cmp");
  const auto res = cmd_compare(cfg);
  REQUIRE(res.report.ok());
  REQUIRE(res.rows.size() == 4);
  for (std::size_t k = 1; k < res.rows.size(); ++k) CHECK(res.rows[k].l2 < res.rows[k - 1].l2);
  const auto text = slurp(cfg.out_dir / "compare.csv");
  CHECK(text.rfind("# ckm compare v1\nn,l2_distance,kind,seed,converged\n", 0) == 0);
  cfg.model.b1 = 0.05;
  CHECK(cmd_compare(cfg).report.exit_code() == 1);
}

TEST_CASE("continuum profile and failure below threshold") {
  auto cfg = small(20, 0.2, "cont");
  cfg.experiment.profile_points = 11;
  const auto res = cmd_continuum(cfg);
  REQUIRE(res.solution);
  const auto text = slurp(cfg.out_dir / "profile.csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 13);
  cfg.model.b1 = 0.1;
  CHECK(cmd_continuum(cfg).report.exit_code() == 1);
}

TEST_CASE("graph dump lists the nonzero weights") {
  auto cfg = small(12, 0.2, "graph");
  cfg.graph_kind = GraphKind::RandomDense;
  cfg.model.p = 0.5;
  const auto report = cmd_graph_dump(cfg);
  CHECK(report.ok());
  const auto W = build_graph(GraphKind::RandomDense, cfg.model);
  std::ifstream in(cfg.out_dir / "graph.txt");
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("# ckm graph v1 kind=dense n=12", 0) == 0);
  std::getline(in, line);
  int i = 0;
  int j = 0;
  double w = 0.0;
  std::size_t count = 0;
  while (in >> i >> j >> w) {
    CHECK(W(i, j) == w);
    ++count;
  }
  CHECK(count == W.edge_count());
}
