#include "experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <thread>

#include <ckm/spectra.hpp>

namespace ckm::tools {

namespace fs = std::filesystem;

namespace {

// Shortest text that reads back to the same double.
std::string num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

std::string opt_num(const std::optional<double>& x) { return x ? num(*x) : std::string(); }

class CsvFile {
 public:
  CsvFile(const fs::path& path, const std::string& schema, const std::vector<std::string>& header)
      : os_(path) {
    if (!os_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os_ << "# ckm " << schema << " v1\n";
    row(header);
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) os_ << (k ? "," : "") << fields[k];
    os_ << '\n';
  }

 private:
  std::ofstream os_;
};

fs::path prepare_output(const ExperimentConfig& cfg, RunReport& report, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  report.outputs.push_back(name);
  return cfg.out_dir / name;
}

void check_keys(const json& block, const std::string& name, std::initializer_list<const char*> allowed) {
  if (!block.is_object()) throw InvalidArgument("config block '" + name + "' must be an object");
  for (const auto& item : block.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; })) {
      throw InvalidArgument("unknown key '" + name + "." + item.key() + "'");
    }
  }
}

template <class T>
void read(const json& block, const char* key, T& out) {
  if (block.contains(key)) out = block.at(key).get<T>();
}

GainRegime regime_from_string(const std::string& s) {
  if (s == "positive") return GainRegime::Positive;
  if (s == "negative") return GainRegime::Negative;
  if (s == "any") return GainRegime::Any;
  throw InvalidArgument("unknown gain regime '" + s + "' (expected positive, negative or any)");
}

std::string regime_name(GainRegime r) {
  switch (r) {
    case GainRegime::Positive:
      return "positive";
    case GainRegime::Negative:
      return "negative";
    case GainRegime::Any:
      return "any";
  }
  return "positive";
}

// Checks ordering and overlap; straddling 1/2 is fine (the solver splits).
void validate_flip_set(std::vector<Interval> set) {
  std::sort(set.begin(), set.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  for (std::size_t k = 0; k < set.size(); ++k) {
    if (!(set[k].lo >= 0.0 && set[k].lo < set[k].hi && set[k].hi <= 1.0)) {
      throw InvalidArgument("flip interval must satisfy 0 <= lo < hi <= 1");
    }
    if (k > 0 && set[k].lo < set[k - 1].hi) throw InvalidArgument("flip intervals overlap");
  }
}

std::vector<double> wrapped(std::span<const double> v) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), wrap_angle);
  return out;
}

std::optional<ContinuumSolution> continuum_for(const ModelParams& p) {
  if (!(p.b1 > 0.0)) return std::nullopt;
  return solve_C(p.a, p.pK(), p.b1);
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

}  // namespace

// configuration ------------------------------------------------------------

ExperimentConfig::ExperimentConfig() {
  model.n = 1000;
  model.a = 1.0;
  model.K = 0.5;
  model.p = 1.0;
  model.b1 = 0.2;
  model.V1 = 1.0;
  model.V0 = 1.0;
  model.seed = 1;
}

void ExperimentConfig::validate() const {
  model.validate();
  integrator.validate();
  const auto& e = experiment;
  const bool sparse = graph_kind == GraphKind::RandomSparse ||
                      std::find(e.kinds.begin(), e.kinds.end(), GraphKind::RandomSparse) != e.kinds.end();
  if (model.gamma && !(*model.gamma > 0.0 && *model.gamma < 1.0)) {
    throw InvalidArgument("model.gamma must lie in (0, 1)");
  }
  if (sparse && !model.gamma) throw InvalidArgument("sparse graphs need model.gamma");
  if (!(e.t_end > 0.0)) throw InvalidArgument("experiment.t_end must be positive");
  if (!(e.sample_dt > 0.0)) throw InvalidArgument("experiment.sample_dt must be positive");
  if (e.node_start < 1) throw InvalidArgument("experiment.node_start must be at least 1");
  if (e.node_stride < 1) throw InvalidArgument("experiment.node_stride must be at least 1");
  if (e.b1_points < 2) throw InvalidArgument("experiment.b1_points must be at least 2");
  for (double b : e.b1_grid) {
    if (!std::isfinite(b) || b == 0.0) throw InvalidArgument("experiment.b1_grid entries must be finite and nonzero");
  }
  if (e.n_list.empty()) throw InvalidArgument("experiment.n_list must not be empty");
  for (std::size_t k = 0; k < e.n_list.size(); ++k) {
    if (e.n_list[k] < 3) throw InvalidArgument("experiment.n_list entries must be at least 3");
    if (k > 0 && e.n_list[k] <= e.n_list[k - 1]) {
      throw InvalidArgument("experiment.n_list must be strictly increasing");
    }
  }
  if (e.kinds.empty()) throw InvalidArgument("experiment.kinds must not be empty");
  validate_flip_set(e.flip_set);
  for (const auto& s : e.patterns) {
    if (SignPattern::parse(s).size() != model.n) {
      throw InvalidArgument("pattern '" + s + "' does not have length n");
    }
  }
  if (e.xi_points < 2) throw InvalidArgument("experiment.xi_points must be at least 2");
  if (!(e.window > 0.0 && e.window < e.t_max)) {
    throw InvalidArgument("experiment.window must lie in (0, t_max)");
  }
  if (!(e.eps > 0.0)) throw InvalidArgument("experiment.eps must be positive");
  if (e.profile_points < 2) throw InvalidArgument("experiment.profile_points must be at least 2");
  if (threads < 1) throw InvalidArgument("threads must be at least 1");
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  check_keys(j, "config", {"model", "graph", "integrator", "experiment"});
  try {
    if (j.contains("model")) {
      const auto& m = j.at("model");
      check_keys(m, "model", {"n", "a", "K", "p", "gamma", "b1", "V1", "V0"});
      read(m, "n", cfg.model.n);
      read(m, "a", cfg.model.a);
      read(m, "K", cfg.model.K);
      read(m, "p", cfg.model.p);
      if (m.contains("gamma") && !m.at("gamma").is_null()) cfg.model.gamma = m.at("gamma").get<double>();
      read(m, "b1", cfg.model.b1);
      read(m, "V1", cfg.model.V1);
      read(m, "V0", cfg.model.V0);
    }
    if (j.contains("graph")) {
      const auto& g = j.at("graph");
      check_keys(g, "graph", {"kind", "seed"});
      if (g.contains("kind")) cfg.graph_kind = graph_kind_from_string(g.at("kind").get<std::string>());
      read(g, "seed", cfg.model.seed);
    }
    if (j.contains("integrator")) {
      const auto& i = j.at("integrator");
      check_keys(i, "integrator", {"rtol", "atol", "h_init", "h_max", "max_steps"});
      read(i, "rtol", cfg.integrator.rtol);
      read(i, "atol", cfg.integrator.atol);
      read(i, "h_init", cfg.integrator.h_init);
      // null stands for "no cap", which JSON cannot spell as a number.
      if (i.contains("h_max") && !i.at("h_max").is_null()) cfg.integrator.h_max = i.at("h_max").get<double>();
      read(i, "max_steps", cfg.integrator.max_steps);
    }
    if (j.contains("experiment")) {
      const auto& x = j.at("experiment");
      check_keys(x, "experiment",
                 {"t_end", "sample_dt", "node_start", "node_stride", "b1_grid", "b1_points", "n_list",
                  "kinds", "seeds", "flip_set", "patterns", "xi_points", "gain_regime", "t_max", "window",
                  "eps", "profile_points", "out_dir", "threads"});
      auto& e = cfg.experiment;
      read(x, "t_end", e.t_end);
      read(x, "sample_dt", e.sample_dt);
      read(x, "node_start", e.node_start);
      read(x, "node_stride", e.node_stride);
      read(x, "b1_grid", e.b1_grid);
      read(x, "b1_points", e.b1_points);
      read(x, "n_list", e.n_list);
      if (x.contains("kinds")) {
        e.kinds.clear();
        for (const auto& k : x.at("kinds")) e.kinds.push_back(graph_kind_from_string(k.get<std::string>()));
      }
      read(x, "seeds", e.seeds);
      if (x.contains("flip_set")) {
        e.flip_set.clear();
        for (const auto& iv : x.at("flip_set")) {
          if (!iv.is_array() || iv.size() != 2) throw InvalidArgument("flip_set entries must be [lo, hi]");
          e.flip_set.push_back({iv[0].get<double>(), iv[1].get<double>()});
        }
      }
      read(x, "patterns", e.patterns);
      read(x, "xi_points", e.xi_points);
      if (x.contains("gain_regime")) e.regime = regime_from_string(x.at("gain_regime").get<std::string>());
      read(x, "t_max", e.t_max);
      read(x, "window", e.window);
      read(x, "eps", e.eps);
      read(x, "profile_points", e.profile_points);
      if (x.contains("out_dir")) cfg.out_dir = x.at("out_dir").get<std::string>();
      read(x, "threads", cfg.threads);
    }
  } catch (const json::exception& err) {
    throw InvalidArgument(std::string("config: ") + err.what());
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& err) {
    throw InvalidArgument("config " + path.string() + ": " + err.what());
  }
  return config_from_json(j);
}

json config_to_json(const ExperimentConfig& cfg) {
  const auto& m = cfg.model;
  const auto& e = cfg.experiment;
  json flips = json::array();
  for (const auto& iv : e.flip_set) flips.push_back({iv.lo, iv.hi});
  json kinds = json::array();
  for (auto k : e.kinds) kinds.push_back(std::string(to_string(k)));
  return {
      {"model",
       {{"n", m.n}, {"a", m.a}, {"K", m.K}, {"p", m.p}, {"gamma", m.gamma ? json(*m.gamma) : json(nullptr)},
        {"b1", m.b1}, {"V1", m.V1}, {"V0", m.V0}}},
      {"graph", {{"kind", std::string(to_string(cfg.graph_kind))}, {"seed", m.seed}}},
      {"integrator",
       {{"rtol", cfg.integrator.rtol}, {"atol", cfg.integrator.atol}, {"h_init", cfg.integrator.h_init},
        {"h_max", std::isfinite(cfg.integrator.h_max) ? json(cfg.integrator.h_max) : json(nullptr)},
        {"max_steps", cfg.integrator.max_steps}}},
      {"experiment",
       {{"t_end", e.t_end}, {"sample_dt", e.sample_dt}, {"node_start", e.node_start},
        {"node_stride", e.node_stride}, {"b1_grid", e.b1_grid}, {"b1_points", e.b1_points},
        {"n_list", e.n_list}, {"kinds", kinds}, {"seeds", e.seeds}, {"flip_set", flips},
        {"patterns", e.patterns}, {"xi_points", e.xi_points}, {"gain_regime", regime_name(e.regime)},
        {"t_max", e.t_max}, {"window", e.window}, {"eps", e.eps}, {"profile_points", e.profile_points},
        {"out_dir", cfg.out_dir.string()}, {"threads", cfg.threads}}},
  };
}

// plumbing -------------------------------------------------------------------

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over a golden-ratio stride.
  std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<std::pair<std::size_t, std::string>> parallel_for(
    std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  std::vector<std::optional<std::string>> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        fn(k);
      } catch (const std::exception& err) {
        errors[k] = err.what();
      }
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, count); ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::vector<std::pair<std::size_t, std::string>> failed;
  for (std::size_t k = 0; k < count; ++k) {
    if (errors[k]) failed.emplace_back(k, *errors[k]);
  }
  return failed;
}

std::vector<double> default_b1_grid(double a, double pK, int points) {
  if (points < 2) throw InvalidArgument("b1 grid needs at least 2 points");
  const double lo = 0.8 * existence_threshold(a, pK);
  const double hi = 1.0;
  if (!(lo > 0.0 && lo < hi)) throw InvalidArgument("default b1 grid needs 0 < 0.8 threshold < 1");
  std::vector<double> grid(points);
  for (int k = 0; k < points; ++k) {
    grid[k] = lo * std::pow(hi / lo, static_cast<double>(k) / (points - 1));
  }
  grid.back() = hi;
  return grid;
}

json RunReport::to_json(const ExperimentConfig& cfg) const {
  return {{"command", command},   {"status", ok() ? "ok" : "failed"}, {"seed", cfg.seed()},
          {"outputs", outputs},   {"failures", failures},              {"warnings", warnings},
          {"summary", summary},   {"config", config_to_json(cfg)}};
}

void write_report(const RunReport& report, const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  std::ofstream os(cfg.out_dir / (report.command + "_report.json"));
  os << report.to_json(cfg).dump(2) << '\n';
}

// simulate -------------------------------------------------------------------

SimulationResult cmd_simulate(const ExperimentConfig& cfg) {
  SimulationResult res;
  res.report.command = "simulate";
  try {
    cfg.validate();
    const auto& p = cfg.model;
    const auto& e = cfg.experiment;
    const RotatingSystem sys(p, build_graph(cfg.graph_kind, p));
    const auto v0 = random_initial_phases(p.n, p.seed);

    const auto steps = static_cast<long>(std::floor(e.t_end / e.sample_dt + 1e-9));
    std::vector<double> ts;
    for (long k = 0; k <= steps; ++k) ts.push_back(k * e.sample_dt);
    if (ts.back() < e.t_end) ts.push_back(e.t_end);

    const auto traj = integrate(std::cref(sys), v0, {0.0, e.t_end}, cfg.integrator, ts);
    res.times = traj.times;
    for (int i = e.node_start; i <= p.n; i += e.node_stride) res.nodes.push_back(i);
    for (const auto& state : traj.states) {
      std::vector<double> row;
      for (int i : res.nodes) row.push_back(wrap_angle(state[i - 1]));
      res.traces.push_back(std::move(row));
    }
    res.final_deviation = wrapped(traj.back());
    res.continuum = continuum_for(p);

    {
      std::vector<std::string> header{"t"};
      for (int i : res.nodes) header.push_back("node" + std::to_string(i));
      CsvFile csv(prepare_output(cfg, res.report, "trajectory.csv"), "trajectory", header);
      for (std::size_t k = 0; k < res.times.size(); ++k) {
        std::vector<std::string> row{num(res.times[k])};
        for (double d : res.traces[k]) row.push_back(num(d));
        csv.row(row);
      }
    }
    CsvFile csv(prepare_output(cfg, res.report, "steady_state.csv"), "steady_state",
                {"node", "x", "deviation", "U"});
    double sup = 0.0;
    for (int i = 0; i < p.n; ++i) {
      const double x = (i + 0.5) / p.n;
      std::optional<double> U;
      if (res.continuum) {
        U = U_eval(*res.continuum, x);
        sup = std::max(sup, std::abs(res.final_deviation[i] - *U));
      }
      csv.row({std::to_string(i + 1), num(x), num(res.final_deviation[i]), opt_num(U)});
    }
    res.report.summary["t_end"] = e.t_end;
    if (res.continuum) {
      res.report.summary["max_error_vs_U"] = sup;
      res.report.summary["l2_error_vs_U"] = l2_distance(embed(res.final_deviation), profile(*res.continuum));
      res.report.summary["delta_u"] = res.continuum->delta_u;
    } else {
      res.report.warnings.push_back("b1 below the continuum existence threshold; U column left empty");
    }
  } catch (const std::exception& err) {
    res.report.failures.push_back(err.what());
  }
  write_report(res.report, cfg);
  return res;
}

// enumerate ------------------------------------------------------------------

EnumerationResult cmd_enumerate(const ExperimentConfig& cfg) {
  EnumerationResult res;
  res.report.command = "enumerate";
  try {
    cfg.validate();
    const auto& p = cfg.model;
    if (p.n > kMaxEnumerationSize) {
      throw InvalidArgument("enumeration budget exceeded: n = " + std::to_string(p.n) + " > " +
                            std::to_string(kMaxEnumerationSize));
    }
    auto en = enumerate_equilibria(p, cfg.threads);
    res.multiplicity = std::move(en.multiplicity);
    std::vector<StabilityReport> spectra(en.records.size());
    const auto failed = parallel_for(spectra.size(), cfg.threads, [&](std::size_t k) {
      spectra[k] = stability_at(en.records[k].v, p);
    });
    for (const auto& [k, msg] : failed) res.report.failures.push_back("record " + std::to_string(k) + ": " + msg);
    for (std::size_t k = 0; k < spectra.size(); ++k) {
      res.rows.push_back({std::move(en.records[k]), std::move(spectra[k])});
    }

    json records = json::array();
    int stable = 0;
    for (const auto& row : res.rows) {
      const auto& r = row.record;
      const auto& s = row.stability;
      stable += s.stability == StabilityClass::AsymptoticallyStable;
      records.push_back({{"sigma", r.sigma.to_string()},
                         {"xi", r.xi},
                         {"C_D", r.C_D},
                         {"branch", std::string(to_string(r.branch))},
                         {"residual", r.residual},
                         {"boundary", r.boundary},
                         {"lambda_min", s.eigenvalues.empty() ? 0.0 : s.eigenvalues.front()},
                         {"lambda_max", s.eigenvalues.empty() ? 0.0 : s.eigenvalues.back()},
                         {"n_positive", s.n_positive},
                         {"n_negative", s.n_negative},
                         {"n_zero", s.n_zero},
                         {"class", std::string(to_string(s.stability))},
                         {"v", r.v}});
    }
    const json out{{"schema", "ckm equilibria v1"}, {"n", p.n},         {"b1", p.b1},
                   {"a", p.a},                      {"pK", p.pK()},      {"count", res.rows.size()},
                   {"stable", stable},              {"records", records}};
    std::ofstream(prepare_output(cfg, res.report, "equilibria.json")) << out.dump(2) << '\n';
    res.report.summary["count"] = res.rows.size();
    res.report.summary["stable"] = stable;
  } catch (const std::exception& err) {
    res.report.failures.push_back(err.what());
  }
  write_report(res.report, cfg);
  return res;
}

// bifurcate ------------------------------------------------------------------

BifurcationResult cmd_bifurcate(const ExperimentConfig& cfg) {
  BifurcationResult res;
  res.report.command = "bifurcate";
  try {
    cfg.validate();
    const auto& p = cfg.model;
    const auto& e = cfg.experiment;
    std::vector<SignPattern> patterns;
    for (const auto& s : e.patterns) patterns.push_back(SignPattern::parse(s));
    if (patterns.empty()) {
      if (p.n <= 12) {
        for (std::uint64_t m = 0; m < (std::uint64_t{1} << (p.n - 2)); ++m) {
          patterns.push_back(SignPattern::from_mask(p.n, m << 1));
        }
      } else {
        patterns.push_back(SignPattern::all_plus(p.n));
      }
    }
    std::vector<Branch> branches{Branch::Plus};
    if (e.regime == GainRegime::Negative) branches = {Branch::Minus};
    if (e.regime == GainRegime::Any) branches.push_back(Branch::Minus);

    std::vector<double> grid;
    for (int k = 1; k <= e.xi_points; ++k) grid.push_back(static_cast<double>(k) / e.xi_points);

    res.drift = no_equilibrium_condition(p);
    std::vector<std::vector<BifurcationPoint>> per_pattern(patterns.size());
    std::vector<std::vector<BranchDiagram>> per_diagram(patterns.size());
    const auto failed = parallel_for(patterns.size(), cfg.threads, [&](std::size_t k) {
      per_pattern[k] = saddle_node_points(patterns[k], p, e.regime);
      for (auto b : branches) per_diagram[k].push_back({patterns[k], b, branch_diagram(patterns[k], p, grid, b)});
    });
    for (const auto& [k, msg] : failed) {
      res.report.failures.push_back("pattern " + patterns[k].to_string() + ": " + msg);
    }
    for (std::size_t k = 0; k < patterns.size(); ++k) {
      for (auto& pt : per_pattern[k]) res.saddle_nodes.push_back(std::move(pt));
      for (auto& d : per_diagram[k]) res.diagrams.push_back(std::move(d));
    }
    res.pitchforks = pitchfork_points(p, e.regime);
    for (const auto& d : res.pitchforks.diagnostics) res.report.warnings.push_back(d);

    {
      CsvFile csv(prepare_output(cfg, res.report, "bifurcation_points.csv"), "bifurcation_points",
                  {"kind", "sigma", "branch", "xi_star", "b1_star", "criticality", "confirmed"});
      auto emit = [&](const BifurcationPoint& pt) {
        csv.row({std::string(to_string(pt.kind)), pt.sigma.to_string(), std::string(to_string(pt.branch)),
                 num(pt.xi_star), num(pt.b1_star), std::string(to_string(pt.criticality)),
                 pt.kind == BifurcationKind::Pitchfork ? (pt.confirmed ? "1" : "0") : ""});
      };
      for (const auto& pt : res.saddle_nodes) emit(pt);
      for (const auto& pt : res.pitchforks.points) emit(pt);
    }
    CsvFile csv(prepare_output(cfg, res.report, "branch_diagram.csv"), "branch_diagram",
                {"sigma", "branch", "xi", "chibar", "b1", "n_positive", "stability", "segment"});
    for (const auto& d : res.diagrams) {
      for (const auto& r : d.rows) {
        const bool has = r.b1.has_value();
        csv.row({d.sigma.to_string(), std::string(to_string(d.branch)), num(r.xi), opt_num(r.chibar), opt_num(r.b1),
                 has ? std::to_string(r.n_positive) : "", has ? std::string(to_string(r.stability)) : "",
                 std::to_string(r.segment)});
      }
    }
    int super = 0;
    int sub = 0;
    for (const auto& pt : res.saddle_nodes) {
      super += pt.criticality == Criticality::Supercritical;
      sub += pt.criticality == Criticality::Subcritical;
    }
    res.report.summary["drift_condition"] = {
        {"holds", res.drift.holds}, {"beta", res.drift.beta}, {"max_xichi", res.drift.max_xichi}};
    res.report.summary["patterns"] = patterns.size();
    res.report.summary["saddle_nodes_supercritical"] = super;
    res.report.summary["saddle_nodes_subcritical"] = sub;
    res.report.summary["pitchforks"] = res.pitchforks.points.size();
  } catch (const std::exception& err) {
    res.report.failures.push_back(err.what());
  }
  write_report(res.report, cfg);
  return res;
}

// sweep-gain -----------------------------------------------------------------

SweepResult cmd_sweep_gain(const ExperimentConfig& cfg) {
  SweepResult res;
  res.report.command = "sweep-gain";
  try {
    cfg.validate();
    const auto& e = cfg.experiment;
    const auto& base = cfg.model;
    const double thr = existence_threshold(base.a, base.pK());
    const auto grid = e.b1_grid.empty() ? default_b1_grid(base.a, base.pK(), e.b1_points) : e.b1_grid;
    const auto W = build_graph(cfg.graph_kind, base);
    res.rows.resize(grid.size());
    const auto failed = parallel_for(grid.size(), cfg.threads, [&](std::size_t k) {
      auto p = base;
      p.b1 = grid[k];
      auto& row = res.rows[k];
      row.b1 = p.b1;
      row.threshold = thr;
      if (p.b1 > 0.0) {
        if (const auto s = solve_C(p.a, p.pK(), p.b1)) row.delta_u = s->delta_u;
      }
      const RotatingSystem sys(p, W);
      const auto v0 = random_initial_phases(p.n, derive_seed(p.seed, k));
      const auto ss = steady_state(std::cref(sys), v0, cfg.integrator, e.t_max, e.window, e.eps);
      const auto dev = wrapped(ss.state);
      row.max_dev = *std::max_element(dev.begin(), dev.end());
      row.min_dev = *std::min_element(dev.begin(), dev.end());
      row.converged = ss.converged;
      row.t_reached = ss.t_reached;
    });
    std::vector<bool> bad(grid.size(), false);
    for (const auto& [k, msg] : failed) {
      bad[k] = true;
      res.report.failures.push_back("b1 = " + num(grid[k]) + ": " + msg);
    }
    CsvFile csv(prepare_output(cfg, res.report, "sweep_gain.csv"), "sweep_gain",
                {"b1", "max_dev", "min_dev", "delta_u", "neg_delta_u", "threshold", "converged", "t_reached"});
    int unconverged = 0;
    for (std::size_t k = 0; k < res.rows.size(); ++k) {
      const auto& r = res.rows[k];
      if (bad[k]) {
        csv.row({num(r.b1), "", "", opt_num(r.delta_u), r.delta_u ? num(-*r.delta_u) : "", num(r.threshold), "0", ""});
        continue;
      }
      if (!r.converged) {
        ++unconverged;
        res.report.warnings.push_back("b1 = " + num(r.b1) + ": not converged by t = " + num(r.t_reached));
      }
      csv.row({num(r.b1), num(r.max_dev), num(r.min_dev), opt_num(r.delta_u),
               r.delta_u ? num(-*r.delta_u) : "", num(r.threshold), r.converged ? "1" : "0",
               num(r.t_reached)});
    }
    res.report.summary["threshold"] = thr;
    res.report.summary["rows"] = res.rows.size();
    res.report.summary["unconverged"] = unconverged;
  } catch (const std::exception& err) {
    res.report.failures.push_back(err.what());
  }
  write_report(res.report, cfg);
  return res;
}

// compare --------------------------------------------------------------------

CompareResult cmd_compare(const ExperimentConfig& cfg) {
  CompareResult res;
  res.report.command = "compare";
  try {
    cfg.validate();
    const auto& e = cfg.experiment;
    const auto& base = cfg.model;
    const auto sol = continuum_for(base);
    if (!sol) throw InvalidArgument("b1 is below the continuum existence threshold; no U to compare with");
    const auto U = profile(*sol);
    const std::vector<std::uint64_t> seeds = e.seeds.empty() ? std::vector<std::uint64_t>{base.seed} : e.seeds;

    for (auto kind : e.kinds) {
      // The complete graph is deterministic, so one row per n suffices.
      const std::size_t ns = kind == GraphKind::Complete ? 1 : seeds.size();
      for (int n : e.n_list) {
        for (std::size_t s = 0; s < ns; ++s) res.rows.push_back({kind, n, seeds[s], 0.0, false});
      }
    }
    const auto failed = parallel_for(res.rows.size(), cfg.threads, [&](std::size_t k) {
      auto& row = res.rows[k];
      auto p = base;
      p.n = row.n;
      p.seed = row.seed;
      std::vector<double> state;
      if (row.kind == GraphKind::Complete) {
        for (const auto& rec : solve_equilibrium(SignPattern::all_plus(p.n), p)) {
          if (stability_at(rec.v, p).stability == StabilityClass::AsymptoticallyStable) {
            state = rec.v;
            break;
          }
        }
        if (state.empty()) throw std::runtime_error("no stable synchronized equilibrium");
        row.converged = true;
      } else {
        const RotatingSystem sys(p, build_graph(row.kind, p));
        const auto ss = steady_state(std::cref(sys), random_initial_phases(p.n, p.seed), cfg.integrator,
                                     e.t_max, e.window, e.eps);
        state = wrapped(ss.state);
        row.converged = ss.converged;
      }
      row.l2 = l2_distance(embed(state), U);
    });
    std::vector<bool> bad(res.rows.size(), false);
    for (const auto& [k, msg] : failed) {
      bad[k] = true;
      const auto& r = res.rows[k];
      res.report.failures.push_back(std::string(to_string(r.kind)) + " n = " + std::to_string(r.n) +
                                    " seed = " + std::to_string(r.seed) + ": " + msg);
    }
    {
      CsvFile csv(prepare_output(cfg, res.report, "compare.csv"), "compare",
                  {"n", "l2_distance", "kind", "seed", "converged"});
      for (std::size_t k = 0; k < res.rows.size(); ++k) {
        const auto& r = res.rows[k];
        if (!bad[k] && !r.converged) {
          res.report.warnings.push_back(std::string(to_string(r.kind)) + " n = " + std::to_string(r.n) +
                                        " seed = " + std::to_string(r.seed) + ": not converged");
        }
        csv.row({std::to_string(r.n), bad[k] ? "" : num(r.l2), std::string(to_string(r.kind)),
                 std::to_string(r.seed), !bad[k] && r.converged ? "1" : "0"});
      }
    }
    for (auto kind : e.kinds) {
      for (int n : e.n_list) {
        std::vector<double> ds;
        for (std::size_t k = 0; k < res.rows.size(); ++k) {
          if (!bad[k] && res.rows[k].kind == kind && res.rows[k].n == n) ds.push_back(res.rows[k].l2);
        }
        if (!ds.empty()) res.summary.push_back({kind, n, median(ds), static_cast<int>(ds.size())});
      }
    }
    CsvFile csv(prepare_output(cfg, res.report, "compare_summary.csv"), "compare_summary",
                {"kind", "n", "median_l2", "samples"});
    for (const auto& s : res.summary) {
      csv.row({std::string(to_string(s.kind)), std::to_string(s.n), num(s.median_l2), std::to_string(s.samples)});
    }
    res.report.summary["delta_u"] = sol->delta_u;
    res.report.summary["rows"] = res.rows.size();
  } catch (const std::exception& err) {
    res.report.failures.push_back(err.what());
  }
  write_report(res.report, cfg);
  return res;
}

// continuum ------------------------------------------------------------------

ContinuumResult cmd_continuum(const ExperimentConfig& cfg) {
  ContinuumResult res;
  res.report.command = "continuum";
  try {
    cfg.validate();
    const auto& p = cfg.model;
    const auto& e = cfg.experiment;
    const double thr = existence_threshold(p.a, p.pK());
    res.solution = solve_C_discontinuous(e.flip_set, p.a, p.pK(), p.b1);
    res.report.summary["threshold"] = thr;
    if (!res.solution) throw InvalidArgument("no synchronized continuum solution at b1 = " + num(p.b1));
    const auto& s = *res.solution;
    CsvFile csv(prepare_output(cfg, res.report, "profile.csv"), "profile", {"x", "U"});
    for (int k = 0; k < e.profile_points; ++k) {
      const double x = static_cast<double>(k) / (e.profile_points - 1);
      csv.row({num(x), num(U_eval(s, x))});
    }
    res.report.summary["kind"] = std::string(to_string(s.kind));
    res.report.summary["C"] = s.C;
    res.report.summary["eta"] = s.eta;
    res.report.summary["residual"] = c_residual(s);
    if (s.kind == ContinuumKind::Continuous) res.report.summary["delta_u"] = s.delta_u;
  } catch (const std::exception& err) {
    res.report.failures.push_back(err.what());
  }
  write_report(res.report, cfg);
  return res;
}

// graph-dump -----------------------------------------------------------------

RunReport cmd_graph_dump(const ExperimentConfig& cfg) {
  RunReport report;
  report.command = "graph-dump";
  try {
    cfg.validate();
    const auto W = build_graph(cfg.graph_kind, cfg.model);
    std::ofstream os(prepare_output(cfg, report, "graph.txt"));
    os << "# ckm graph v1 kind=" << to_string(W.kind()) << " n=" << W.n() << " alpha_n=" << num(W.alpha_n())
       << "\n# i j w (0-based, nonzero entries)\n";
    for (int i = 0; i < W.n(); ++i) {
      for (int j = 0; j < W.n(); ++j) {
        if (W(i, j) != 0.0) os << i << ' ' << j << ' ' << num(W(i, j)) << '\n';
      }
    }
    report.summary["n"] = W.n();
    report.summary["density"] = W.density();
  } catch (const std::exception& err) {
    report.failures.push_back(err.what());
  }
  write_report(report, cfg);
  return report;
}

}  // namespace ckm::tools
