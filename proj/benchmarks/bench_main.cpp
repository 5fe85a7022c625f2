#include <benchmark/benchmark.h>

#include <functional>
#include <vector>

#include <ckm/continuum.hpp>
#include <ckm/equilibria.hpp>
#include <ckm/integrator.hpp>
#include <ckm/model.hpp>
#include <ckm/spectra.hpp>

namespace {

ckm::ModelParams params(int n, double b1 = 0.2) {
  ckm::ModelParams p;
  p.n = n;
  p.a = 1.0;
  p.K = 0.5;
  p.p = 1.0;
  p.b1 = b1;
  return p;
}

void BM_RotatingField(benchmark::State& state) {
  const auto p = params(static_cast<int>(state.range(0)));
  const auto v = ckm::random_initial_phases(p.n, 1);
  std::vector<double> out(p.n);
  for (auto _ : state) {
    ckm::rotating_vector_field(v, p, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * p.n);
}
BENCHMARK(BM_RotatingField)->RangeMultiplier(10)->Range(100, 100000);

void BM_DenseGraphField(benchmark::State& state) {
  auto p = params(static_cast<int>(state.range(0)));
  p.p = 0.5;
  const ckm::RotatingSystem sys(p, ckm::build_graph(ckm::GraphKind::RandomDense, p));
  const auto v = ckm::random_initial_phases(p.n, 1);
  std::vector<double> out(p.n);
  for (auto _ : state) {
    sys(0.0, v, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_DenseGraphField)->Arg(200)->Arg(1000);

void BM_Dop853Settle(benchmark::State& state) {
  const auto p = params(static_cast<int>(state.range(0)));
  const ckm::RotatingSystem sys(p, ckm::build_graph(ckm::GraphKind::Complete, p));
  const auto v0 = ckm::random_initial_phases(p.n, 1);
  for (auto _ : state) {
    auto traj = ckm::integrate(std::cref(sys), v0, {0.0, 100.0}, {}, std::vector<double>{100.0});
    benchmark::DoNotOptimize(traj.states.data());
  }
}
BENCHMARK(BM_Dop853Settle)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Enumerate(benchmark::State& state) {
  const auto p = params(static_cast<int>(state.range(0)), 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(ckm::enumerate_equilibria(p).records.size());
}
BENCHMARK(BM_Enumerate)->DenseRange(4, 12, 4)->Unit(benchmark::kMillisecond);

void BM_SolveStable(benchmark::State& state) {
  const auto p = params(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ckm::solve_equilibrium(ckm::SignPattern::all_plus(p.n), p).size());
  }
}
BENCHMARK(BM_SolveStable)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Spectrum(benchmark::State& state) {
  const auto p = params(static_cast<int>(state.range(0)));
  const auto v = ckm::solve_equilibrium(ckm::SignPattern::all_plus(p.n), p).front().v;
  for (auto _ : state) benchmark::DoNotOptimize(ckm::stability_at(v, p).n_positive);
}
BENCHMARK(BM_Spectrum)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_SolveC(benchmark::State& state) {
  double b1 = 0.11;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ckm::solve_C(1.0, 0.5, b1));
    b1 = b1 < 5.0 ? b1 * 1.01 : 0.11;
  }
}
BENCHMARK(BM_SolveC);

void BM_L2Distance(benchmark::State& state) {
  const auto p = params(static_cast<int>(state.range(0)));
  const auto v = ckm::solve_equilibrium(ckm::SignPattern::all_plus(p.n), p).front().v;
  const auto U = ckm::profile(*ckm::solve_C(p.a, p.pK(), p.b1));
  const auto f = ckm::embed(v);
  for (auto _ : state) benchmark::DoNotOptimize(ckm::l2_distance(f, U));
}
BENCHMARK(BM_L2Distance)->Arg(50)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
