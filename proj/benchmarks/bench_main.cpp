#include <benchmark/benchmark.h>

#include "pdg/config.hpp"
#include "pdg/retarget.hpp"

using namespace pdg;

namespace {

void BM_SolveCubic(benchmark::State& st) {
  GuidanceProblem p;
  p.r0 = Vec3(-28500, 0, 5500);
  p.v0 = Vec3(336, 0, -59);
  p.a0 = Vec3(-2.26, 0, 0.23);
  p.af = Vec3(0, 0, 1.52);
  for (auto _ : st) benchmark::DoNotOptimize(solve_cubic_coeffs(p, 164.0));
}
BENCHMARK(BM_SolveCubic);

void BM_GuidanceCycle(benchmark::State& st) {
  const RunConfig cfg;
  const LanderState x0 = cfg.initial_state(cfg.nominal);
  const GuidanceProblem p = make_problem(x0, cfg.scenario, cfg.limits.g);
  const GuidanceOptions o = cfg.rollout_options().guidance;
  for (auto _ : st) benchmark::DoNotOptimize(guidance_cycle(x0, p, 164.0, o));
}
BENCHMARK(BM_GuidanceCycle);

void BM_NominalRollout(benchmark::State& st) {
  const RunConfig cfg;
  RolloutOptions o = cfg.rollout_options();
  o.record_trace = st.range(0) != 0;
  const LanderState x0 = cfg.initial_state(cfg.nominal);
  const GuidanceProblem p = make_problem(x0, cfg.scenario, cfg.limits.g);
  for (auto _ : st) benchmark::DoNotOptimize(rollout_base_policy(x0, p, 166.0, o));
}
BENCHMARK(BM_NominalRollout)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FeasibilitySet(benchmark::State& st) {
  const RunConfig cfg;
  const ReducedGuidanceState nom = cfg.nominal_reduced();
  const RolloutOptions o = cfg.rollout_options();
  for (auto _ : st) benchmark::DoNotOptimize(compute_feasibility_set(nom, cfg.algorithm1, cfg.scenario, o));
}
BENCHMARK(BM_FeasibilitySet)->Unit(benchmark::kMillisecond);

void BM_RetargetCore(benchmark::State& st) {
  const ConicParams<double> p{80.0, 90.0, 0.9, 0.3, 1.0 / 400, 1.0 / 900, 1.0};
  double S = 26000;
  for (auto _ : st) {
    benchmark::DoNotOptimize(retarget_core(p, S, 4000.0, 54.0, 344.0, 0.0));
    S += 1e-9;
  }
}
BENCHMARK(BM_RetargetCore);

}  // namespace
BENCHMARK_MAIN();
