#include <benchmark/benchmark.h>

#include "regsched/experiment.hpp"
#include "regsched/jointmdp.hpp"
#include "regsched/sim.hpp"
#include "regsched/singlearm.hpp"

using namespace regsched;

namespace {

Scenario two_clients() {
  Scenario sc;
  sc.clients = {{0.8, 1.0, 3.0}, {0.6, 1.0, 3.0}};
  sc.channels = 1;
  return sc;
}

void bm_solve_average(benchmark::State& state) {
  const JointMdp mdp = make_joint_mdp(two_clients(), static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_average(mdp).gain);
  state.SetLabel(std::to_string(mdp.num_states) + " states");
}
BENCHMARK(bm_solve_average)->Arg(25)->Arg(50)->Arg(100);

void bm_oracle_index(benchmark::State& state) {
  const ClientParams c{0.6, 1.0, 3.0};
  for (auto _ : state)
    benchmark::DoNotOptimize(
        oracle_index(state.range(0), c, ObjectiveMode::average, 0.0));
}
BENCHMARK(bm_oracle_index)->Arg(0)->Arg(10)->Arg(20);

void bm_simulation(benchmark::State& state) {
  const Scenario sc = two_clients();
  auto policy = make_policy("index", sc, 50, TieRule::lowest_index);
  SimOptions opts;
  opts.horizon = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(run(sc, *policy, opts).reward_avg);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_simulation)->Arg(10000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
