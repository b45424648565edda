#include <benchmark/benchmark.h>

#include <vector>

#include "coordc/convex.hpp"
#include "coordc/counters.hpp"
#include "coordc/lowerbound.hpp"
#include "coordc/matching.hpp"
#include "coordc/rng.hpp"
#include "coordc/routing.hpp"
#include "coordc/stable.hpp"

using namespace coordc;

static void BM_approx_count(benchmark::State& state) {
  Rng rng(1);
  std::vector<int> tau(static_cast<std::size_t>(state.range(0)));
  for (auto& s : tau) s = static_cast<int>(rng.below(3)) - 1;
  for (auto _ : state) benchmark::DoNotOptimize(approx_count(tau, 5, tau.size()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_approx_count)->Arg(1000)->Arg(100000);

static void BM_extract_count(benchmark::State& state) {
  Rng rng(2);
  std::vector<int> tau(static_cast<std::size_t>(state.range(0)));
  for (auto& s : tau) s = static_cast<int>(rng.below(3)) - 1;
  auto t = approx_count(tau, 2, tau.size());
  for (auto _ : state) benchmark::DoNotOptimize(extract_count(t));
}
BENCHMARK(BM_extract_count)->Arg(100000);

static void BM_dual_solve(benchmark::State& state) {
  auto inst = planted_matching_instance(10, static_cast<int>(state.range(0)) / 10, 2, 7);
  auto program = matching_program(inst);
  for (auto _ : state) benchmark::DoNotOptimize(solve_regularized_dual(program, 0.01));
}
BENCHMARK(BM_dual_solve)->Arg(100)->Arg(500);

static void BM_agent_best_response(benchmark::State& state) {
  std::vector<std::uint8_t> row(32, 1);
  std::vector<double> lambda(32, 0.4);
  for (auto _ : state) benchmark::DoNotOptimize(agent_best_response(row, lambda, 0.01));
}
BENCHMARK(BM_agent_best_response);

static void BM_hopcroft_karp(benchmark::State& state) {
  auto g = rang(2, static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(max_matching(g));
}
BENCHMARK(BM_hopcroft_karp)->Arg(256)->Arg(1024);

static void BM_br_sim(benchmark::State& state) {
  auto g = parallel_edge_game(static_cast<std::size_t>(state.range(0)), 2,
                              1.0 / static_cast<double>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(br_sim(g, 0.3, 5));
}
BENCHMARK(BM_br_sim)->Arg(100)->Arg(200);

static void BM_stab(benchmark::State& state) {
  auto inst = random_stable_instance(static_cast<std::size_t>(state.range(0)), 10,
                                     static_cast<int>(state.range(0)) / 10, 11);
  for (auto _ : state) benchmark::DoNotOptimize(stab(inst));
}
BENCHMARK(BM_stab)->Arg(100)->Arg(200);

BENCHMARK_MAIN();
