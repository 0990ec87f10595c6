#include <benchmark/benchmark.h>

#include "dgr/eval.hpp"
#include "dgr/processor.hpp"
#include "dgr/reference.hpp"
#include "dgr/training.hpp"
#include "dgr/util.hpp"

using namespace dgr;

static void BM_ReferenceExecutor(benchmark::State& state) {
  TaskId task = static_cast<TaskId>(state.range(0));
  Graph g = make_task_instance(task, 16, 1);
  for (auto _ : state) benchmark::DoNotOptimize(run_reference(task, g));
}
BENCHMARK(BM_ReferenceExecutor)->DenseRange(0, 5)->Unit(benchmark::kMicrosecond);

static void BM_HardRollout(benchmark::State& state) {
  TaskId task = static_cast<TaskId>(state.range(0));
  int n = static_cast<int>(state.range(1));
  ModelParams golden = golden_model(task);
  NetTables nt = extract_tables(golden, task);
  Graph g = make_task_instance(task, n, 2);
  int T = reference_step_count(task, g);
  for (auto _ : state) benchmark::DoNotOptimize(hard_rollout(nt, g, T));
  state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_HardRollout)
    ->Args({0, 16})
    ->Args({0, 160})
    ->Args({2, 16})
    ->Args({2, 160})
    ->Unit(benchmark::kMicrosecond);

static void BM_TrainStep(benchmark::State& state) {
  TaskId task = static_cast<TaskId>(state.range(0));
  ModelParams mp = init_model({task}, 64, 0, 3);
  Graph g = make_task_instance(task, 16, 4);
  GraphView gv(g);
  HintTrajectory traj = run_reference(task, g);
  std::vector<std::vector<float>> grads;
  for (auto _ : state) {
    Tape tape;
    auto leaves = lift_params(tape, mp, true);
    auto parts = build_hint_loss<float>(tape, leaves, mp, gv, traj, 1.0f, 1.0f);
    tape.backward(parts.total);
    grads.clear();
    harvest_grads(tape, leaves, mp, grads);
    benchmark::DoNotOptimize(grads);
  }
  state.SetItemsProcessed(state.iterations() * traj.step_count());
}
BENCHMARK(BM_TrainStep)->DenseRange(0, 5)->Unit(benchmark::kMillisecond);

static void BM_TableExtraction(benchmark::State& state) {
  ModelParams golden = golden_model(TaskId::sp);
  for (auto _ : state) benchmark::DoNotOptimize(extract_tables(golden, TaskId::sp));
}
BENCHMARK(BM_TableExtraction)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
