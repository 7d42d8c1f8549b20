// Serial vs OpenMP goal-matrix evaluation over a generated scenario pool.
#include <benchmark/benchmark.h>

#include <memory>

#include "sad/evaluation.hpp"
#include "sad/factory.hpp"

namespace {

const std::vector<sad::TestSet>& pool() {
  static const std::vector<sad::TestSet> sets = [] {
    std::vector<sad::TestSet> out;
    for (auto kind : {sad::ScenarioKind::TypeA, sad::ScenarioKind::TypeB, sad::ScenarioKind::Cutout}) {
      sad::TestSet s{std::string(sad::to_string(kind)), {}};
      for (std::uint64_t k = 0; k < 16; ++k) {
        sad::GenParams p;
        p.seed = 100 + k;
        s.scenarios.push_back(std::make_shared<const sad::Scenario>(sad::generate(kind, p)));
      }
      out.push_back(std::move(s));
    }
    return out;
  }();
  return sets;
}

void run(benchmark::State& state, bool parallel) {
  const sad::MaintainPolicy maintain;
  const sad::RandomPolicy random;
  const std::vector<sad::NamedPolicy> policies{{"maintain", &maintain}, {"random", &random}};
  sad::EvalOptions opt;
  opt.stochastic_seeds = 2;
  const auto& sets = pool();
  for (auto _ : state) {
    auto rep = parallel ? sad::goal_matrix(policies, sets, opt) : sad::goal_matrix_serial(policies, sets, opt);
    benchmark::DoNotOptimize(rep.cells.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(3 * 16 * 3));
}

void BM_GoalMatrixSerial(benchmark::State& state) { run(state, false); }
void BM_GoalMatrixParallel(benchmark::State& state) { run(state, true); }

}  // namespace

BENCHMARK(BM_GoalMatrixSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GoalMatrixParallel)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
