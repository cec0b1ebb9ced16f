// Serial vs. OpenMP paths of validate, explore and audit. Arg(0) is serial,
// Arg(1) parallel; results of both paths are identical by construction.

#include <benchmark/benchmark.h>

#include "fixtures.hpp"
#include "random_spec.hpp"
#include "mlfsm/audit.hpp"
#include "mlfsm/explore.hpp"
#include "mlfsm/validator.hpp"

using namespace mlfsm;
using namespace mlfsm::testing;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::parallel : Exec::serial; }

// A layered spec: each clause waits on up to three earlier ones.
const ContractSpec& wide_spec() {
  static const ContractSpec spec = [] {
    std::mt19937_64 rng(1);
    const int n = 400;
    std::vector<std::pair<int, int>> edges;
    for (int v = 1; v < n; ++v)
      for (int k = 0; k < 3; ++k) edges.emplace_back(v, static_cast<int>(rng() % static_cast<std::uint64_t>(v)));
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return spec_from_edges(n, edges);
  }();
  return spec;
}

void BM_Validate(benchmark::State& state) {
  const auto& spec = wide_spec();
  for (auto _ : state) benchmark::DoNotOptimize(validate(spec, {}, exec_of(state)));
}
BENCHMARK(BM_Validate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

// Seed 264 reaches about 18k product states at depth 10.
void BM_Explore(benchmark::State& state) {
  const auto rc = random_case(264, {.max_clauses = 6, .max_states = 5, .max_vars = 3});
  for (auto _ : state) benchmark::DoNotOptimize(explore(rc.spec, rc.packages, 10, exec_of(state)));
}
BENCHMARK(BM_Explore)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Audit(benchmark::State& state) {
  std::vector<SourceUnit> units;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto rc = random_case(seed);
    for (const auto& u : generate(rc.spec, rc.packages).units) units.push_back({u.id, u.source});
  }
  for (auto _ : state) benchmark::DoNotOptimize(audit_sources(units, exec_of(state)));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * units.size()));
}
BENCHMARK(BM_Audit)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
