#include <benchmark/benchmark.h>

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "equirate/evaluation.hpp"
#include "equirate/fundamentals.hpp"
#include "equirate/labeler.hpp"
#include "equirate/market_data.hpp"

namespace {

using namespace equirate;

Date day(int y, unsigned m, unsigned d) { return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}}; }

PriceSeries walk(const std::string& id, std::mt19937_64& rng) {
  std::normal_distribution<double> step(0.0002, 0.015);
  std::vector<PriceObservation> obs;
  double p = 100.0;
  for (int i = 0; i < 900; ++i) {
    const Date d = add_days(day(2020, 1, 1), i);
    const std::chrono::weekday w{std::chrono::sys_days{d}};
    if (w == std::chrono::Saturday || w == std::chrono::Sunday) continue;
    p *= std::exp(step(rng));
    obs.push_back({d, p});
  }
  return PriceSeries(id, std::move(obs));
}

void BM_AssignQuantiles(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::map<std::string, double> returns;
  for (int i = 0; i < state.range(0); ++i) returns[fmt::format("C{:05d}", i)] = std::normal_distribution<double>()(rng);
  for (auto _ : state) benchmark::DoNotOptimize(assign_quantiles(returns));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AssignQuantiles)->Arg(50)->Arg(500)->Arg(5000);

void BM_TechnicalSnapshot(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto company = walk("C", rng);
  const auto market = walk("M", rng);
  const auto sector = walk("S", rng);
  for (auto _ : state) benchmark::DoNotOptimize(build_technical_snapshot(company, market, sector, day(2022, 3, 1)));
}
BENCHMARK(BM_TechnicalSnapshot);

void BM_ForwardReturn(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto s = walk("C", rng);
  for (auto _ : state) benchmark::DoNotOptimize(compute_return(s, day(2021, 1, 4), 12));
}
BENCHMARK(BM_ForwardReturn);

void BM_Spearman(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::vector<double> x(static_cast<std::size_t>(state.range(0))), y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = static_cast<double>(std::uniform_int_distribution<int>(-5, 5)(rng));
    y[i] = static_cast<double>(std::uniform_int_distribution<int>(-2, 2)(rng));
  }
  for (auto _ : state) benchmark::DoNotOptimize(spearman(x, y));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Spearman)->Arg(100)->Arg(10000);

void BM_Mae(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::vector<int> p(static_cast<std::size_t>(state.range(0))), t(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::uniform_int_distribution<int>(-2, 2)(rng);
    t[i] = std::uniform_int_distribution<int>(-2, 2)(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(mae(p, t));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Mae)->Arg(75000);

void BM_RenderFundamentals(benchmark::State& state) {
  std::vector<FilingRow> rows;
  const auto catalog = MetricCatalog::defaults();
  for (int q = 0; q < 8; ++q) {
    const Date end = add_months(day(2021, 3, 31), 3 * q);
    for (const auto& d : catalog.definitions()) rows.push_back({"ACME", end, add_days(end, 35), d.name, 1.0e9 + q});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_fundamentals_html(ingest_fundamentals(rows, "ACME", day(2023, 3, 1))));
  }
}
BENCHMARK(BM_RenderFundamentals);

}  // namespace

BENCHMARK_MAIN();
