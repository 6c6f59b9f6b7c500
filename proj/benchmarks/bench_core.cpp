#include <benchmark/benchmark.h>

#include <filesystem>

#include "nalpha/attribution/partition.hpp"
#include "nalpha/attribution/shapley.hpp"
#include "nalpha/common/random.hpp"
#include "nalpha/forecast/forecaster.hpp"
#include "nalpha/forecast/ridge.hpp"
#include "nalpha/pipeline/run.hpp"
#include "nalpha/synth/generator.hpp"

using namespace nalpha;

namespace {

// One generated dataset with its forecasts, built once for every benchmark.
struct Scenario {
    ingest::Dataset dataset;
    forecast::ForecastRun run;

    Scenario() {
        const auto dir = std::filesystem::temp_directory_path() / "nalpha-bench";
        std::filesystem::remove_all(dir);
        auto spec = synth::default_spec();
        spec.n_firms = 200;
        spec.n_months = 48;
        synth::generate(spec, dir);
        dataset = ingest::load_dataset(pipeline::synth_paths(dir), {});
        forecast::ForecastOptions opt;
        opt.burn_in_months = spec.burn_in_months;
        run = forecast::expanding_forecasts(dataset, opt);
        std::filesystem::remove_all(dir);
    }
};

const Scenario& scenario() {
    static const Scenario s;
    return s;
}

void BM_RidgeFit(benchmark::State& state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    const auto d = static_cast<Eigen::Index>(state.range(1));
    Rng rng(1);
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) X(i, j) = rng.normal();
        y(i) = rng.normal();
    }
    for (auto _ : state) benchmark::DoNotOptimize(forecast::fit_ridge(X, y, 100.0, true));
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_RidgeFit)->Args({2000, 64})->Args({20000, 64})->Args({20000, 256});

void BM_CoalitionBacktest(benchmark::State& state) {
    const auto& s = scenario();
    portfolio::BacktestOptions opt;
    opt.lb = 12;
    const attribution::CoalitionEvaluator ev(s.dataset, s.run,
                                             attribution::make_partition("meta5", s.dataset.embeddings.groups()), opt);
    attribution::Coalition S = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ev.long_short_uncached(S));
        S = S % 31 + 1;
    }
}
BENCHMARK(BM_CoalitionBacktest)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
