#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nalpha/event_study/car.hpp"
#include "nalpha/forecast/forecaster.hpp"
#include "nalpha/ingest/dataset.hpp"
#include "nalpha/portfolio/backtest.hpp"
#include "nalpha/portfolio/performance.hpp"
#include "nalpha/signals/signals.hpp"
#include "nalpha/synth/generator.hpp"

namespace nalpha::pipeline {

struct WindowSpec {
    std::string name;
    YearMonth start;
    YearMonth end;
};

/// Everything a reproduction run needs, parsed from one TOML/JSON file.
struct RunConfig {
    nlohmann::json document;  ///< config as loaded, with the seed override applied
    std::string hash;         ///< hash of the canonical document
    std::filesystem::path base_dir;
    std::filesystem::path output_dir;
    std::uint64_t seed = 0;

    std::optional<synth::SynthSpec> synth;  ///< generate inputs into <output_dir>/data
    ingest::DataPaths paths;
    ingest::IngestOptions ingest;

    forecast::ForecastOptions forecast;

    std::vector<int> lookbacks = {9, 12, 18, 24};
    int primary_lookback = 12;
    std::vector<double> costs_bps = {35.0, 60.0};
    std::vector<std::string> factor_models = {"capm", "ff3", "ff5", "ff6"};
    std::string alpha_model = "ff6";
    std::size_t min_firms = 10;
    portfolio::Weighting weighting = portfolio::Weighting::Value;
    std::vector<WindowSpec> windows;
    std::filesystem::path component_series;  ///< optional CSV of external strategy returns

    int benchmark_bins = 5;
    event::EventStudyOptions event;
    std::vector<ingest::Characteristic> double_sorts = {ingest::Characteristic::LogSize,
                                                        ingest::Characteristic::BookToMarket};

    std::vector<std::string> partitions = {"meta5"};
    std::string shapley_mode = "exact";
    std::size_t shapley_samples = 5000;
    int shapley_lookback = 12;
    bool monthly_shapley = false;

    std::vector<std::string> fixed_effects = {"analyst*ym", "industry*ym"};
};

/// Parses a config file; relative paths resolve against its directory.
RunConfig load_run_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = {});
RunConfig parse_run_config(const nlohmann::json& document, const std::filesystem::path& base_dir,
                           std::optional<std::uint64_t> seed_override = {});

/// Input paths inside a generated data directory.
ingest::DataPaths synth_paths(const std::filesystem::path& dir);

struct RunSummary {
    std::filesystem::path output_dir;
    std::vector<std::string> artifacts;
};

/// Runs every stage and writes stats.json, curves.csv, shap.json,
/// profile.csv, regressions.json, forecasts.csv, series.csv, signals.csv
/// and manifest.json. On failure the manifest is written with status
/// "failed" and the failing stage before the error propagates.
RunSummary run(const RunConfig& config);

// Building blocks shared with the CLI subcommands.

/// Panel regressions of realized returns on predictions (and tone and
/// revision controls) with the configured fixed effects, clustered by firm
/// and month.
nlohmann::json regression_artifact(const RunConfig& config, const ingest::Dataset& dataset,
                                   const forecast::ForecastRun& run, const std::vector<signals::ReportSignals>& signals);
/// Shapley tables for every configured partition. `baseline` is the H-L
/// series of the standard backtest at the primary lookback.
nlohmann::json shapley_artifact(const RunConfig& config, const ingest::Dataset& dataset,
                                const forecast::ForecastRun& run, const portfolio::StrategySeries& baseline);
nlohmann::json to_json(const portfolio::PerfStats& s);
/// Mean, sd and Sharpe, plus alphas for each model (short series get
/// summary fields only).
nlohmann::json strategy_json(const portfolio::StrategySeries& s, const ingest::FactorPanel& factors,
                             const std::vector<std::string>& models, bool excess);
void write_series_csv(const std::filesystem::path& path, const std::vector<portfolio::StrategySeries>& series,
                      const std::string& comment);
void write_curves_csv(const std::filesystem::path& path, const std::vector<event::EventCurve>& curves,
                      const std::string& comment);
/// Reads a month,<name>... CSV of monthly strategy returns.
std::vector<portfolio::StrategySeries> read_series_csv(const std::filesystem::path& path);
/// Restricts each series to the months present in all of them.
std::vector<portfolio::StrategySeries> common_months(const std::vector<portfolio::StrategySeries>& series);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace nalpha::pipeline
