// nalpha: command-line entry point. Exit codes: 0 ok, 1 user or data
// error, 2 internal error.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "nalpha/attribution/shapley.hpp"
#include "nalpha/common/config.hpp"
#include "nalpha/common/csv.hpp"
#include "nalpha/common/error.hpp"
#include "nalpha/common/parallel.hpp"
#include "nalpha/event_study/benchmark.hpp"
#include "nalpha/pipeline/run.hpp"
#include "nalpha/portfolio/turnover.hpp"
#include "nalpha/signals/signals.hpp"
#include "nalpha/synth/generator.hpp"

namespace fs = std::filesystem;
using namespace nalpha;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
};

pipeline::RunConfig config_of(const Common& c) {
    if (c.config.empty()) throw InputError("--config is required");
    return pipeline::load_run_config(c.config, c.seed);
}

ingest::Dataset dataset_of(const pipeline::RunConfig& cfg) { return ingest::load_dataset(cfg.paths, cfg.ingest); }

std::vector<forecast::ForecastRecord> signal_file(const std::string& path, const ingest::Dataset& ds) {
    auto f = forecast::read_forecasts_csv(path);
    forecast::attach_reports(f, ds);
    return f;
}

void print(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nalpha: narrative return forecasting, portfolio backtests, event studies and attribution"};
    app.require_subcommand(1);
    std::size_t threads = 0;
    std::string log_level = "warn";
    app.add_option("--threads", threads, "Worker thread cap (0 = hardware concurrency)");
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

    Common common;
    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config,--dataset", common.config, "Run configuration (TOML or JSON)")->required();
    };

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "Load and validate inputs");
    add_config(ingest_cmd);
    std::string rejects_out;
    ingest_cmd->add_option("--rejects", rejects_out, "Write rejected reports to this CSV");

    // forecast
    auto* forecast_cmd = app.add_subcommand("forecast", "Expanding-window ridge forecasts");
    add_config(forecast_cmd);
    std::string forecast_out = "forecasts.csv";
    forecast_cmd->add_option("--out", forecast_out, "Forecast CSV");
    std::string policy;
    forecast_cmd->add_option("--policy", policy, "labels-realized|release-dated");

    // backtest
    auto* backtest_cmd = app.add_subcommand("backtest", "Decile portfolios from forecasts");
    add_config(backtest_cmd);
    std::string signal_path, backtest_out = "stats.json", series_out, factors_path, model = "ff6";
    int lb = 12;
    std::vector<double> cost_bps;
    backtest_cmd->add_option("--signal", signal_path, "Forecast CSV")->required();
    backtest_cmd->add_option("--lb", lb, "Lookback in months");
    backtest_cmd->add_option("--cost-bps", cost_bps, "Transaction cost levels in basis points");
    backtest_cmd->add_option("--factors", factors_path, "Factor CSV (default: the config's)");
    backtest_cmd->add_option("--model", model, "capm|ff3|ff5|ff6|none|cols:A+B");
    backtest_cmd->add_option("--out", backtest_out, "Statistics JSON");
    backtest_cmd->add_option("--series", series_out, "Monthly decile and H-L returns CSV");

    // eventstudy
    auto* event_cmd = app.add_subcommand("eventstudy", "Benchmark-adjusted CAR curves by forecast decile");
    add_config(event_cmd);
    std::string event_signal, event_out = "curves.csv";
    int horizon = 252, bins = 5;
    event_cmd->add_option("--signal", event_signal, "Forecast CSV")->required();
    event_cmd->add_option("--horizon", horizon, "Event days");
    event_cmd->add_option("--bins", bins, "Benchmark bins per characteristic");
    event_cmd->add_option("--out", event_out, "Curves CSV");

    // shapley
    auto* shap_cmd = app.add_subcommand("shapley", "Shapley attribution over embedding groups");
    add_config(shap_cmd);
    std::string partition = "meta5", functional = "sr", mode = "exact", shap_out = "shap.json";
    std::size_t samples = 5000;
    std::uint64_t shap_seed = 0;
    int shap_lb = 12;
    shap_cmd->add_option("--partition", partition, "meta5|topic17|groups|so-timeframe|so-sentiment|so-focus|file:<csv>");
    shap_cmd->add_option("--functional", functional, "sr|ret");
    shap_cmd->add_option("--mode", mode, "exact|mc");
    shap_cmd->add_option("--samples", samples, "Monte-Carlo permutations");
    shap_cmd->add_option("--seed", shap_seed, "Monte-Carlo seed");
    shap_cmd->add_option("--lb", shap_lb, "Lookback in months");
    shap_cmd->add_option("--out", shap_out, "Output JSON");

    // signals
    auto* signals_cmd = app.add_subcommand("signals", "Tone, revisions, SUE and CAR(0,1) per report");
    add_config(signals_cmd);
    std::string signals_out = "signals.csv";
    signals_cmd->add_option("--out", signals_out, "Signals CSV");

    // regress
    auto* regress_cmd = app.add_subcommand("regress", "Fixed-effects panel regressions of realized returns");
    add_config(regress_cmd);
    std::string regress_out = "regressions.json";
    regress_cmd->add_option("--out", regress_out, "Output JSON");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic input set");
    std::string spec_path, synth_out;
    std::optional<std::uint64_t> synth_seed;
    synth_cmd->add_option("--spec", spec_path, "Spec JSON (default spec when omitted)");
    synth_cmd->add_option("--out", synth_out, "Output directory")->required();
    synth_cmd->add_option("--seed", synth_seed, "Override the spec seed");

    // run
    auto* run_cmd = app.add_subcommand("run", "Full reproduction run");
    add_config(run_cmd);
    run_cmd->add_option("--seed", common.seed, "Override the config seed");
    std::string run_out;
    run_cmd->add_option("--out", run_out, "Override the output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        spdlog::set_level(spdlog::level::from_str(log_level));
        if (threads > 0) set_worker_threads(threads);

        if (*ingest_cmd) {
            const auto cfg = config_of(common);
            const auto ds = dataset_of(cfg);
            if (!rejects_out.empty()) ingest::write_rejects(rejects_out, ds.rejects);
            print({{"reports", ds.reports.size()},
                   {"input_reports", ds.input_report_count},
                   {"rejects", ds.rejects.size()},
                   {"firms", ds.market.firm_count()},
                   {"trading_days", ds.calendar.size()},
                   {"embedding_dim", ds.embeddings.dim()},
                   {"groups", ds.embeddings.groups()},
                   {"fingerprint", ds.fingerprint()}});
        } else if (*forecast_cmd) {
            auto cfg = config_of(common);
            if (!policy.empty()) cfg.forecast.policy = forecast::parse_label_policy(policy);
            const auto ds = dataset_of(cfg);
            const auto run = forecast::expanding_forecasts(ds, cfg.forecast);
            const auto audit = forecast::audit_lookahead(ds, run);
            forecast::write_forecasts_csv(forecast_out, run.forecasts, "config_hash=" + cfg.hash);
            print({{"models", run.models.size()},
                   {"forecasts", run.forecasts.size()},
                   {"audit_violations", audit.violations},
                   {"audit_rows_checked", audit.rows_checked}});
            if (audit.violations > 0) {
                for (const auto& d : audit.details) std::cerr << d << '\n';
                return 1;
            }
        } else if (*backtest_cmd) {
            const auto cfg = config_of(common);
            const auto ds = dataset_of(cfg);
            const auto factors = factors_path.empty() ? ds.factors : ingest::read_factors_csv(factors_path);
            const auto fc = signal_file(signal_path, ds);
            portfolio::BacktestOptions o;
            o.lb = lb;
            o.min_firms = cfg.min_firms;
            o.weighting = cfg.weighting;
            const auto bt = portfolio::strategy_returns(ds.market, ds.calendar, forecast::signal_observations(ds, fc), o);
            nlohmann::json j = {{"config_hash", cfg.hash}, {"lookback", lb}};
            nlohmann::json deciles;
            const char* labels[] = {"L", "2", "3", "4", "5", "6", "7", "8", "9", "H"};
            for (std::size_t d = 0; d < portfolio::kDeciles; ++d) {
                deciles[labels[d]] = pipeline::strategy_json(bt.deciles[d], factors, {model}, true);
            }
            j["deciles"] = deciles;
            j["H-L"] = pipeline::strategy_json(bt.long_short, factors, {model}, false);
            const auto to = portfolio::long_short_turnover(bt.deciles[9], bt.deciles[0]);
            j["turnover"] = {{"long", to.long_leg.average},
                             {"short", to.short_leg.average},
                             {"long_short_mean", to.combined_mean},
                             {"long_short_sum", to.combined_sum}};
            const auto rf = portfolio::aligned_rf(bt.long_short.months, factors);
            for (double bps : cost_bps.empty() ? cfg.costs_bps : cost_bps) {
                const auto net = portfolio::net_returns(bt.long_short, to.traded, bps / 1e4, rf);
                j["turnover"]["net_long_short"][csv::format(bps)] = pipeline::strategy_json(net, factors, {}, false);
            }
            pipeline::write_json(backtest_out, j);
            if (!series_out.empty()) {
                std::vector<portfolio::StrategySeries> ss(bt.deciles.begin(), bt.deciles.end());
                for (std::size_t d = 0; d < ss.size(); ++d) ss[d].label = labels[d];
                ss.push_back(bt.long_short);
                ss.back().label = "H-L";
                pipeline::write_series_csv(series_out, ss, "config_hash=" + cfg.hash);
            }
        } else if (*event_cmd) {
            auto cfg = config_of(common);
            cfg.event.horizon = horizon;
            const auto ds = dataset_of(cfg);
            const auto fc = signal_file(event_signal, ds);
            const auto bench = event::assign_benchmarks(ds.market, ds.calendar, bins);
            std::vector<event::Event> events;
            for (const auto& f : fc) events.push_back({ds.reports[f.report].firm, ds.reports[f.report].event_day, f.predicted_return});
            const auto es = event::event_decile_curves(ds.market, ds.calendar, bench, events, cfg.event);
            pipeline::write_curves_csv(event_out, es.curves, "config_hash=" + cfg.hash);
            print({{"events_used", es.events_used}, {"events_dropped", es.events_dropped},
                   {"hl_car", es.curves.back().car.back()}, {"hl_t", es.curves.back().t.back()}});
        } else if (*shap_cmd) {
            const auto cfg = config_of(common);
            const auto ds = dataset_of(cfg);
            const auto run = forecast::expanding_forecasts(ds, cfg.forecast);
            portfolio::BacktestOptions o;
            o.lb = shap_lb;
            o.min_firms = cfg.min_firms;
            o.weighting = cfg.weighting;
            attribution::CoalitionEvaluator ev(ds, run, attribution::make_partition(partition, ds.embeddings.groups()), o);
            const auto f = attribution::parse_functional(functional);
            attribution::ShapleyReport r;
            if (mode == "exact") r = attribution::shapley_exact(ev, f);
            else if (mode == "mc") r = attribution::shapley_mc(ev, f, samples, shap_seed);
            else throw InputError("--mode must be exact or mc");
            nlohmann::json j = attribution::to_json(r);
            j["config_hash"] = cfg.hash;
            bool mappable = partition != "meta5";
            for (const auto& v : r.values) mappable = mappable && attribution::meta_category_of(v.group).has_value();
            if (mappable) {
                j["meta_categories"] = attribution::to_json(
                    attribution::aggregate_groups(r, attribution::meta_mapping(ev.partition().players)));
            }
            pipeline::write_json(shap_out, j);
        } else if (*signals_cmd) {
            const auto cfg = config_of(common);
            const auto ds = dataset_of(cfg);
            const auto bench = event::assign_benchmarks(ds.market, ds.calendar, cfg.benchmark_bins);
            signals::write_signals_csv(signals_out, signals::compute_signals(ds, bench), "config_hash=" + cfg.hash);
        } else if (*regress_cmd) {
            const auto cfg = config_of(common);
            const auto ds = dataset_of(cfg);
            const auto run = forecast::expanding_forecasts(ds, cfg.forecast);
            const auto bench = event::assign_benchmarks(ds.market, ds.calendar, cfg.benchmark_bins);
            const auto sig = signals::compute_signals(ds, bench);
            pipeline::write_json(regress_out, {{"config_hash", cfg.hash},
                                               {"panel", pipeline::regression_artifact(cfg, ds, run, sig)}});
        } else if (*synth_cmd) {
            synth::SynthSpec spec = synth::default_spec();
            if (!spec_path.empty()) spec = synth::spec_from_json(read_config_file(spec_path));
            if (synth_seed) spec.seed = *synth_seed;
            const auto truth = synth::generate(spec, synth_out);
            print({{"reports", truth.reports},
                   {"planted_spread", truth.planted_spread},
                   {"realized_spread", truth.realized_spread}});
        } else if (*run_cmd) {
            auto cfg = config_of(common);
            if (!run_out.empty()) {
                cfg.output_dir = run_out;
                if (cfg.synth) cfg.paths = pipeline::synth_paths(cfg.output_dir / "data");
            }
            const auto summary = pipeline::run(cfg);
            print({{"output_dir", summary.output_dir.string()}, {"artifacts", summary.artifacts}, {"config_hash", cfg.hash}});
        }
    } catch (const nalpha::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
