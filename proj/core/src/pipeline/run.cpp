#include "nalpha/pipeline/run.hpp"

#include <functional>
#include <map>

#include <spdlog/spdlog.h>

#include "nalpha/attribution/shapley.hpp"
#include "nalpha/common/csv.hpp"
#include "nalpha/common/error.hpp"
#include "nalpha/common/hash.hpp"
#include "nalpha/econometrics/panel.hpp"
#include "nalpha/event_study/benchmark.hpp"
#include "nalpha/portfolio/double_sort.hpp"
#include "nalpha/portfolio/turnover.hpp"
#include "nalpha/signals/signals.hpp"

#ifndef NALPHA_VERSION
#define NALPHA_VERSION "0.0.0"
#endif

namespace nalpha::pipeline {

namespace fs = std::filesystem;
using portfolio::StrategySeries;

namespace {

const std::vector<std::string> kDecileLabels = {"L", "2", "3", "4", "5", "6", "7", "8", "9", "H"};

portfolio::BacktestOptions backtest_options(const RunConfig& c, int lb) {
    portfolio::BacktestOptions o;
    o.lb = lb;
    o.min_firms = c.min_firms;
    o.weighting = c.weighting;
    return o;
}

nlohmann::json guarded(const std::function<nlohmann::json()>& f) {
    try {
        return f();
    } catch (const DomainError& e) {
        return {{"error", e.what()}};
    }
}

nlohmann::json cost_json(const RunConfig& c, const portfolio::BacktestResult& bt, const ingest::FactorPanel& factors) {
    const auto to = portfolio::long_short_turnover(bt.deciles[9], bt.deciles[0]);
    nlohmann::json j = {{"long", to.long_leg.average},
                        {"short", to.short_leg.average},
                        {"long_short_mean", to.combined_mean},
                        {"long_short_sum", to.combined_sum}};
    const auto rf = portfolio::aligned_rf(bt.long_short.months, factors);
    nlohmann::json net = nlohmann::json::object();
    for (double bps : c.costs_bps) {
        const auto n = portfolio::net_returns(bt.long_short, to.traded, bps / 1e4, rf);
        net[csv::format(bps)] = strategy_json(n, factors, {}, false);
    }
    j["net_long_short"] = std::move(net);
    return j;
}

nlohmann::json backtest_json(const RunConfig& c, const portfolio::BacktestResult& bt, const ingest::FactorPanel& factors) {
    nlohmann::json deciles = nlohmann::json::object();
    for (std::size_t d = 0; d < portfolio::kDeciles; ++d) {
        deciles[kDecileLabels[d]] = guarded([&] { return strategy_json(bt.deciles[d], factors, {c.alpha_model}, true); });
    }
    nlohmann::json j;
    j["deciles"] = std::move(deciles);
    j["H-L"] = guarded([&] { return strategy_json(bt.long_short, factors, c.factor_models, false); });
    j["turnover"] = guarded([&] { return cost_json(c, bt, factors); });
    nlohmann::json skipped = nlohmann::json::array();
    for (auto m : bt.skipped_months) skipped.push_back(m.str());
    j["skipped_months"] = std::move(skipped);
    j["missing_returns"] = bt.missing_returns;
    return j;
}

std::vector<std::string> split_key(const std::string& spec) {
    std::vector<std::string> parts;
    for (auto p : csv::split(spec, '*')) parts.emplace_back(p);
    return parts;
}

// Integer codes for a composite categorical key over the regression rows.
std::vector<std::int64_t> key_codes(const std::string& spec, const ingest::Dataset& ds,
                                    const std::vector<std::size_t>& rows) {
    std::map<std::string, std::int64_t> codes;
    std::vector<std::int64_t> out;
    out.reserve(rows.size());
    const auto parts = split_key(spec);
    for (std::size_t i : rows) {
        const auto& r = ds.reports[i];
        std::string key;
        for (const auto& p : parts) {
            if (p == "analyst") key += r.analyst_id;
            else if (p == "firm") key += r.firm_id;
            else if (p == "broker") key += r.broker_id;
            else if (p == "industry") key += r.industry;
            else if (p == "ym") key += r.release_date.month().str();
            else throw InputError("unknown fixed-effect component '" + p + "'");
            key += '\x1f';
        }
        auto it = codes.try_emplace(key, static_cast<std::int64_t>(codes.size())).first;
        out.push_back(it->second);
    }
    return out;
}

nlohmann::json regression_json(const std::string& name, const econ::RegressionResult& r,
                               const std::vector<std::string>& fe) {
    nlohmann::json coef = nlohmann::json::object();
    for (std::size_t i = 0; i < r.names.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        coef[r.names[i]] = {{"b", r.coef(k)}, {"se", r.se(k)}, {"t", r.t(k)}};
    }
    return {{"name", name},     {"fixed_effects", fe}, {"se_type", r.se_type}, {"n", r.n},
            {"absorbed", r.absorbed}, {"r2", r.r2},    {"adj_r2", r.adj_r2},   {"coef", coef}};
}

}  // namespace

nlohmann::json regression_artifact(const RunConfig& c, const ingest::Dataset& ds, const forecast::ForecastRun& run,
                                 const std::vector<signals::ReportSignals>& sig) {
    std::vector<std::size_t> rows;
    std::vector<double> y, pred;
    for (const auto& f : run.forecasts) {
        const auto& lab = run.labels[f.report];
        if (!lab) continue;
        rows.push_back(f.report);
        y.push_back(lab->value);
        pred.push_back(f.predicted_return);
    }
    nlohmann::json out = nlohmann::json::array();
    if (rows.size() < 10) return out;
    auto val = [](const std::optional<double>& v) { return v ? *v : ingest::kMissing; };
    const std::size_t n = rows.size();
    econ::PanelData base;
    base.y = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(n));
    for (const auto& fe : c.fixed_effects) base.fixed_effects.push_back(key_codes(fe, ds, rows));
    base.cluster_a = key_codes("firm", ds, rows);
    base.cluster_b = key_codes("ym", ds, rows);

    econ::PanelData p1 = base;
    p1.X = Eigen::Map<const Eigen::MatrixXd>(pred.data(), static_cast<Eigen::Index>(n), 1);
    p1.names = {"predicted"};
    out.push_back(guarded([&] { return regression_json("predicted", econ::panel_regression(p1), c.fixed_effects); }));

    econ::PanelData p2 = base;
    p2.X.resize(static_cast<Eigen::Index>(n), 5);
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        const auto& s = sig[rows[i]];
        p2.X(k, 0) = pred[i];
        p2.X(k, 1) = val(s.tone);
        p2.X(k, 2) = val(s.rec_rev);
        p2.X(k, 3) = val(s.ef_rev);
        p2.X(k, 4) = val(s.tp_rev);
    }
    p2.names = {"predicted", "tone", "rec_rev", "ef_rev", "tp_rev"};
    out.push_back(guarded([&] { return regression_json("predicted+controls", econ::panel_regression(p2), c.fixed_effects); }));
    return out;
}

nlohmann::json shapley_artifact(const RunConfig& c, const ingest::Dataset& ds, const forecast::ForecastRun& run,
                            const StrategySeries& baseline) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& spec : c.partitions) {
        auto part = attribution::make_partition(spec, ds.embeddings.groups());
        attribution::CoalitionEvaluator ev(ds, run, part, backtest_options(c, c.shapley_lookback));
        const bool exact = c.shapley_mode == "exact" && part.size() <= 24;
        auto decompose = [&](attribution::Functional f) {
            return exact ? attribution::shapley_exact(ev, f)
                         : attribution::shapley_mc(ev, f, c.shapley_samples, c.seed);
        };
        const auto sr = decompose(attribution::Functional::Sharpe);
        const auto ret = decompose(attribution::Functional::MeanReturn);

        auto table = [](const attribution::ShapleyReport& a, const attribution::ShapleyReport& b) {
            nlohmann::json groups = nlohmann::json::array();
            for (std::size_t p = 0; p < a.values.size(); ++p) {
                nlohmann::json g = {{"group", a.values[p].group},
                                    {"shap_sr", a.values[p].phi},
                                    {"shap_ret", b.values[p].phi},
                                    {"share_sr", a.values[p].share},
                                    {"share_ret", b.values[p].share},
                                    {"share_of_gain_sr", a.values[p].share_of_gain},
                                    {"share_of_gain_ret", b.values[p].share_of_gain}};
                if (a.mode == "mc") {
                    g["se_sr"] = a.values[p].se;
                    g["se_ret"] = b.values[p].se;
                }
                groups.push_back(std::move(g));
            }
            return groups;
        };
        nlohmann::json j = {{"mode", sr.mode},
                            {"players", part.size()},
                            {"lookback", c.shapley_lookback},
                            {"groups", table(sr, ret)},
                            {"sr", {{"v_full", sr.v_full}, {"v_empty", sr.v_empty}, {"phi_sum", sr.phi_sum()},
                                    {"efficiency_gap", sr.efficiency_gap()}}},
                            {"ret", {{"v_full", ret.v_full}, {"v_empty", ret.v_empty}, {"phi_sum", ret.phi_sum()},
                                     {"efficiency_gap", ret.efficiency_gap()}}},
                            {"coalition_backtests", ev.evaluations()},
                            {"v_empty_note",
                             "empty coalition: every report scores its model's intercept; firms then differ only "
                             "through the trailing mean over months, and ties sort by firm index"}};
        if (sr.mode == "mc") {
            j["samples"] = sr.samples;
            j["seed"] = sr.seed;
        }
        if (c.shapley_lookback == c.primary_lookback && baseline.size() > 0) {
            const auto full = ev.long_short(part.full());
            j["full_matches_baseline"] = *full == baseline.returns;
        }
        bool mappable = spec != "meta5";
        for (const auto& p : part.players) mappable = mappable && attribution::meta_category_of(p).has_value();
        if (mappable) {
            const auto mapping = attribution::meta_mapping(part.players);
            j["meta_categories"] = table(attribution::aggregate_groups(sr, mapping), attribution::aggregate_groups(ret, mapping));
        }
        if (c.monthly_shapley && part.size() <= 24) {
            const auto m = attribution::shapley_monthly(ev);
            nlohmann::json months = nlohmann::json::array();
            for (auto ym : m.months) months.push_back(ym.str());
            j["monthly_ret"] = {{"months", months}, {"players", m.players}, {"phi", m.phi}};
        }
        out[spec] = std::move(j);
    }
    return out;
}

RunSummary run(const RunConfig& c) {
    fs::create_directories(c.output_dir);
    const fs::path out = c.output_dir;
    const std::string tag = "config_hash=" + c.hash;
    RunSummary summary;
    summary.output_dir = out;

    nlohmann::json manifest = {{"config_hash", c.hash}, {"seed", c.seed}, {"version", NALPHA_VERSION}};
    std::vector<std::string> stages;
    std::string stage = "synth";
    auto artifact = [&](const std::string& name) { summary.artifacts.push_back(name); };

    try {
        if (c.synth) {
            synth::generate(*c.synth, out / "data");
            stages.push_back(stage);
        }

        stage = "ingest";
        const ingest::Dataset ds = ingest::load_dataset(c.paths, c.ingest);
        for (const auto& w : c.windows) {
            if (w.start < ds.calendar.first_month() || w.end > ds.calendar.last_month()) {
                throw InputError("window '" + w.name + "' lies outside the data span");
            }
        }
        stages.push_back(stage);

        stage = "forecast";
        const auto frun = forecast::expanding_forecasts(ds, c.forecast);
        const auto audit = forecast::audit_lookahead(ds, frun);
        forecast::write_forecasts_csv(out / "forecasts.csv", frun.forecasts, tag);
        artifact("forecasts.csv");
        stages.push_back(stage);

        nlohmann::json stats = {{"config_hash", c.hash}};
        stats["dataset"] = {{"reports", ds.reports.size()},
                            {"input_reports", ds.input_report_count},
                            {"rejects", ds.rejects.size()},
                            {"firms", ds.market.firm_count()},
                            {"first_month", ds.calendar.first_month().str()},
                            {"last_month", ds.calendar.last_month().str()}};
        nlohmann::json skipped = nlohmann::json::array();
        for (auto m : frun.skipped_months) skipped.push_back(m.str());
        stats["forecast"] = {{"policy", forecast::label_policy_name(c.forecast.policy)},
                             {"burn_in_months", c.forecast.burn_in_months},
                             {"models", frun.models.size()},
                             {"forecasts", frun.forecasts.size()},
                             {"skipped_months", skipped},
                             {"audit", {{"models", audit.models}, {"rows_checked", audit.rows_checked},
                                        {"violations", audit.violations}}}};

        stage = "backtest";
        const auto obs = forecast::signal_observations(ds, frun.forecasts);
        nlohmann::json lookbacks = nlohmann::json::object();
        portfolio::BacktestResult primary;
        for (int lb : c.lookbacks) {
            const auto bt = portfolio::strategy_returns(ds.market, ds.calendar, obs, backtest_options(c, lb));
            lookbacks[std::to_string(lb)] = backtest_json(c, bt, ds.factors);
            if (lb == c.primary_lookback) primary = bt;
        }
        stats["lookbacks"] = std::move(lookbacks);
        stats["primary_lookback"] = c.primary_lookback;
        primary.long_short.label = "narrative";

        nlohmann::json windows = nlohmann::json::object();
        for (const auto& w : c.windows) {
            auto o = backtest_options(c, c.primary_lookback);
            o.start = w.start;
            o.end = w.end;
            const auto bt = portfolio::strategy_returns(ds.market, ds.calendar, obs, o);
            nlohmann::json wj = backtest_json(c, bt, ds.factors);
            wj["start"] = w.start.str();
            wj["end"] = w.end.str();
            windows[w.name] = std::move(wj);
        }
        stats["windows"] = std::move(windows);
        stages.push_back(stage);

        stage = "event_study";
        const auto bench = event::assign_benchmarks(ds.market, ds.calendar, c.benchmark_bins);
        std::vector<event::Event> events;
        events.reserve(frun.forecasts.size());
        for (const auto& f : frun.forecasts) {
            const auto& r = ds.reports[f.report];
            events.push_back({r.firm, r.event_day, f.predicted_return});
        }
        const auto es = event::event_decile_curves(ds.market, ds.calendar, bench, events, c.event);
        std::vector<event::EventCurve> curves = es.curves;
        const auto& hl = es.curves.back();
        nlohmann::json esj = {{"events_used", es.events_used},
                              {"events_dropped", es.events_dropped},
                              {"thin_day_events", es.thin_day_events},
                              {"benchmark_bins", c.benchmark_bins},
                              {"benchmark_fallbacks", bench.fallbacks()},
                              {"horizon", c.event.horizon},
                              {"hl_car", hl.car.empty() ? nlohmann::json(nullptr) : nlohmann::json(hl.car.back())},
                              {"hl_t", hl.t.empty() ? nlohmann::json(nullptr) : nlohmann::json(hl.t.back())},
                              {"months", hl.months}};
        nlohmann::json ds_json = nlohmann::json::object();
        portfolio::DoubleSortOptions dso;
        dso.horizon = c.event.horizon;
        dso.lags = c.event.lags;
        for (auto ch : c.double_sorts) {
            const std::string name(ingest::characteristic_name(ch));
            ds_json[name] = guarded([&] {
                const auto r = portfolio::conditional_double_sort(ds.market, ds.calendar, bench, events, ch, dso);
                for (auto cv : r.curves) {
                    cv.label = name + "/" + cv.label;
                    curves.push_back(std::move(cv));
                }
                return nlohmann::json{{"spread_difference", r.spread_difference},
                                      {"t", r.spread_difference_t},
                                      {"months", r.months},
                                      {"skipped_months", r.skipped_months.size()}};
            });
        }
        esj["double_sorts"] = std::move(ds_json);
        stats["event_study"] = std::move(esj);
        write_curves_csv(out / "curves.csv", curves, tag);
        artifact("curves.csv");
        stages.push_back(stage);

        stage = "signals";
        const auto sig = signals::compute_signals(ds, bench);
        signals::write_signals_csv(out / "signals.csv", sig, tag);
        artifact("signals.csv");
        const auto profile = signals::decile_profile(signals::profile_input(ds, frun, sig));
        signals::write_profile_csv(out / "profile.csv", profile, tag);
        artifact("profile.csv");

        std::vector<StrategySeries> components;
        nlohmann::json sentiment = nlohmann::json::object();
        if (c.component_series.empty()) {
            for (auto kind : signals::kSentimentKinds) {
                const std::string name(signals::sentiment_kind_name(kind));
                const auto kobs = signals::sentiment_signal(ds, sig, kind);
                if (kobs.empty()) {
                    sentiment[name] = {{"error", "no observations"}};
                    continue;
                }
                auto bt = portfolio::strategy_returns(ds.market, ds.calendar, kobs,
                                                      backtest_options(c, c.primary_lookback));
                bt.long_short.label = name;
                sentiment[name] = guarded([&] { return strategy_json(bt.long_short, ds.factors, {c.alpha_model}, false); });
                if (bt.long_short.size() > 0) components.push_back(std::move(bt.long_short));
            }
        } else {
            components = read_series_csv(c.component_series);
        }
        stats["sentiment_portfolios"] = std::move(sentiment);

        nlohmann::json combo = nlohmann::json::object();
        std::vector<StrategySeries> all = components;
        all.push_back(primary.long_short);
        const auto aligned = common_months(all);
        if (!components.empty() && !aligned.empty() && aligned.front().size() > 0) {
            std::vector<StrategySeries> comp(aligned.begin(), aligned.end() - 1);
            const auto combined = portfolio::combine_strategies(aligned, "combined");
            const auto bench_combo = portfolio::combine_strategies(comp, "components");
            combo["components"] = guarded([&] { return strategy_json(bench_combo, ds.factors, {c.alpha_model}, false); });
            combo["combined"] = guarded([&] { return strategy_json(combined, ds.factors, {c.alpha_model}, false); });
            combo["information_ratio"] = guarded([&] {
                const auto ir = portfolio::information_ratio(combined, bench_combo);
                return nlohmann::json{{"ir", ir.ir}, {"mean_diff", ir.mean_diff}, {"sd_diff", ir.sd_diff},
                                      {"t", ir.t}, {"months", ir.months}};
            });
        }
        stats["combination"] = std::move(combo);
        std::vector<StrategySeries> series_out;
        for (std::size_t d = 0; d < portfolio::kDeciles; ++d) {
            StrategySeries s = primary.deciles[d];
            s.label = kDecileLabels[d];
            series_out.push_back(std::move(s));
        }
        series_out.push_back(primary.long_short);
        series_out.back().label = "H-L";
        for (const auto& s : components) series_out.push_back(s);
        write_series_csv(out / "series.csv", series_out, tag);
        artifact("series.csv");
        stages.push_back(stage);

        stage = "attribution";
        nlohmann::json shap = {{"config_hash", c.hash}};
        shap["partitions"] = shapley_artifact(c, ds, frun, primary.long_short);
        stages.push_back(stage);

        stage = "regressions";
        nlohmann::json reg = {{"config_hash", c.hash}};
        reg["panel"] = regression_artifact(c, ds, frun, sig);
        reg["factor_loadings"] = guarded([&] {
            return to_json(portfolio::perf_stats(primary.long_short, ds.factors,
                                                 portfolio::parse_factor_model(c.alpha_model), false));
        });
        if (aligned.size() >= 2 && aligned.front().size() >= 3) {
            std::vector<std::vector<double>> cols;
            std::vector<std::string> names;
            for (const auto& s : aligned) {
                cols.push_back(s.returns);
                names.push_back(s.label);
            }
            reg["correlations"] = guarded([&] {
                const auto m = econ::correlation_matrix(cols);
                std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
                for (Eigen::Index i = 0; i < m.rows(); ++i) {
                    for (Eigen::Index j = 0; j < m.cols(); ++j) rows[static_cast<std::size_t>(i)].push_back(m(i, j));
                }
                return nlohmann::json{{"names", names}, {"percent", rows}};
            });
        }
        stages.push_back(stage);

        write_json(out / "stats.json", stats);
        artifact("stats.json");
        write_json(out / "shap.json", shap);
        artifact("shap.json");
        write_json(out / "regressions.json", reg);
        artifact("regressions.json");

        nlohmann::json hashes = nlohmann::json::object();
        for (const auto& a : summary.artifacts) hashes[a] = hash_file(out / a);
        manifest["status"] = "ok";
        manifest["stages"] = stages;
        manifest["artifacts"] = hashes;
        manifest["dataset_fingerprint"] = ds.fingerprint();
        write_json(out / "manifest.json", manifest);
        artifact("manifest.json");
    } catch (const std::exception& e) {
        manifest["status"] = "failed";
        manifest["failed_stage"] = stage;
        manifest["error"] = e.what();
        manifest["stages"] = stages;
        manifest["partial_artifacts"] = summary.artifacts;
        try {
            write_json(out / "manifest.json", manifest);
        } catch (const std::exception& inner) {
            spdlog::error("could not write failure manifest: {}", inner.what());
        }
        throw;
    }
    return summary;
}

}  // namespace nalpha::pipeline
