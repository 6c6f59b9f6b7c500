#include <set>

#include "nalpha/common/config.hpp"
#include "nalpha/common/error.hpp"
#include "nalpha/common/hash.hpp"
#include "nalpha/pipeline/run.hpp"

namespace nalpha::pipeline {

namespace {

const nlohmann::json kEmpty = nlohmann::json::object();

const nlohmann::json& table(const nlohmann::json& doc, const char* name) {
    if (!doc.contains(name)) return kEmpty;
    const auto& t = doc.at(name);
    if (!t.is_object()) throw InputError(std::string("config: [") + name + "] must be a table");
    return t;
}

void check_keys(const nlohmann::json& t, const std::string& where, const std::set<std::string>& known) {
    for (const auto& [k, v] : t.items()) {
        if (!known.contains(k)) throw InputError("config: unknown key '" + k + "' in " + where);
    }
}

template <class T>
void read(const nlohmann::json& t, const char* key, T& out) {
    if (t.contains(key)) out = t.at(key).get<T>();
}

}  // namespace

ingest::DataPaths synth_paths(const std::filesystem::path& dir) {
    ingest::DataPaths p;
    p.reports = dir / "reports.csv";
    p.embeddings = dir / "embeddings.bin";
    p.market = dir / "market.csv";
    p.chars = dir / "chars.csv";
    p.factors = dir / "factors.csv";
    p.calendar = dir / "calendar.csv";
    p.numerics = dir / "numerics.csv";
    p.earnings = dir / "earnings.csv";
    return p;
}

RunConfig parse_run_config(const nlohmann::json& document, const std::filesystem::path& base_dir,
                           std::optional<std::uint64_t> seed_override) {
    if (!document.is_object()) throw InputError("config must be a table");
    RunConfig c;
    c.document = document;
    c.base_dir = base_dir;
    try {
        check_keys(document, "the top level",
                   {"seed", "output_dir", "synth", "data", "forecast", "portfolio", "windows", "event_study",
                    "attribution", "regression"});
        std::uint64_t seed = 0;
        read(document, "seed", seed);
        if (seed_override) seed = *seed_override;
        c.seed = seed;
        c.document["seed"] = seed;

        std::string out = "out";
        read(document, "output_dir", out);
        c.output_dir = std::filesystem::path(out).is_absolute() ? std::filesystem::path(out) : base_dir / out;

        const auto& data = table(document, "data");
        if (document.contains("synth")) {
            synth::SynthSpec spec = synth::spec_from_json(table(document, "synth"));
            spec.seed = seed;
            c.synth = spec;
            c.paths = synth_paths(c.output_dir / "data");
            check_keys(data, "[data]", {"sample_start", "sample_end", "match_window", "match_unit"});
        } else {
            if (!document.contains("data")) throw InputError("config: needs a [data] or [synth] table");
            c.paths = ingest::data_paths_from_config(data, base_dir);
        }
        c.ingest = ingest::ingest_options_from_config(data);

        const auto& fc = table(document, "forecast");
        check_keys(fc, "[forecast]",
                   {"burn_in_months", "grid", "folds", "policy", "horizon_months", "days_per_month", "include_day0",
                    "delist", "standardize", "purge_months"});
        read(fc, "burn_in_months", c.forecast.burn_in_months);
        if (fc.contains("grid")) c.forecast.grid = forecast::parse_grid(fc.at("grid").get<std::string>());
        read(fc, "folds", c.forecast.folds);
        if (fc.contains("policy")) c.forecast.policy = forecast::parse_label_policy(fc.at("policy").get<std::string>());
        read(fc, "horizon_months", c.forecast.label.horizon_months);
        read(fc, "days_per_month", c.forecast.label.days_per_month);
        read(fc, "include_day0", c.forecast.label.include_day0);
        read(fc, "standardize", c.forecast.standardize);
        read(fc, "purge_months", c.forecast.purge_months);
        if (fc.contains("delist")) {
            const auto d = fc.at("delist").get<std::string>();
            if (d == "absent") c.forecast.label.delist = forecast::DelistPolicy::Absent;
            else if (d == "compound") c.forecast.label.delist = forecast::DelistPolicy::CompoundAvailable;
            else throw InputError("config: delist must be 'absent' or 'compound'");
        }

        const auto& pf = table(document, "portfolio");
        check_keys(pf, "[portfolio]",
                   {"lookbacks", "primary_lookback", "costs_bps", "factor_models", "alpha_model", "min_firms",
                    "weighting", "component_series"});
        read(pf, "lookbacks", c.lookbacks);
        read(pf, "primary_lookback", c.primary_lookback);
        read(pf, "costs_bps", c.costs_bps);
        read(pf, "factor_models", c.factor_models);
        read(pf, "alpha_model", c.alpha_model);
        read(pf, "min_firms", c.min_firms);
        if (pf.contains("weighting")) {
            const auto w = pf.at("weighting").get<std::string>();
            if (w == "value") c.weighting = portfolio::Weighting::Value;
            else if (w == "equal") c.weighting = portfolio::Weighting::Equal;
            else throw InputError("config: weighting must be 'value' or 'equal'");
        }
        if (pf.contains("component_series")) c.component_series = base_dir / pf.at("component_series").get<std::string>();
        for (int lb : c.lookbacks) {
            if (lb < 1) throw InputError("config: lookbacks must be >= 1");
        }
        if (std::find(c.lookbacks.begin(), c.lookbacks.end(), c.primary_lookback) == c.lookbacks.end()) {
            c.lookbacks.push_back(c.primary_lookback);
        }
        for (const auto& m : c.factor_models) (void)portfolio::parse_factor_model(m);
        (void)portfolio::parse_factor_model(c.alpha_model);
        for (double bps : c.costs_bps) {
            if (bps < 0.0) throw InputError("config: costs must be >= 0");
        }

        if (document.contains("windows")) {
            for (const auto& w : document.at("windows")) {
                check_keys(w, "[[windows]]", {"name", "start", "end"});
                WindowSpec ws{w.at("name").get<std::string>(), YearMonth::parse(w.at("start").get<std::string>()),
                              YearMonth::parse(w.at("end").get<std::string>())};
                if (ws.end < ws.start) throw InputError("config: window '" + ws.name + "' ends before it starts");
                c.windows.push_back(ws);
            }
        }

        const auto& ev = table(document, "event_study");
        check_keys(ev, "[event_study]", {"horizon", "bins", "min_day_reports", "lags", "min_span_months", "double_sorts"});
        read(ev, "horizon", c.event.horizon);
        read(ev, "bins", c.benchmark_bins);
        read(ev, "min_day_reports", c.event.min_day_reports);
        read(ev, "lags", c.event.lags);
        read(ev, "min_span_months", c.event.min_span_months);
        if (ev.contains("double_sorts")) {
            c.double_sorts.clear();
            for (const auto& n : ev.at("double_sorts")) {
                const auto name = n.get<std::string>();
                auto ch = ingest::parse_characteristic(name);
                if (!ch) throw InputError("config: unknown characteristic '" + name + "'");
                c.double_sorts.push_back(*ch);
            }
        }
        if (c.benchmark_bins < 1) throw InputError("config: benchmark bins must be >= 1");

        const auto& at = table(document, "attribution");
        check_keys(at, "[attribution]", {"partitions", "mode", "samples", "lookback", "monthly"});
        read(at, "partitions", c.partitions);
        read(at, "mode", c.shapley_mode);
        read(at, "samples", c.shapley_samples);
        read(at, "lookback", c.shapley_lookback);
        read(at, "monthly", c.monthly_shapley);
        if (c.shapley_mode != "exact" && c.shapley_mode != "mc") throw InputError("config: mode must be exact or mc");

        const auto& rg = table(document, "regression");
        check_keys(rg, "[regression]", {"fixed_effects"});
        read(rg, "fixed_effects", c.fixed_effects);
        if (c.fixed_effects.size() > 2) throw InputError("config: at most two fixed effects");
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("config: ") + e.what());
    }
    c.hash = hash_string(c.document.dump());
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
    return parse_run_config(read_config_file(path), path.parent_path(), seed_override);
}

}  // namespace nalpha::pipeline
