#include "nalpha/synth/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "nalpha/common/error.hpp"
#include "nalpha/common/hash.hpp"
#include "nalpha/common/random.hpp"
#include "nalpha/ingest/dataset.hpp"
#include "nalpha/portfolio/signal.hpp"

namespace nalpha::synth {

using ingest::EarningsEvent;
using ingest::MarketPanel;
using ingest::NumericRecord;
using ingest::ReportRecord;

namespace {

// Independent stream per component so changing one part leaves the others intact.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string numbered(char prefix, std::size_t i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, i);
    return buf;
}

TradingCalendar weekday_calendar(Date start, int months) {
    const YearMonth last = start.month() + (months - 1);
    std::vector<Date> days;
    for (Date d = start; d.month() <= last; d = d + 1) {
        if (d.iso_weekday() <= 5) days.push_back(d);
    }
    return TradingCalendar(std::move(days));
}

// Per-decile mean of z, top minus bottom, with the engine's rank bins.
double z_decile_gap(const std::vector<double>& z) {
    const auto bins = portfolio::rank_bins(z, 10);
    double hi = 0.0, lo = 0.0;
    std::size_t nh = 0, nl = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (bins[i] == 10) { hi += z[i]; ++nh; }
        if (bins[i] == 1) { lo += z[i]; ++nl; }
    }
    return hi / static_cast<double>(nh) - lo / static_cast<double>(nl);
}

std::vector<double> latent_scores(std::size_t n, Rng& rng) {
    std::vector<double> z(n);
    for (auto& v : z) v = rng.normal();
    const double mean = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : z) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    for (auto& v : z) v = (v - mean) / sd;
    return z;
}

}  // namespace

SynthSpec default_spec() {
    SynthSpec s;
    s.groups = {{"Company and Industry Overview", 0.29},
                {"Financial Analysis", 0.37},
                {"Strategic Outlook", 0.15},
                {"Risk and Governance", 0.14},
                {"Additional Content", 0.05}};
    s.signal = {{"Strategic Outlook", 12.0}};
    return s;
}

SynthSpec spec_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InputError("synth spec must be an object");
    static const std::set<std::string> known = {
        "n_firms", "n_months", "burn_in_months", "dim", "groups", "weight_jitter", "signal", "spread_pct",
        "sigma_daily", "market_mean", "market_sd", "rf_daily", "reports_per_firm_month", "analysts_per_firm",
        "start", "seed"};
    for (const auto& [k, v] : j.items()) {
        if (!known.contains(k)) throw InputError("unknown synth spec key '" + k + "'");
    }
    SynthSpec s = default_spec();
    try {
        s.n_firms = j.value("n_firms", s.n_firms);
        s.n_months = j.value("n_months", s.n_months);
        s.burn_in_months = j.value("burn_in_months", s.burn_in_months);
        s.dim = j.value("dim", s.dim);
        s.weight_jitter = j.value("weight_jitter", s.weight_jitter);
        s.spread_pct = j.value("spread_pct", s.spread_pct);
        s.sigma_daily = j.value("sigma_daily", s.sigma_daily);
        s.market_mean = j.value("market_mean", s.market_mean);
        s.market_sd = j.value("market_sd", s.market_sd);
        s.rf_daily = j.value("rf_daily", s.rf_daily);
        s.reports_per_firm_month = j.value("reports_per_firm_month", s.reports_per_firm_month);
        s.analysts_per_firm = j.value("analysts_per_firm", s.analysts_per_firm);
        s.seed = j.value("seed", s.seed);
        if (j.contains("start")) s.start = Date::parse(j.at("start").get<std::string>());
        if (j.contains("groups")) {
            s.groups.clear();
            for (const auto& g : j.at("groups")) s.groups.push_back({g.at("name").get<std::string>(), g.at("share").get<double>()});
        }
        if (j.contains("signal")) {
            s.signal.clear();
            for (const auto& g : j.at("signal")) {
                s.signal.push_back({g.at("group").get<std::string>(), g.value("loading", 12.0)});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("synth spec: ") + e.what());
    }
    return s;
}

nlohmann::json spec_to_json(const SynthSpec& s) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : s.groups) groups.push_back({{"name", g.name}, {"share", g.share}});
    nlohmann::json signal = nlohmann::json::array();
    for (const auto& g : s.signal) signal.push_back({{"group", g.group}, {"loading", g.loading}});
    return {{"n_firms", s.n_firms},
            {"n_months", s.n_months},
            {"burn_in_months", s.burn_in_months},
            {"dim", s.dim},
            {"groups", groups},
            {"weight_jitter", s.weight_jitter},
            {"signal", signal},
            {"spread_pct", s.spread_pct},
            {"sigma_daily", s.sigma_daily},
            {"market_mean", s.market_mean},
            {"market_sd", s.market_sd},
            {"rf_daily", s.rf_daily},
            {"reports_per_firm_month", s.reports_per_firm_month},
            {"analysts_per_firm", s.analysts_per_firm},
            {"start", s.start.iso()},
            {"seed", s.seed}};
}

void check_spec(const SynthSpec& s) {
    if (s.n_firms < 20) throw DomainError("synth spec needs at least 20 firms for decile sorts");
    if (s.n_months < 1 || s.burn_in_months < 1) throw DomainError("synth spec needs positive month counts");
    if (s.dim == 0) throw DomainError("synth spec needs a positive embedding dimension");
    if (s.groups.empty()) throw DomainError("synth spec needs at least one group");
    std::set<std::string> names;
    for (const auto& g : s.groups) {
        if (!(g.share > 0.0)) throw DomainError("group '" + g.name + "' needs a positive share");
        if (!names.insert(g.name).second) throw DomainError("group '" + g.name + "' listed twice");
    }
    for (const auto& sg : s.signal) {
        if (!names.contains(sg.group)) throw DomainError("signal group '" + sg.group + "' is not a spec group");
    }
    if (!(s.sigma_daily > 0.0)) throw DomainError("daily noise must be positive");
    if (s.spread_pct < 0.0) throw DomainError("planted spread must be non-negative");
    if (s.reports_per_firm_month <= 0.0) throw DomainError("report rate must be positive");
    if (s.analysts_per_firm == 0) throw DomainError("need at least one analyst per firm");
}

GroundTruth generate(const SynthSpec& spec, const std::filesystem::path& dir) {
    check_spec(spec);
    std::filesystem::create_directories(dir);

    const TradingCalendar cal = weekday_calendar(spec.start, spec.total_months());
    const std::size_t F = spec.n_firms;
    const std::size_t G = spec.groups.size();
    const std::size_t D = spec.dim;
    const std::size_t K = cal.months().size();

    GroundTruth truth;
    for (std::size_t f = 0; f < F; ++f) truth.firm_ids.push_back(numbered('F', f + 1, 4));

    Rng firm_rng(stream_seed(spec.seed, 0));
    truth.z = latent_scores(F, firm_rng);
    const double gap = z_decile_gap(truth.z);
    truth.planted_spread = spec.spread_pct / 100.0;
    truth.drift_per_z = truth.planted_spread / gap;
    double max_drift = 0.0;
    for (double z : truth.z) max_drift = std::max(max_drift, std::abs(truth.drift_per_z * z / 252.0));
    if (max_drift >= spec.sigma_daily) {
        throw DomainError("planted spread is not achievable: daily drift reaches the noise level");
    }

    std::vector<double> beta(F), shares(F), price(F), eps_base(F);
    std::vector<double> cap0(F);
    for (std::size_t f = 0; f < F; ++f) {
        beta[f] = firm_rng.uniform(0.9, 1.1);
        cap0[f] = std::exp(std::log(1000.0) + 0.5 * firm_rng.normal());
        price[f] = firm_rng.uniform(20.0, 100.0);
        shares[f] = cap0[f] / price[f];
        eps_base[f] = firm_rng.uniform(1.0, 5.0);
    }

    // Daily market.
    MarketPanel market(truth.firm_ids, cal);
    Rng ret_rng(stream_seed(spec.seed, 1));
    for (std::size_t d = 0; d < cal.size(); ++d) {
        const double m = spec.market_mean + spec.market_sd * ret_rng.normal();
        for (std::size_t f = 0; f < F; ++f) {
            const double r = spec.rf_daily + truth.drift_per_z * truth.z[f] / 252.0 + beta[f] * m +
                             spec.sigma_daily * ret_rng.normal();
            price[f] *= 1.0 + r;
            market.ret_ref(f, d) = r;
            market.close_ref(f, d) = price[f];
            market.cap_ref(f, d) = shares[f] * price[f];
        }
    }
    market.finalize(cal);

    // Monthly characteristics: size from the previous month-end cap, the
    // rest persistent draws unrelated to the latent score.
    Rng char_rng(stream_seed(spec.seed, 2));
    constexpr double kPersist = 0.95;
    const double innov = std::sqrt(1.0 - kPersist * kPersist);
    std::vector<std::array<double, 5>> state(F);
    for (auto& s : state) {
        for (auto& v : s) v = char_rng.normal();
    }
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t f = 0; f < F; ++f) {
            const double lag_cap = k == 0 ? cap0[f] : market.month_end_cap(f, k - 1);
            market.set_characteristic(f, k, ingest::Characteristic::LogSize, std::log(lag_cap));
            for (std::size_t c = 0; c < 5; ++c) {
                if (k > 0) state[f][c] = kPersist * state[f][c] + innov * char_rng.normal();
                market.set_characteristic(f, k, static_cast<ingest::Characteristic>(c + 1), state[f][c]);
            }
        }
    }

    // Factors: MKT is the universe's value-weighted excess return.
    Rng factor_rng(stream_seed(spec.seed, 3));
    std::vector<double> rf(K);
    std::vector<std::vector<double>> cols(6, std::vector<double>(K));
    for (std::size_t k = 0; k < K; ++k) {
        const auto [b, e] = cal.month_range(cal.months()[k]);
        rf[k] = std::pow(1.0 + spec.rf_daily, static_cast<double>(e - b)) - 1.0;
        double num = 0.0, den = 0.0;
        for (std::size_t f = 0; f < F; ++f) {
            const double w = k == 0 ? cap0[f] : market.month_end_cap(f, k - 1);
            num += w * market.monthly_ret(f, k);
            den += w;
        }
        cols[0][k] = num / den - rf[k];
        for (std::size_t c = 1; c < 6; ++c) cols[c][k] = 0.03 * factor_rng.normal();
    }
    ingest::FactorPanel factors(cal.months(), rf, {"MKT", "SMB", "HML", "RMW", "CMA", "MOM"}, cols);

    // Reports, analyst histories and embeddings.
    Rng rep_rng(stream_seed(spec.seed, 4));
    struct Draft {
        std::size_t day, firm, analyst;
    };
    std::vector<Draft> drafts;
    for (std::size_t k = 0; k < K; ++k) {
        const auto [b, e] = cal.month_range(cal.months()[k]);
        for (std::size_t f = 0; f < F; ++f) {
            const int n = rep_rng.poisson(spec.reports_per_firm_month);
            for (int i = 0; i < n; ++i) {
                const std::size_t day = b + rep_rng.below(e - b);
                drafts.push_back({day, f, f * spec.analysts_per_firm + rep_rng.below(spec.analysts_per_firm)});
            }
        }
    }
    std::stable_sort(drafts.begin(), drafts.end(), [](const Draft& a, const Draft& b) {
        return std::tie(a.day, a.firm, a.analyst) < std::tie(b.day, b.firm, b.analyst);
    });

    struct AnalystState {
        int rec = 3;
        double eps = 0.0;
        double tp = 0.0;
        bool started = false;
    };
    std::vector<AnalystState> analysts(F * spec.analysts_per_firm);
    std::vector<std::string> group_names;
    std::vector<double> shares_g;
    for (const auto& g : spec.groups) {
        group_names.push_back(g.name);
        shares_g.push_back(g.share);
    }
    std::vector<double> loading(G, 0.0);
    std::vector<std::vector<double>> direction(G);
    Rng emb_rng(stream_seed(spec.seed, 5));
    for (const auto& sg : spec.signal) {
        const std::size_t g = static_cast<std::size_t>(
            std::find(group_names.begin(), group_names.end(), sg.group) - group_names.begin());
        loading[g] = sg.loading;
        direction[g].resize(D);
        double norm = 0.0;
        for (auto& v : direction[g]) {
            v = emb_rng.normal();
            norm += v * v;
        }
        for (auto& v : direction[g]) v /= std::sqrt(norm);
    }

    std::vector<ReportRecord> reports;
    std::vector<NumericRecord> numerics;
    ingest::EmbeddingTable table(D, group_names);
    std::vector<double> w(G);
    std::vector<float> blocks(G * D);
    for (std::size_t i = 0; i < drafts.size(); ++i) {
        const Draft& dr = drafts[i];
        AnalystState& a = analysts[dr.analyst];
        if (!a.started) {
            a.started = true;
            a.rec = 1 + static_cast<int>(rep_rng.below(5));
            a.eps = eps_base[dr.firm] * (1.0 + 0.05 * rep_rng.normal());
            a.tp = market.close(dr.firm, dr.day) * (1.0 + 0.1 * rep_rng.normal());
        } else {
            if (rep_rng.uniform() < 0.3) a.rec = std::clamp(a.rec + (rep_rng.uniform() < 0.5 ? -1 : 1), 1, 5);
            a.eps *= 1.0 + 0.02 * rep_rng.normal();
            a.tp *= 1.0 + 0.05 * rep_rng.normal();
        }
        ReportRecord r;
        r.report_id = numbered('R', i + 1, 7);
        r.firm_id = truth.firm_ids[dr.firm];
        r.analyst_id = numbered('A', dr.analyst + 1, 5);
        r.broker_id = numbered('B', dr.analyst % 20 + 1, 2);
        r.release_date = cal.day(dr.day);
        r.recommendation = a.rec;
        r.eps_forecast = a.eps;
        r.target_price = a.tp;
        r.n_sent = 20 + rep_rng.poisson(30.0);
        r.n_pos = static_cast<int>(rep_rng.below(static_cast<std::uint64_t>(r.n_sent) / 2 + 1));
        r.n_neg = static_cast<int>(rep_rng.below(static_cast<std::uint64_t>(r.n_sent - r.n_pos) / 2 + 1));
        r.industry = numbered('I', dr.firm % 10 + 1, 2);
        r.headline_sent = 1 + rep_rng.poisson(2.0);
        r.headline_pos = static_cast<int>(rep_rng.below(static_cast<std::uint64_t>(*r.headline_sent) + 1));
        r.headline_neg = static_cast<int>(rep_rng.below(static_cast<std::uint64_t>(*r.headline_sent - *r.headline_pos) + 1));
        numerics.push_back({r.analyst_id, r.firm_id, r.release_date, r.recommendation, r.eps_forecast, r.target_price});

        double total = 0.0;
        for (std::size_t g = 0; g < G; ++g) {
            w[g] = shares_g[g] * std::exp(spec.weight_jitter * emb_rng.normal());
            total += w[g];
        }
        for (auto& v : w) v /= total;
        for (std::size_t g = 0; g < G; ++g) {
            for (std::size_t j = 0; j < D; ++j) {
                double v = emb_rng.normal();
                if (loading[g] != 0.0) v += loading[g] * truth.z[dr.firm] * direction[g][j];
                blocks[g * D + j] = static_cast<float>(v);
            }
        }
        table.append(r.report_id, w, blocks);
        reports.push_back(std::move(r));
    }
    truth.reports = reports.size();

    // Quarterly earnings ten trading days into the month after quarter end;
    // every other quarter leaves the consensus to be computed from forecasts.
    Rng earn_rng(stream_seed(spec.seed, 6));
    std::vector<EarningsEvent> earnings;
    for (std::size_t f = 0; f < F; ++f) {
        int quarter = 0;
        for (std::size_t k = 0; k + 1 < K; ++k) {
            if (cal.months()[k].month() % 3 != 0) continue;
            const std::size_t qe = cal.month_range(cal.months()[k]).second;
            const auto [nb, ne] = cal.month_range(cal.months()[k + 1]);
            EarningsEvent ev;
            ev.firm_id = truth.firm_ids[f];
            ev.announce_date = cal.day(std::min(nb + 10, ne - 1));
            ev.actual_eps = eps_base[f] * (1.0 + 0.05 * earn_rng.normal()) / 4.0;
            if (quarter++ % 2 == 0) ev.consensus_eps = eps_base[f] / 4.0;
            ev.price = market.close(f, qe - 1);
            earnings.push_back(std::move(ev));
        }
    }

    // Realized value-weighted z-decile spread over the evaluation months.
    {
        const auto bins = portfolio::rank_bins(truth.z, 10);
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t k = static_cast<std::size_t>(spec.burn_in_months) + 1; k < K; ++k) {
            double hi = 0.0, hw = 0.0, lo = 0.0, lw = 0.0;
            for (std::size_t f = 0; f < F; ++f) {
                const double c = market.month_end_cap(f, k - 1);
                if (bins[f] == 10) { hi += c * market.monthly_ret(f, k); hw += c; }
                if (bins[f] == 1) { lo += c * market.monthly_ret(f, k); lw += c; }
            }
            sum += hi / hw - lo / lw;
            ++n;
        }
        truth.realized_spread = n > 0 ? 12.0 * sum / static_cast<double>(n) : 0.0;
    }

    ingest::write_reports_csv(dir / "reports.csv", reports);
    ingest::write_embeddings(dir / "embeddings.bin", table);
    ingest::write_market_csv(dir / "market.csv", market, cal, true);
    ingest::write_chars_csv(dir / "chars.csv", market, cal);
    ingest::write_factors_csv(dir / "factors.csv", factors);
    ingest::write_calendar_csv(dir / "calendar.csv", cal);
    ingest::write_numerics_csv(dir / "numerics.csv", numerics);
    ingest::write_earnings_csv(dir / "earnings.csv", earnings);

    nlohmann::json files = nlohmann::json::object();
    for (const char* name : {"reports.csv", "embeddings.bin", "market.csv", "chars.csv", "factors.csv", "calendar.csv",
                             "numerics.csv", "earnings.csv"}) {
        files[name] = hash_file(dir / name);
    }
    nlohmann::json z = nlohmann::json::object();
    for (std::size_t f = 0; f < F; ++f) z[truth.firm_ids[f]] = truth.z[f];
    nlohmann::json signal_groups = nlohmann::json::array();
    for (const auto& sg : spec.signal) signal_groups.push_back(sg.group);
    nlohmann::json manifest = {
        {"spec", spec_to_json(spec)},
        {"calendar", {{"first_day", cal.day(0).iso()}, {"last_day", cal.day(cal.size() - 1).iso()}, {"months", K}}},
        {"evaluation", {{"first_month", cal.months()[static_cast<std::size_t>(spec.burn_in_months) + 1].str()},
                        {"last_month", cal.last_month().str()}}},
        {"truth",
         {{"signal_groups", signal_groups},
          {"drift_per_z", truth.drift_per_z},
          {"planted_spread", truth.planted_spread},
          {"realized_spread", truth.realized_spread},
          {"z_decile_gap", gap},
          {"z", z}}},
        {"reports", truth.reports},
        {"files", files}};
    std::ofstream out(dir / "manifest.json");
    if (!out) throw InputError("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
    return truth;
}

}  // namespace nalpha::synth
