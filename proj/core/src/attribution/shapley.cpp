#include "nalpha/attribution/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "nalpha/common/error.hpp"
#include "nalpha/common/parallel.hpp"
#include "nalpha/common/random.hpp"
#include "nalpha/portfolio/performance.hpp"

namespace nalpha::attribution {

namespace {

constexpr std::size_t kMaxExactPlayers = 24;
constexpr std::size_t kMaxPlayers = 63;

void fill_shares(ShapleyReport& r) {
    const double sum = r.phi_sum();
    const double gain = r.v_full - r.v_empty;
    for (auto& v : r.values) {
        v.share = sum != 0.0 ? v.phi / sum : std::nan("");
        v.share_of_gain = gain != 0.0 ? v.phi / gain : std::nan("");
    }
}

double mean_of(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double sd_of(std::span<const double> x, double mean) {
    if (x.size() < 2) return 0.0;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

}  // namespace

Functional parse_functional(std::string_view text) {
    if (text == "sr" || text == "SR") return Functional::Sharpe;
    if (text == "ret" || text == "Ret") return Functional::MeanReturn;
    throw InputError("unknown functional '" + std::string(text) + "' (expected sr or ret)");
}

std::string_view functional_name(Functional f) { return f == Functional::Sharpe ? "sr" : "ret"; }

double functional_value(std::span<const double> ls, Functional f) {
    if (ls.size() < 2) throw DomainError("coalition backtest produced fewer than two months");
    const double m = mean_of(ls);
    if (f == Functional::MeanReturn) return 100.0 * m;
    const double sd = sd_of(ls, m);
    // rounding leaves a constant series with a sd of order 1e-18
    return sd > 1e-15 ? portfolio::annualized_sharpe(m, sd) : 0.0;
}

CoalitionEvaluator::CoalitionEvaluator(const ingest::Dataset& ds, const forecast::ForecastRun& run,
                                       Partition partition, const portfolio::BacktestOptions& options)
    : partition_(std::move(partition)),
      groups_(ds.embeddings.group_count()),
      plan_(ds.market, ds.calendar, forecast::signal_observations(ds, run.forecasts), options) {
    if (partition_.group_player.size() != groups_) throw DomainError("partition does not match the embedding groups");
    if (partition_.size() == 0 || partition_.size() > kMaxPlayers) {
        throw DomainError("partition must have between 1 and 63 players");
    }
    const std::size_t n = run.forecasts.size();
    intercept_.resize(n);
    weight_.resize(n * groups_);
    projection_.resize(n * groups_);
    parallel_for(n, [&](std::size_t i) {
        const std::size_t row = run.forecasts[i].report;
        const std::size_t mi = run.model_of_report.at(row);
        if (mi == ingest::kNoIndex) throw DomainError("forecast without a fitted model");
        const auto& model = run.models[mi].model;
        intercept_[i] = model.intercept;
        for (std::size_t g = 0; g < groups_; ++g) {
            const auto b = ds.embeddings.block(row, g);
            double p = 0.0;
            for (std::size_t j = 0; j < b.size(); ++j) p += model.beta(static_cast<Eigen::Index>(j)) * static_cast<double>(b[j]);
            weight_[i * groups_ + g] = ds.embeddings.weight(row, g);
            projection_[i * groups_ + g] = p;
        }
    });
}

std::vector<double> CoalitionEvaluator::forecasts(Coalition S) const {
    std::vector<double> out(intercept_.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double acc = intercept_[i];
        for (std::size_t g = 0; g < groups_; ++g) {
            if (partition_.includes(g, S)) acc += weight_[i * groups_ + g] * projection_[i * groups_ + g];
        }
        out[i] = acc;
    }
    return out;
}

std::vector<double> CoalitionEvaluator::long_short_uncached(Coalition S) const {
    evaluations_.fetch_add(1);
    return plan_.long_short(forecasts(S));
}

std::shared_ptr<const std::vector<double>> CoalitionEvaluator::long_short(Coalition S) const {
    {
        std::lock_guard lock(mutex_);
        auto it = cache_.find(S);
        if (it != cache_.end()) return it->second;
    }
    auto series = std::make_shared<const std::vector<double>>(long_short_uncached(S));
    std::lock_guard lock(mutex_);
    return cache_.emplace(S, std::move(series)).first->second;
}

double CoalitionEvaluator::value(Coalition S, Functional f) const { return functional_value(*long_short(S), f); }

std::size_t CoalitionEvaluator::cache_size() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
}

double ShapleyReport::phi_sum() const {
    double s = 0.0;
    for (const auto& v : values) s += v.phi;
    return s;
}

double ShapleyReport::efficiency_gap() const { return std::abs(phi_sum() - (v_full - v_empty)); }

std::vector<double> shapley_from_table(std::size_t P, std::span<const double> table) {
    if (P == 0 || P > kMaxExactPlayers) throw DomainError("exact Shapley needs 1 to 24 players");
    const Coalition full = (Coalition{1} << P) - 1;
    if (table.size() != full + 1) throw DomainError("value table must have 2^P entries");
    // weight(s) = s! (P-s-1)! / P! = 1 / (P * C(P-1, s))
    std::vector<double> weight(P);
    double c = 1.0;
    for (std::size_t s = 0; s < P; ++s) {
        weight[s] = 1.0 / (static_cast<double>(P) * c);
        c = c * static_cast<double>(P - 1 - s) / static_cast<double>(s + 1);
    }
    std::vector<double> phi(P, 0.0);
    for (std::size_t p = 0; p < P; ++p) {
        const Coalition bit = Coalition{1} << p;
        double acc = 0.0;
        for (Coalition S = 0; S <= full; ++S) {
            if (S & bit) continue;
            acc += weight[static_cast<std::size_t>(std::popcount(S))] * (table[S | bit] - table[S]);
        }
        phi[p] = acc;
    }
    return phi;
}

ShapleyReport shapley_exact(const std::vector<std::string>& players, const ValueFunction& value) {
    const std::size_t P = players.size();
    if (P == 0 || P > kMaxExactPlayers) throw DomainError("exact Shapley needs 1 to 24 players");
    const std::size_t n = std::size_t{1} << P;
    std::vector<double> table(n);
    parallel_for(n, [&](std::size_t S) { table[S] = value(static_cast<Coalition>(S)); });
    const auto phi = shapley_from_table(P, table);
    ShapleyReport r;
    r.mode = "exact";
    r.v_full = table[n - 1];
    r.v_empty = table[0];
    r.evaluations = n;
    for (std::size_t p = 0; p < P; ++p) r.values.push_back({players[p], phi[p], 0.0, 0.0, 0.0});
    fill_shares(r);
    return r;
}

ShapleyReport shapley_mc(const std::vector<std::string>& players, const ValueFunction& value, std::size_t samples,
                         std::uint64_t seed) {
    const std::size_t P = players.size();
    if (P == 0 || P > kMaxPlayers) throw DomainError("Monte-Carlo Shapley needs 1 to 63 players");
    if (samples < 100) throw DomainError("Monte-Carlo Shapley needs at least 100 samples");

    Rng rng(seed);
    std::vector<std::vector<std::uint8_t>> perms(samples, std::vector<std::uint8_t>(P));
    std::vector<Coalition> masks;
    masks.reserve(samples * (P + 1));
    for (auto& perm : perms) {
        std::iota(perm.begin(), perm.end(), std::uint8_t{0});
        for (std::size_t i = P - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
        Coalition S = 0;
        masks.push_back(S);
        for (auto p : perm) {
            S |= Coalition{1} << p;
            masks.push_back(S);
        }
    }
    std::sort(masks.begin(), masks.end());
    masks.erase(std::unique(masks.begin(), masks.end()), masks.end());
    std::vector<double> values(masks.size());
    parallel_for(masks.size(), [&](std::size_t i) { values[i] = value(masks[i]); });
    auto lookup = [&](Coalition S) {
        return values[static_cast<std::size_t>(std::lower_bound(masks.begin(), masks.end(), S) - masks.begin())];
    };

    ShapleyReport r;
    r.mode = "mc";
    r.samples = samples;
    r.seed = seed;
    r.evaluations = masks.size();
    r.v_empty = lookup(0);
    r.v_full = lookup(P >= 64 ? ~Coalition{0} : (Coalition{1} << P) - 1);
    r.draws.assign(samples, std::vector<double>(P, 0.0));
    for (std::size_t s = 0; s < samples; ++s) {
        Coalition S = 0;
        double prev = r.v_empty;
        for (auto p : perms[s]) {
            S |= Coalition{1} << p;
            const double v = lookup(S);
            r.draws[s][p] = v - prev;
            prev = v;
        }
    }
    std::vector<double> column(samples);
    for (std::size_t p = 0; p < P; ++p) {
        for (std::size_t s = 0; s < samples; ++s) column[s] = r.draws[s][p];
        const double m = mean_of(column);
        r.values.push_back({players[p], m, sd_of(column, m) / std::sqrt(static_cast<double>(samples)), 0.0, 0.0});
    }
    fill_shares(r);
    return r;
}

namespace {
ShapleyReport label(ShapleyReport r, const CoalitionEvaluator& ev, Functional f) {
    r.partition = ev.partition().name;
    r.functional = std::string(functional_name(f));
    return r;
}
}  // namespace

ShapleyReport shapley_exact(const CoalitionEvaluator& ev, Functional f) {
    return label(shapley_exact(ev.partition().players, [&](Coalition S) { return ev.value(S, f); }), ev, f);
}

ShapleyReport shapley_mc(const CoalitionEvaluator& ev, Functional f, std::size_t samples, std::uint64_t seed) {
    return label(shapley_mc(ev.partition().players, [&](Coalition S) { return ev.value(S, f); }, samples, seed), ev,
                 f);
}

MonthlyShapley shapley_monthly(const CoalitionEvaluator& ev) {
    const std::size_t P = ev.players();
    if (P == 0 || P > kMaxExactPlayers) throw DomainError("exact Shapley needs 1 to 24 players");
    const std::size_t n = std::size_t{1} << P;
    std::vector<std::shared_ptr<const std::vector<double>>> series(n);
    parallel_for(n, [&](std::size_t S) { series[S] = ev.long_short(static_cast<Coalition>(S)); });
    MonthlyShapley out;
    out.months = ev.months();
    out.players = ev.partition().players;
    std::vector<double> table(n);
    for (std::size_t t = 0; t < out.months.size(); ++t) {
        for (std::size_t S = 0; S < n; ++S) table[S] = 100.0 * (*series[S])[t];
        out.phi.push_back(shapley_from_table(P, table));
    }
    return out;
}

ShapleyReport aggregate_groups(const ShapleyReport& report, const std::map<std::string, std::string>& mapping) {
    ShapleyReport out;
    out.partition = report.partition + "+aggregated";
    out.functional = report.functional;
    out.mode = report.mode;
    out.samples = report.samples;
    out.seed = report.seed;
    out.v_full = report.v_full;
    out.v_empty = report.v_empty;
    out.evaluations = report.evaluations;
    std::vector<std::size_t> category(report.values.size());
    for (std::size_t p = 0; p < report.values.size(); ++p) {
        auto it = mapping.find(report.values[p].group);
        if (it == mapping.end()) throw InputError("group '" + report.values[p].group + "' has no category");
        auto pos = std::find_if(out.values.begin(), out.values.end(),
                                [&](const ShapleyValue& v) { return v.group == it->second; });
        if (pos == out.values.end()) {
            out.values.push_back({it->second, 0.0, 0.0, 0.0, 0.0});
            pos = out.values.end() - 1;
        }
        pos->phi += report.values[p].phi;
        category[p] = static_cast<std::size_t>(pos - out.values.begin());
    }
    if (!report.draws.empty()) {
        out.draws.assign(report.draws.size(), std::vector<double>(out.values.size(), 0.0));
        for (std::size_t s = 0; s < report.draws.size(); ++s) {
            for (std::size_t p = 0; p < category.size(); ++p) out.draws[s][category[p]] += report.draws[s][p];
        }
        std::vector<double> column(out.draws.size());
        for (std::size_t c = 0; c < out.values.size(); ++c) {
            for (std::size_t s = 0; s < out.draws.size(); ++s) column[s] = out.draws[s][c];
            out.values[c].se = sd_of(column, mean_of(column)) / std::sqrt(static_cast<double>(column.size()));
        }
    }
    fill_shares(out);
    return out;
}

nlohmann::json to_json(const ShapleyReport& r) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& v : r.values) {
        nlohmann::json g = {{"group", v.group}, {"phi", v.phi}, {"share", v.share}, {"share_of_gain", v.share_of_gain}};
        if (r.mode == "mc") g["se"] = v.se;
        groups.push_back(std::move(g));
    }
    nlohmann::json j = {{"partition", r.partition},
                        {"functional", r.functional},
                        {"mode", r.mode},
                        {"v_full", r.v_full},
                        {"v_empty", r.v_empty},
                        {"phi_sum", r.phi_sum()},
                        {"efficiency_gap", r.efficiency_gap()},
                        {"evaluations", r.evaluations},
                        {"groups", std::move(groups)}};
    if (r.mode == "mc") {
        j["samples"] = r.samples;
        j["seed"] = r.seed;
    }
    return j;
}

}  // namespace nalpha::attribution
