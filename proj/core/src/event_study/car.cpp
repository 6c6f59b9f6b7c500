#include "nalpha/event_study/car.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include <spdlog/spdlog.h>

#include "nalpha/common/error.hpp"
#include "nalpha/common/parallel.hpp"
#include "nalpha/econometrics/regression.hpp"
#include "nalpha/portfolio/signal.hpp"

namespace nalpha::event {

using ingest::present;

bool car_path(const ingest::MarketPanel& market, const BenchmarkAssignment& bench, std::size_t firm,
              std::size_t event_day, int T, std::vector<double>& path) {
    if (T < 0) throw DomainError("event horizon must be >= 0");
    const std::size_t last = event_day + static_cast<std::size_t>(T);
    if (last >= market.day_count()) return false;
    if (market.last_day(firm) == ingest::MarketPanel::kNoDay || market.last_day(firm) < last ||
        market.first_day(firm) > event_day) {
        return false;
    }
    path.resize(static_cast<std::size_t>(T) + 1);
    double pf = 1.0, pb = 1.0;
    for (std::size_t d = event_day; d <= last; ++d) {
        const double r = market.ret(firm, d);
        const double b = bench.benchmark_return(firm, d);
        if (present(r)) pf *= 1.0 + r;
        if (present(b)) pb *= 1.0 + b;
        path[d - event_day] = pf - pb;
    }
    return true;
}

std::optional<double> car(const ingest::MarketPanel& market, const BenchmarkAssignment& bench, std::size_t firm,
                          std::size_t event_day, int T) {
    std::vector<double> path;
    if (!car_path(market, bench, firm, event_day, T, path)) return std::nullopt;
    return path.back();
}

BucketPaths bucket_paths(const ingest::MarketPanel& market, const TradingCalendar& calendar,
                         const BenchmarkAssignment& bench, std::span<const Event> events, std::span<const int> bucket,
                         int buckets, int T) {
    if (bucket.size() != events.size()) throw DomainError("event buckets do not match events");
    // events grouped by calendar month of the event day
    std::map<std::size_t, std::vector<std::size_t>> by_month;
    for (std::size_t e = 0; e < events.size(); ++e) {
        if (bucket[e] < 0) continue;
        by_month[calendar.month_index_of_day(events[e].day)].push_back(e);
    }
    std::vector<std::size_t> keys;
    std::vector<std::vector<std::size_t>*> groups;
    for (auto& [k, v] : by_month) {
        keys.push_back(k);
        groups.push_back(&v);
    }
    const auto B = static_cast<std::size_t>(buckets);
    const std::size_t len = static_cast<std::size_t>(T) + 1;
    struct MonthOut {
        std::vector<std::vector<double>> sum;
        std::vector<double> weight;
        std::size_t used = 0, dropped = 0;
    };
    std::vector<MonthOut> outs(keys.size());
    parallel_for(keys.size(), [&](std::size_t gi) {
        MonthOut& o = outs[gi];
        o.sum.assign(B, std::vector<double>(len, 0.0));
        o.weight.assign(B, 0.0);
        const std::size_t k = keys[gi];
        std::vector<double> path;
        for (std::size_t e : *groups[gi]) {
            const double cap = k > 0 ? market.month_end_cap(events[e].firm, k - 1) : std::numeric_limits<double>::quiet_NaN();
            if (!present(cap) || !(cap > 0.0) || !car_path(market, bench, events[e].firm, events[e].day, T, path)) {
                ++o.dropped;
                continue;
            }
            const auto b = static_cast<std::size_t>(bucket[e]);
            for (std::size_t t = 0; t < len; ++t) o.sum[b][t] += cap * path[t];
            o.weight[b] += cap;
            ++o.used;
        }
    });
    BucketPaths out;
    out.months.resize(B);
    out.paths.resize(B);
    for (std::size_t gi = 0; gi < keys.size(); ++gi) {
        out.events_used += outs[gi].used;
        out.events_dropped += outs[gi].dropped;
        const YearMonth m = calendar.months()[keys[gi]];
        for (std::size_t b = 0; b < B; ++b) {
            if (!(outs[gi].weight[b] > 0.0)) continue;
            std::vector<double> p(len);
            for (std::size_t t = 0; t < len; ++t) p[t] = outs[gi].sum[b][t] / outs[gi].weight[b];
            out.months[b].push_back(m);
            out.paths[b].push_back(std::move(p));
        }
    }
    return out;
}

EventCurve summarize_curve(const std::string& label, const std::vector<std::vector<double>>& monthly, int T, int lags) {
    EventCurve c;
    c.label = label;
    c.horizon = T;
    c.months = monthly.size();
    const std::size_t len = static_cast<std::size_t>(T) + 1;
    c.car.assign(len, std::numeric_limits<double>::quiet_NaN());
    c.t.assign(len, std::numeric_limits<double>::quiet_NaN());
    if (monthly.empty()) return c;
    std::vector<double> col(monthly.size());
    for (std::size_t t = 0; t < len; ++t) {
        double s = 0.0;
        for (std::size_t m = 0; m < monthly.size(); ++m) {
            col[m] = monthly[m][t];
            s += col[m];
        }
        c.car[t] = s / static_cast<double>(monthly.size());
        if (monthly.size() >= 2) c.t[t] = econ::mean_test(col, lags).t;
    }
    return c;
}

std::vector<std::vector<double>> paired_difference(const std::vector<YearMonth>& ma,
                                                    const std::vector<std::vector<double>>& a,
                                                    const std::vector<YearMonth>& mb,
                                                    const std::vector<std::vector<double>>& b,
                                                    std::vector<YearMonth>* months) {
    std::vector<std::vector<double>> out;
    std::size_t i = 0, j = 0;
    while (i < ma.size() && j < mb.size()) {
        if (ma[i] < mb[j]) {
            ++i;
        } else if (mb[j] < ma[i]) {
            ++j;
        } else {
            std::vector<double> d(a[i].size());
            for (std::size_t t = 0; t < d.size(); ++t) d[t] = a[i][t] - b[j][t];
            out.push_back(std::move(d));
            if (months) months->push_back(ma[i]);
            ++i;
            ++j;
        }
    }
    return out;
}

std::vector<int> event_deciles(const TradingCalendar& calendar, std::span<const Event> events,
                               std::size_t min_day_reports, std::size_t* thin) {
    std::vector<int> dec(events.size(), -1);
    std::map<std::size_t, std::vector<std::size_t>> by_day, by_month;
    for (std::size_t e = 0; e < events.size(); ++e) {
        by_day[events[e].day].push_back(e);
        by_month[calendar.month_index_of_day(events[e].day)].push_back(e);
    }
    auto assign = [&](const std::vector<std::size_t>& group, std::vector<int>& out) {
        std::vector<double> keys(group.size());
        for (std::size_t i = 0; i < group.size(); ++i) keys[i] = events[group[i]].value;
        const auto bins = portfolio::rank_bins(keys, portfolio::kDeciles);
        for (std::size_t i = 0; i < group.size(); ++i) out[group[i]] = static_cast<int>(bins[i]) - 1;
    };
    std::vector<int> monthly(events.size(), -1);
    for (const auto& [k, group] : by_month) assign(group, monthly);
    std::size_t thin_count = 0;
    for (const auto& [d, group] : by_day) {
        if (group.size() >= min_day_reports) {
            assign(group, dec);
        } else {
            for (std::size_t e : group) dec[e] = monthly[e];
            thin_count += group.size();
        }
    }
    if (thin) *thin = thin_count;
    return dec;
}

EventStudyResult event_decile_curves(const ingest::MarketPanel& market, const TradingCalendar& calendar,
                                     const BenchmarkAssignment& bench, std::span<const Event> events,
                                     const EventStudyOptions& options) {
    if (events.empty()) throw DomainError("event study: no events");
    std::size_t lo = events[0].day, hi = events[0].day;
    for (const auto& e : events) {
        lo = std::min(lo, e.day);
        hi = std::max(hi, e.day);
    }
    const int span = calendar.months()[calendar.month_index_of_day(hi)] -
                     calendar.months()[calendar.month_index_of_day(lo)] + 1;
    if (span < options.min_span_months) {
        throw DomainError("event study: forecasts span " + std::to_string(span) + " months (minimum " +
                          std::to_string(options.min_span_months) + ")");
    }
    EventStudyResult out;
    const auto dec = event_deciles(calendar, events, options.min_day_reports, &out.thin_day_events);
    if (out.thin_day_events > 0) {
        spdlog::info("event study: {} events on thin days sorted on monthly breakpoints", out.thin_day_events);
    }
    const auto bp = bucket_paths(market, calendar, bench, events, dec, static_cast<int>(portfolio::kDeciles),
                                 options.horizon);
    out.events_used = bp.events_used;
    out.events_dropped = bp.events_dropped;
    for (std::size_t d = 0; d < portfolio::kDeciles; ++d) {
        out.curves.push_back(summarize_curve("D" + std::to_string(d + 1), bp.paths[d], options.horizon, options.lags));
    }
    const auto diff = paired_difference(bp.months[9], bp.paths[9], bp.months[0], bp.paths[0]);
    EventCurve hl = summarize_curve("H-L", diff, options.horizon, options.lags);
    for (std::size_t t = 0; t < hl.car.size(); ++t) hl.car[t] = out.curves[9].car[t] - out.curves[0].car[t];
    out.curves.push_back(std::move(hl));
    return out;
}

}  // namespace nalpha::event
