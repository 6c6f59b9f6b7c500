#include "nalpha/portfolio/double_sort.hpp"

#include <algorithm>
#include <map>

#include "nalpha/common/error.hpp"
#include "nalpha/econometrics/regression.hpp"
#include "nalpha/portfolio/signal.hpp"

namespace nalpha::portfolio {

using ingest::present;

DoubleSortResult conditional_double_sort(const ingest::MarketPanel& market, const TradingCalendar& calendar,
                                         const event::BenchmarkAssignment& bench, std::span<const event::Event> events,
                                         ingest::Characteristic characteristic, const DoubleSortOptions& options) {
    DoubleSortResult out;
    out.characteristic = characteristic;
    std::map<std::size_t, std::vector<std::size_t>> by_month;
    for (std::size_t e = 0; e < events.size(); ++e) {
        const std::size_t k = calendar.month_index_of_day(events[e].day);
        if (present(market.characteristic(events[e].firm, k, characteristic))) by_month[k].push_back(e);
    }
    // bucket: 0 AH, 1 AL, 2 BH, 3 BL
    std::vector<int> bucket(events.size(), -1);
    std::vector<std::size_t> months_used;
    for (const auto& [k, group] : by_month) {
        std::vector<std::size_t> firms;
        for (std::size_t e : group) firms.push_back(events[e].firm);
        std::sort(firms.begin(), firms.end());
        firms.erase(std::unique(firms.begin(), firms.end()), firms.end());
        std::vector<double> vals;
        for (std::size_t f : firms) vals.push_back(market.characteristic(f, k, characteristic));
        std::sort(vals.begin(), vals.end());
        const std::size_t n = vals.size();
        const double median = n % 2 == 1 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
        std::vector<std::size_t> above, below;
        for (std::size_t e : group) {
            (market.characteristic(events[e].firm, k, characteristic) > median ? above : below).push_back(e);
        }
        if (above.size() < options.min_group || below.size() < options.min_group) {
            out.skipped_months.push_back(calendar.months()[k]);
            continue;
        }
        months_used.push_back(k);
        auto assign = [&](const std::vector<std::size_t>& g, int high, int low) {
            std::vector<double> keys;
            for (std::size_t e : g) keys.push_back(events[e].value);
            const auto bins = rank_bins(keys, kDeciles);
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (bins[i] == kDeciles) bucket[g[i]] = high;
                else if (bins[i] == 1) bucket[g[i]] = low;
            }
        };
        assign(above, 0, 1);
        assign(below, 2, 3);
    }
    if (months_used.empty()) throw DomainError("double sort: no month has both groups populated");
    const auto bp = event::bucket_paths(market, calendar, bench, events, bucket, 4, options.horizon);
    static const char* names[] = {"Above-High", "Above-Low", "Below-High", "Below-Low"};
    for (int b = 0; b < 4; ++b) {
        out.curves.push_back(event::summarize_curve(names[b], bp.paths[static_cast<std::size_t>(b)], options.horizon,
                                                    options.lags));
    }
    std::vector<YearMonth> ma, mb, md;
    const auto above = event::paired_difference(bp.months[0], bp.paths[0], bp.months[1], bp.paths[1], &ma);
    const auto below = event::paired_difference(bp.months[2], bp.paths[2], bp.months[3], bp.paths[3], &mb);
    const auto diff = event::paired_difference(ma, above, mb, below, &md);
    auto dc = event::summarize_curve("Diff", diff, options.horizon, options.lags);
    out.months = diff.size();
    if (!diff.empty()) {
        out.spread_difference = dc.car.back();
        out.spread_difference_t = dc.t.back();
    }
    out.curves.push_back(std::move(dc));
    return out;
}

}  // namespace nalpha::portfolio
