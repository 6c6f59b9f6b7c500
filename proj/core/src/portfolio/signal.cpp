#include "nalpha/portfolio/signal.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "nalpha/common/error.hpp"

namespace nalpha::portfolio {

SignalSnapshot build_signal(std::span<const SignalObs> obs, YearMonth month, int lb, const ingest::MarketPanel& market,
                            const TradingCalendar& calendar) {
    if (lb < 1) throw DomainError("lookback must be at least one month");
    SignalSnapshot snap;
    snap.month = month;
    const YearMonth prev = month - 1;
    if (calendar.empty() || prev < calendar.first_month() || prev > calendar.last_month()) return snap;
    const auto k = static_cast<std::size_t>(prev - calendar.first_month());
    std::map<std::size_t, std::pair<double, std::size_t>> acc;
    for (const auto& o : obs) {
        if (o.month < month - lb || o.month > prev) continue;
        auto& a = acc[o.firm];
        a.first += o.value;
        ++a.second;
    }
    for (const auto& [firm, a] : acc) {
        const double cap = market.month_end_cap(firm, k);
        if (!ingest::present(cap) || !(cap > 0.0)) continue;
        snap.firms.push_back({firm, a.first / static_cast<double>(a.second), a.second, cap});
    }
    return snap;
}

std::vector<std::size_t> rank_bins(std::span<const double> keys, std::size_t bins) {
    const std::size_t n = keys.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
    std::vector<std::size_t> bin(n);
    for (std::size_t r = 0; r < n; ++r) bin[order[r]] = (bins * (r + 1) + n - 1) / n;
    return bin;
}

DecileAssignment form_deciles(const SignalSnapshot& snapshot, std::size_t min_firms, Weighting weighting) {
    const std::size_t n = snapshot.firms.size();
    if (n == 0 || n < min_firms) {
        throw DomainError("decile sort for " + snapshot.month.str() + " has " + std::to_string(n) +
                          " firms (minimum " + std::to_string(min_firms) + ")");
    }
    std::vector<double> keys(n);
    for (std::size_t i = 0; i < n; ++i) keys[i] = snapshot.firms[i].signal;
    const auto bin = rank_bins(keys, kDeciles);  // firms are in firm-index order, so ties go to the lower index
    DecileAssignment out;
    std::array<double, kDeciles> total{};
    for (std::size_t i = 0; i < n; ++i) {
        const auto d = bin[i] - 1;
        const double w = weighting == Weighting::Value ? snapshot.firms[i].lagged_cap : 1.0;
        out.deciles[d].push_back({snapshot.firms[i].firm, w});
        total[d] += w;
    }
    for (std::size_t d = 0; d < kDeciles; ++d) {
        for (auto& h : out.deciles[d]) h.weight /= total[d];
    }
    return out;
}

}  // namespace nalpha::portfolio
