#include "nalpha/portfolio/backtest.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

#include <spdlog/spdlog.h>

#include "nalpha/common/error.hpp"

namespace nalpha::portfolio {

BacktestPlan::BacktestPlan(const ingest::MarketPanel& market, const TradingCalendar& calendar,
                           std::span<const SignalObs> obs, const BacktestOptions& options)
    : weighting_(options.weighting), obs_count_(obs.size()) {
    if (options.lb < 1) throw DomainError("lookback must be at least one month");
    if (calendar.empty() || obs.empty()) return;
    YearMonth first_obs = obs[0].month;
    for (const auto& o : obs) first_obs = std::min(first_obs, o.month);
    YearMonth start = options.start.value_or(first_obs + 1);
    const YearMonth end = options.end.value_or(calendar.last_month());
    start = std::max(start, calendar.first_month() + 1);
    if (end > calendar.last_month()) throw DomainError("evaluation window ends after the data (" + end.str() + ")");

    // observations grouped by (firm, month) for the trailing windows
    std::vector<std::uint32_t> order(obs.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return std::tie(obs[a].firm, obs[a].month) < std::tie(obs[b].firm, obs[b].month);
    });

    for (YearMonth m = start; m <= end; ++m) {
        Month month{m, {}, 0};
        const auto k = static_cast<std::size_t>(m - calendar.first_month());
        const YearMonth lo = m - options.lb, hi = m - 1;
        std::size_t i = 0;
        while (i < order.size()) {
            const std::size_t firm = obs[order[i]].firm;
            std::size_t j = i;
            while (j < order.size() && obs[order[j]].firm == firm) ++j;
            auto b = std::partition_point(order.begin() + static_cast<std::ptrdiff_t>(i),
                                          order.begin() + static_cast<std::ptrdiff_t>(j),
                                          [&](std::uint32_t x) { return obs[x].month < lo; });
            auto e = std::partition_point(b, order.begin() + static_cast<std::ptrdiff_t>(j),
                                          [&](std::uint32_t x) { return obs[x].month <= hi; });
            if (b != e) {
                const double cap = market.month_end_cap(firm, k - 1);
                if (ingest::present(cap) && cap > 0.0) {
                    Entry entry{firm, cap, market.monthly_ret(firm, k), false,
                                static_cast<std::uint32_t>(obs_index_.size()), 0};
                    // window members in observation order, so means sum in input order
                    std::vector<std::uint32_t> members(b, e);
                    std::sort(members.begin(), members.end());
                    obs_index_.insert(obs_index_.end(), members.begin(), members.end());
                    entry.end = static_cast<std::uint32_t>(obs_index_.size());
                    if (!ingest::present(entry.ret)) {
                        entry.ret = 0.0;
                        entry.missing = true;
                    }
                    month.entries.push_back(entry);
                }
            }
            i = j;
        }
        if (month.entries.size() < options.min_firms || month.entries.empty()) {
            skipped_.push_back(m);
            continue;
        }
        formed_.push_back(m);
        months_.push_back(std::move(month));
    }
    if (!skipped_.empty()) {
        spdlog::debug("backtest: {} months skipped for breadth below {}", skipped_.size(), options.min_firms);
    }
}

void BacktestPlan::month_result(const Month& m, std::span<const double> values, std::vector<std::size_t>& bins,
                                std::array<double, kDeciles>& totals, std::array<double, kDeciles>& rets) const {
    const std::size_t n = m.entries.size();
    std::vector<double> signal(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Entry& e = m.entries[i];
        double s = 0.0;
        for (std::uint32_t j = e.begin; j < e.end; ++j) s += values[obs_index_[j]];
        signal[i] = s / static_cast<double>(e.end - e.begin);
    }
    bins = rank_bins(signal, kDeciles);
    totals.fill(0.0);
    rets.fill(0.0);
    for (std::size_t i = 0; i < n; ++i) {
        totals[bins[i] - 1] += weighting_ == Weighting::Value ? m.entries[i].cap : 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t d = bins[i] - 1;
        const double w = (weighting_ == Weighting::Value ? m.entries[i].cap : 1.0) / totals[d];
        rets[d] += w * m.entries[i].ret;
    }
}

BacktestResult BacktestPlan::run(std::span<const double> values) const {
    if (values.size() != obs_count_) throw DomainError("backtest: value count does not match observations");
    BacktestResult out;
    out.skipped_months = skipped_;
    for (std::size_t d = 0; d < kDeciles; ++d) out.deciles[d].label = "D" + std::to_string(d + 1);
    out.long_short.label = "H-L";
    std::vector<std::size_t> bins;
    std::array<double, kDeciles> totals{}, rets{};
    for (const Month& m : months_) {
        month_result(m, values, bins, totals, rets);
        std::array<std::vector<Holding>, kDeciles> hold;
        std::array<std::vector<double>, kDeciles> held;
        for (std::size_t i = 0; i < m.entries.size(); ++i) {
            const std::size_t d = bins[i] - 1;
            const double w = (weighting_ == Weighting::Value ? m.entries[i].cap : 1.0) / totals[d];
            hold[d].push_back({m.entries[i].firm, w});
            held[d].push_back(m.entries[i].ret);
            if (m.entries[i].missing && (d == 0 || d == kDeciles - 1)) ++out.missing_returns;
        }
        for (std::size_t d = 0; d < kDeciles; ++d) {
            auto& s = out.deciles[d];
            s.months.push_back(m.month);
            s.returns.push_back(rets[d]);
            s.weights.push_back(hold[d]);
            s.held_returns.push_back(held[d]);
        }
        auto& ls = out.long_short;
        ls.months.push_back(m.month);
        ls.returns.push_back(rets[kDeciles - 1] - rets[0]);
        std::vector<Holding> w;
        std::vector<double> r;
        std::size_t a = 0, b = 0;
        const auto& L = hold[kDeciles - 1];
        const auto& S = hold[0];
        while (a < L.size() || b < S.size()) {
            if (b >= S.size() || (a < L.size() && L[a].firm < S[b].firm)) {
                w.push_back(L[a]);
                r.push_back(held[kDeciles - 1][a]);
                ++a;
            } else {
                w.push_back({S[b].firm, -S[b].weight});
                r.push_back(held[0][b]);
                ++b;
            }
        }
        ls.weights.push_back(std::move(w));
        ls.held_returns.push_back(std::move(r));
    }
    if (out.missing_returns > 0) {
        spdlog::info("backtest: {} extreme-decile positions had no monthly return and were held at 0",
                     out.missing_returns);
    }
    return out;
}

std::vector<double> BacktestPlan::long_short(std::span<const double> values) const {
    if (values.size() != obs_count_) throw DomainError("backtest: value count does not match observations");
    std::vector<double> out;
    out.reserve(months_.size());
    std::vector<std::size_t> bins;
    std::array<double, kDeciles> totals{}, rets{};
    for (const Month& m : months_) {
        month_result(m, values, bins, totals, rets);
        out.push_back(rets[kDeciles - 1] - rets[0]);
    }
    return out;
}

BacktestResult strategy_returns(const ingest::MarketPanel& market, const TradingCalendar& calendar,
                                std::span<const SignalObs> obs, const BacktestOptions& options) {
    const BacktestPlan plan(market, calendar, obs, options);
    std::vector<double> values(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) values[i] = obs[i].value;
    return plan.run(values);
}

}  // namespace nalpha::portfolio
