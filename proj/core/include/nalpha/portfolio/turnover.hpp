#pragma once

#include <span>
#include <vector>

#include "nalpha/portfolio/backtest.hpp"

namespace nalpha::portfolio {

/// Passive drift of holdings over a month: w * (1 + R) / (1 + w'R).
/// Throws DomainError when the portfolio value is wiped out.
std::vector<Holding> drift_weights(const std::vector<Holding>& weights, std::span<const double> returns);

/// L1 distance between target and drifted holdings, both sorted by firm.
double trade_size(const std::vector<Holding>& target, const std::vector<Holding>& drifted);

/// Per-month turnover of a leg. The first month, and any month that does
/// not directly follow the previous one, trades from cash (sum |w|).
struct TurnoverSeries {
    std::vector<YearMonth> months;
    std::vector<double> turnover;
    std::vector<bool> from_cash;
    /// Mean over months that rebalance an existing portfolio.
    double average = 0.0;
};

TurnoverSeries turnover(const StrategySeries& leg);

struct LongShortTurnover {
    TurnoverSeries long_leg;
    TurnoverSeries short_leg;
    /// (long + short) / 2 averaged over months: the reported L-S figure.
    double combined_mean = 0.0;
    /// long + short averaged over months: the base charged by net_returns.
    double combined_sum = 0.0;
    /// long + short per month, aligned with the legs.
    std::vector<double> traded;
};

LongShortTurnover long_short_turnover(const StrategySeries& long_leg, const StrategySeries& short_leg);

/// (1 + rf + R)(1 - C * turnover) - (1 + rf) per month. `rf` may be empty
/// (treated as zero).
StrategySeries net_returns(const StrategySeries& gross, std::span<const double> traded, double cost,
                           std::span<const double> rf = {});

}  // namespace nalpha::portfolio
