#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nalpha/portfolio/signal.hpp"

namespace nalpha::portfolio {

/// Monthly return series of a portfolio leg or spread. `weights[t]` are the
/// holdings set at the start of months[t], sorted by firm index (negative for
/// the short side of a spread).
struct StrategySeries {
    std::string label;
    std::vector<YearMonth> months;
    std::vector<double> returns;
    std::vector<std::vector<Holding>> weights;
    /// Return of each holding during its month (aligned with weights).
    std::vector<std::vector<double>> held_returns;

    [[nodiscard]] std::size_t size() const { return returns.size(); }
};

struct BacktestOptions {
    int lb = 12;
    std::size_t min_firms = 10;
    Weighting weighting = Weighting::Value;
    /// Portfolio months to evaluate; default is from the month after the
    /// first observation through the last calendar month.
    std::optional<YearMonth> start;
    std::optional<YearMonth> end;
};

struct BacktestResult {
    std::array<StrategySeries, kDeciles> deciles;
    StrategySeries long_short;  ///< decile 10 minus decile 1
    std::vector<YearMonth> skipped_months;
    std::size_t missing_returns = 0;  ///< held positions without a monthly return (counted as 0)
};

/// Precomputed month-by-month structure of a backtest over a fixed set of
/// observations: which observations feed which firm's trailing mean, lagged
/// caps and realized returns. Evaluating different observation values (for
/// instance coalition forecasts) only redoes the averaging, sorting and
/// weighting. Immutable once built; run() may be called concurrently.
class BacktestPlan {
public:
    BacktestPlan(const ingest::MarketPanel& market, const TradingCalendar& calendar, std::span<const SignalObs> obs,
                 const BacktestOptions& options);

    /// Months with enough firms to sort.
    [[nodiscard]] const std::vector<YearMonth>& months() const { return formed_; }
    [[nodiscard]] const std::vector<YearMonth>& skipped_months() const { return skipped_; }
    [[nodiscard]] std::size_t observation_count() const { return obs_count_; }

    /// Full result for the given observation values (aligned with the
    /// observations passed at construction).
    [[nodiscard]] BacktestResult run(std::span<const double> values) const;
    /// Same H-L returns as run(values).long_short, without storing holdings.
    [[nodiscard]] std::vector<double> long_short(std::span<const double> values) const;

private:
    struct Entry {
        std::size_t firm;
        double cap;
        double ret;  // 0 when missing
        bool missing;
        std::uint32_t begin, end;  // range in obs_index_
    };
    struct Month {
        YearMonth month;
        std::vector<Entry> entries;
        std::size_t missing = 0;
    };
    void month_result(const Month& m, std::span<const double> values, std::vector<std::size_t>& bins,
                      std::array<double, kDeciles>& totals, std::array<double, kDeciles>& rets) const;

    Weighting weighting_;
    std::size_t obs_count_ = 0;
    std::vector<Month> months_;
    std::vector<std::uint32_t> obs_index_;
    std::vector<YearMonth> formed_, skipped_;
};

/// Convenience wrapper: plan + run with the observations' own values.
BacktestResult strategy_returns(const ingest::MarketPanel& market, const TradingCalendar& calendar,
                                std::span<const SignalObs> obs, const BacktestOptions& options);

}  // namespace nalpha::portfolio
