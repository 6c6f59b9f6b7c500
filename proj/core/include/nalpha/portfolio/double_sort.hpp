#pragma once

#include <span>
#include <vector>

#include "nalpha/event_study/car.hpp"

namespace nalpha::portfolio {

struct DoubleSortOptions {
    int horizon = 252;
    std::size_t min_group = 10;
    int lags = 12;
};

struct DoubleSortResult {
    ingest::Characteristic characteristic{};
    /// Above-High, Above-Low, Below-High, Below-Low, then (AH-AL)-(BH-BL).
    std::vector<event::EventCurve> curves;
    double spread_difference = 0.0;  ///< at the horizon
    double spread_difference_t = 0.0;
    std::size_t months = 0;
    std::vector<YearMonth> skipped_months;  ///< a group had fewer than min_group events
};

/// Each month, events are split at the median of the firm characteristic
/// (firms above the median vs the rest), then sorted into forecast deciles
/// within each group; High = top decile, Low = bottom decile. Months where
/// either group is too thin are skipped.
DoubleSortResult conditional_double_sort(const ingest::MarketPanel& market, const TradingCalendar& calendar,
                                         const event::BenchmarkAssignment& bench, std::span<const event::Event> events,
                                         ingest::Characteristic characteristic, const DoubleSortOptions& options = {});

}  // namespace nalpha::portfolio
