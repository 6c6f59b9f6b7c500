#pragma once

#include <cstddef>
#include <vector>

#include "nalpha/common/calendar.hpp"
#include "nalpha/ingest/panels.hpp"

namespace nalpha::event {

/// Characteristic-matched benchmark portfolios. Each month, firms with
/// size, book-to-market and momentum are sorted sequentially (size, then
/// book-to-market within size, then momentum within both) into bins^3
/// cells; membership is held for the month and each cell's daily return
/// is the member average weighted by the previous day's cap.
class BenchmarkAssignment {
public:
    BenchmarkAssignment() = default;
    BenchmarkAssignment(const ingest::MarketPanel& market, const TradingCalendar& calendar, int bins);

    [[nodiscard]] int bins() const { return bins_; }
    [[nodiscard]] int cell_count() const { return bins_ * bins_ * bins_; }
    /// Cell of the firm in calendar month index k, or -1 when unassigned.
    [[nodiscard]] int cell(std::size_t firm, std::size_t month) const { return cells_[firm * months_ + month]; }
    /// Raw value-weighted cell return (NaN when no member traded that day).
    [[nodiscard]] double cell_return(int cell, std::size_t day) const {
        return raw_[static_cast<std::size_t>(cell) * days_ + day];
    }
    /// Cell return after the nearest-along-size fallback.
    [[nodiscard]] double resolved_return(int cell, std::size_t day) const {
        return resolved_[static_cast<std::size_t>(cell) * days_ + day];
    }
    [[nodiscard]] double universe_return(std::size_t day) const { return universe_[day]; }
    /// Benchmark return for a firm on a trading day.
    [[nodiscard]] double benchmark_return(std::size_t firm, std::size_t day) const;
    /// Weight of a firm's return on a day (previous day's cap); NaN if it
    /// does not enter the averages.
    [[nodiscard]] static double day_weight(const ingest::MarketPanel& market, std::size_t firm, std::size_t day);
    /// Member-days whose cell had no traded return and used a neighbour.
    [[nodiscard]] std::size_t fallbacks() const { return fallbacks_; }

    static constexpr int kUnassigned = -1;

private:
    int bins_ = 0;
    std::size_t months_ = 0;
    std::size_t days_ = 0;
    std::vector<int> cells_;
    std::vector<std::size_t> day_month_;
    std::vector<double> raw_, resolved_, universe_;
    std::size_t fallbacks_ = 0;
};

BenchmarkAssignment assign_benchmarks(const ingest::MarketPanel& market, const TradingCalendar& calendar, int bins = 5);

}  // namespace nalpha::event
