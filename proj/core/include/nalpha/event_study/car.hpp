#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nalpha/event_study/benchmark.hpp"

namespace nalpha::event {

/// prod(1 + R_firm) - prod(1 + R_bench) over days event_day..event_day+t for
/// t = 0..T. Days without a return count as zero. False (path untouched)
/// when the window runs past the calendar or the firm's last return, or
/// starts before its first.
bool car_path(const ingest::MarketPanel& market, const BenchmarkAssignment& bench, std::size_t firm,
              std::size_t event_day, int T, std::vector<double>& path);

std::optional<double> car(const ingest::MarketPanel& market, const BenchmarkAssignment& bench, std::size_t firm,
                          std::size_t event_day, int T);

struct Event {
    std::size_t firm = 0;
    std::size_t day = 0;  ///< first trading day at or after release
    double value = 0.0;   ///< sort key (e.g. predicted return)
};

struct EventCurve {
    std::string label;
    int horizon = 0;
    std::vector<double> car;  ///< days 0..T, equal-weighted across months
    std::vector<double> t;    ///< NW t of the monthly series per day
    std::size_t months = 0;
};

/// Monthly value-weighted mean paths per bucket. Buckets are 0-based; -1
/// leaves an event out.
struct BucketPaths {
    std::vector<std::vector<YearMonth>> months;              // per bucket
    std::vector<std::vector<std::vector<double>>> paths;     // per bucket, per month
    std::size_t events_used = 0;
    std::size_t events_dropped = 0;  ///< no full window or no lagged cap
};

BucketPaths bucket_paths(const ingest::MarketPanel& market, const TradingCalendar& calendar,
                         const BenchmarkAssignment& bench, std::span<const Event> events, std::span<const int> bucket,
                         int buckets, int T);

/// Equal-weighted mean of monthly paths with NW(lags) t-statistics.
EventCurve summarize_curve(const std::string& label, const std::vector<std::vector<double>>& monthly, int T,
                           int lags = 12);

/// Per-month differences a - b over months present in both.
std::vector<std::vector<double>> paired_difference(const std::vector<YearMonth>& ma,
                                                    const std::vector<std::vector<double>>& a,
                                                    const std::vector<YearMonth>& mb,
                                                    const std::vector<std::vector<double>>& b,
                                                    std::vector<YearMonth>* months = nullptr);

struct EventStudyOptions {
    int horizon = 252;
    std::size_t min_day_reports = 10;
    int lags = 12;
    int min_span_months = 12;
};

struct EventStudyResult {
    std::vector<EventCurve> curves;  ///< D1..D10 then H-L
    std::size_t thin_day_events = 0; ///< sorted on monthly breakpoints
    std::size_t events_used = 0;
    std::size_t events_dropped = 0;
};

/// Decile of each event: ranks among same-day events when the day has at
/// least `min_day_reports`, otherwise among the events of its month. Ties
/// go to the earlier event. Returns 0-based deciles.
std::vector<int> event_deciles(const TradingCalendar& calendar, std::span<const Event> events,
                               std::size_t min_day_reports, std::size_t* thin = nullptr);

/// Decile curves; H-L = D10 curve - D1 curve, with t from the paired
/// monthly differences.
EventStudyResult event_decile_curves(const ingest::MarketPanel& market, const TradingCalendar& calendar,
                                     const BenchmarkAssignment& bench, std::span<const Event> events,
                                     const EventStudyOptions& options = {});

}  // namespace nalpha::event
