#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "nalpha/common/calendar.hpp"
#include "nalpha/ingest/panels.hpp"

namespace nalpha::portfolio {

/// One dated observation of a firm-level measure (e.g. a report's
/// predicted return), attributed to its release month.
struct SignalObs {
    std::size_t firm = 0;
    YearMonth month;
    double value = 0.0;
};

struct FirmSignal {
    std::size_t firm = 0;
    double signal = 0.0;
    std::size_t reports = 0;
    double lagged_cap = 0.0;
};

/// Per-firm trailing means for one portfolio month, ascending by firm index.
struct SignalSnapshot {
    YearMonth month;
    std::vector<FirmSignal> firms;
};

/// Mean of the observations released in [month - lb, month - 1] per firm,
/// with the month-end cap of month - 1. Firms without a positive lagged cap
/// are left out.
SignalSnapshot build_signal(std::span<const SignalObs> obs, YearMonth month, int lb, const ingest::MarketPanel& market,
                            const TradingCalendar& calendar);

struct Holding {
    std::size_t firm = 0;
    double weight = 0.0;
};

inline constexpr std::size_t kDeciles = 10;

/// Holdings per decile (index 0 = lowest signal), sorted by firm index.
struct DecileAssignment {
    std::array<std::vector<Holding>, kDeciles> deciles;
};

/// 1-based bin of each item among n sorted ascending by `keys`, ties broken
/// by position: the item at rank r gets ceil(bins * r / n).
std::vector<std::size_t> rank_bins(std::span<const double> keys, std::size_t bins);

enum class Weighting { Value, Equal };

/// Deciles by ascending signal with ties to the lower firm index; weights
/// proportional to lagged cap (or equal). Throws DomainError below
/// `min_firms`.
DecileAssignment form_deciles(const SignalSnapshot& snapshot, std::size_t min_firms = 10,
                              Weighting weighting = Weighting::Value);

}  // namespace nalpha::portfolio
