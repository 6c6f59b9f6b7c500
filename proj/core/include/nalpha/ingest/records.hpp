#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nalpha/common/calendar.hpp"

namespace nalpha::ingest {

inline constexpr std::size_t kNoIndex = static_cast<std::size_t>(-1);

/// One analyst report as listed in reports.csv.
struct ReportRecord {
    std::string report_id;
    std::string firm_id;
    std::string analyst_id;
    std::string broker_id;
    Date release_date;
    std::optional<int> recommendation;
    std::optional<double> eps_forecast;
    std::optional<double> target_price;
    int n_pos = 0;
    int n_neg = 0;
    int n_sent = 0;

    // Optional trailing columns.
    std::string industry;
    std::optional<int> headline_pos;
    std::optional<int> headline_neg;
    std::optional<int> headline_sent;

    // Resolved by the loader.
    std::size_t firm = kNoIndex;       ///< index into MarketPanel firms
    std::size_t event_day = kNoIndex;  ///< first trading day at or after release
};

/// One dated I/B/E/S-style numeric output by an analyst for a firm.
struct NumericRecord {
    std::string analyst_id;
    std::string firm_id;
    Date date;
    std::optional<int> recommendation;
    std::optional<double> eps_forecast;
    std::optional<double> target_price;
};

struct EarningsEvent {
    std::string firm_id;
    Date announce_date;
    double actual_eps = 0.0;
    std::optional<double> consensus_eps;
    double price = 0.0;  ///< price per share at fiscal quarter end
};

/// Revision histories keyed by (analyst, firm), each sorted by date.
class NumericRevisionHistory {
public:
    NumericRevisionHistory() = default;
    explicit NumericRevisionHistory(std::vector<NumericRecord> records);

    [[nodiscard]] std::span<const NumericRecord> records() const { return records_; }
    /// Records for one analyst/firm pair in date order (empty if none).
    [[nodiscard]] std::span<const NumericRecord> for_pair(const std::string& analyst,
                                                          const std::string& firm) const;
    /// All records for a firm across analysts, in (analyst, date) order.
    [[nodiscard]] std::vector<const NumericRecord*> for_firm(const std::string& firm) const;

private:
    std::vector<NumericRecord> records_;
    std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> pairs_;
    std::unordered_map<std::string, std::vector<std::size_t>> firms_;
};

}  // namespace nalpha::ingest
