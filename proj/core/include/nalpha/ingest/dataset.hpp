#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nalpha/common/calendar.hpp"
#include "nalpha/ingest/embeddings.hpp"
#include "nalpha/ingest/panels.hpp"
#include "nalpha/ingest/records.hpp"

namespace nalpha::ingest {

struct DataPaths {
    std::filesystem::path reports;
    std::filesystem::path embeddings;
    std::filesystem::path market;
    std::filesystem::path chars;
    std::filesystem::path factors;
    std::filesystem::path calendar;
    std::filesystem::path numerics;  ///< optional (empty path = absent)
    std::filesystem::path earnings;  ///< optional
};

enum class WindowUnit { TradingDays, CalendarDays };

struct IngestOptions {
    std::optional<Date> sample_start;
    std::optional<Date> sample_end;
    int match_window = 2;
    WindowUnit match_unit = WindowUnit::TradingDays;
};

struct Reject {
    std::string report_id;
    std::string reason;
};

/// Result of linking a report to the revision history.
struct MatchedNumerics {
    std::optional<std::size_t> record;  ///< index into NumericRevisionHistory::records()
    [[nodiscard]] bool missing() const { return !record.has_value(); }
};

/// Joined, validated inputs. Reports are sorted by (release_date,
/// report_id) and `embeddings` is row-aligned with `reports`. Immutable
/// after load and safe to share across threads.
struct Dataset {
    TradingCalendar calendar;
    MarketPanel market;
    FactorPanel factors;
    std::vector<ReportRecord> reports;
    EmbeddingTable embeddings;
    NumericRevisionHistory numerics;
    std::vector<EarningsEvent> earnings;  ///< sorted by (firm_id, announce_date)
    std::vector<MatchedNumerics> matched;  ///< aligned with reports
    std::vector<Reject> rejects;
    std::size_t input_report_count = 0;
    IngestOptions options;

    /// Deterministic content hash over every loaded value.
    [[nodiscard]] std::string fingerprint() const;
    /// Index of a report by id, or nullopt.
    [[nodiscard]] std::optional<std::size_t> report_index(const std::string& id) const;
};

/// Parses the [data] table of a config document; relative paths resolve
/// against `base_dir`.
DataPaths data_paths_from_config(const nlohmann::json& data, const std::filesystem::path& base_dir);
IngestOptions ingest_options_from_config(const nlohmann::json& data);

/// Loads a config file (TOML or JSON) whose [data] table names the inputs.
Dataset load_dataset(const std::filesystem::path& config_path);
Dataset load_dataset(const DataPaths& paths, const IngestOptions& options);

/// Picks the history record for the report's analyst and firm dated within
/// the window around release: closest first, then the earlier date.
MatchedNumerics match_numeric_records(const ReportRecord& report, const NumericRevisionHistory& history,
                                      int window, WindowUnit unit, const TradingCalendar& calendar);

void write_rejects(const std::filesystem::path& path, const std::vector<Reject>& rejects);

// Writers for the CSV schemas (used by the synthetic generator and tests).
void write_reports_csv(const std::filesystem::path& path, const std::vector<ReportRecord>& reports);
void write_calendar_csv(const std::filesystem::path& path, const TradingCalendar& calendar);
void write_numerics_csv(const std::filesystem::path& path, std::span<const NumericRecord> records);
void write_earnings_csv(const std::filesystem::path& path, const std::vector<EarningsEvent>& events);
/// Writes every present (firm, day) row; the close column is emitted when
/// `with_close` is set.
void write_market_csv(const std::filesystem::path& path, const MarketPanel& market,
                      const TradingCalendar& calendar, bool with_close);
void write_chars_csv(const std::filesystem::path& path, const MarketPanel& market, const TradingCalendar& calendar);
void write_factors_csv(const std::filesystem::path& path, const FactorPanel& factors);

// Individual readers.
TradingCalendar read_calendar_csv(const std::filesystem::path& path);
std::vector<ReportRecord> read_reports_csv(const std::filesystem::path& path);
FactorPanel read_factors_csv(const std::filesystem::path& path);
NumericRevisionHistory read_numerics_csv(const std::filesystem::path& path);
std::vector<EarningsEvent> read_earnings_csv(const std::filesystem::path& path);

}  // namespace nalpha::ingest
