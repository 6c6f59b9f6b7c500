#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nalpha/event_study/benchmark.hpp"
#include "nalpha/forecast/forecaster.hpp"
#include "nalpha/ingest/dataset.hpp"
#include "nalpha/portfolio/signal.hpp"

namespace nalpha::signals {

/// (pos - neg) / total; absent when total is zero.
std::optional<double> tone(int pos, int neg, int total);

struct Revision {
    std::optional<double> rec_rev;  ///< notches
    std::optional<double> ef_rev;   ///< fraction of price
    std::optional<double> tp_rev;   ///< fraction of price
    std::string reason;             ///< why a field is absent (empty if all present)
};

/// Differences between the report's matched history record and the same
/// analyst's most recent earlier record for the firm carrying that field.
/// EPS and target-price differences are scaled by the close `price_lag`
/// trading days before the event day (nearest earlier close if that day
/// has none).
Revision revisions(const ingest::Dataset& dataset, std::size_t report, int price_lag = 50);

/// Consensus for an announcement: the supplied value, otherwise the median
/// of each analyst's latest EPS forecast dated in [announce - window,
/// announce).
std::optional<double> consensus_eps(const ingest::EarningsEvent& event, const ingest::NumericRevisionHistory& history,
                                    int window_days = 90);

/// (actual - consensus) / price of the firm's latest announcement strictly
/// before `date`.
std::optional<double> sue(const std::string& firm_id, Date date, std::span<const ingest::EarningsEvent> earnings,
                          const ingest::NumericRevisionHistory& history, int window_days = 90);

struct ReportSignals {
    std::string report_id;
    std::optional<double> tone;
    std::optional<double> headline_tone;
    std::optional<double> rec_rev;
    std::optional<double> ef_rev;
    std::optional<double> tp_rev;
    std::optional<double> sue;
    std::optional<double> car01;
    std::string note;
};

/// Signals for every report (aligned with dataset.reports).
std::vector<ReportSignals> compute_signals(const ingest::Dataset& dataset, const event::BenchmarkAssignment& bench);

void write_signals_csv(const std::filesystem::path& path, const std::vector<ReportSignals>& signals,
                       const std::string& comment = {});

enum class SentimentKind { Car01, RecRev, HeadlineTone, BodyTone };
SentimentKind parse_sentiment_kind(std::string_view text);
std::string_view sentiment_kind_name(SentimentKind k);
inline constexpr std::array<SentimentKind, 4> kSentimentKinds = {SentimentKind::Car01, SentimentKind::RecRev,
                                                                 SentimentKind::HeadlineTone, SentimentKind::BodyTone};

/// Observations (firm, release month, measure) for the reports carrying
/// the measure; build_signal turns them into trailing means.
std::vector<portfolio::SignalObs> sentiment_signal(const ingest::Dataset& dataset,
                                                   const std::vector<ReportSignals>& signals, SentimentKind kind);

/// Per-report values for profiling, in report order.
struct ProfileInput {
    std::vector<std::string> columns;
    std::vector<std::size_t> report;               ///< row in dataset.reports
    std::vector<YearMonth> month;
    std::vector<double> predicted;                 ///< sort key
    std::vector<std::vector<double>> values;       ///< per column, NaN = absent
};

/// Columns predicted, realized, car01, sue, rec_rev, ef_rev, tp_rev for the
/// forecasted reports.
ProfileInput profile_input(const ingest::Dataset& dataset, const forecast::ForecastRun& run,
                           const std::vector<ReportSignals>& signals);

struct DecileProfile {
    std::vector<std::string> columns;
    /// rows[d][c]: time-series mean over months of the decile's monthly
    /// average; absent when the decile never has the column.
    std::array<std::vector<std::optional<double>>, 10> rows;
    std::vector<std::optional<double>> hl;    ///< rows[9] - rows[0]
    std::vector<std::optional<double>> hl_t;  ///< NW t of monthly D10 - D1 differences
    std::size_t months = 0;
};

/// Reports are ranked into deciles by prediction within each release
/// month; each decile's columns are averaged per month, then across months.
DecileProfile decile_profile(const ProfileInput& input, int lags = 12);

void write_profile_csv(const std::filesystem::path& path, const DecileProfile& profile,
                       const std::string& comment = {});

}  // namespace nalpha::signals
