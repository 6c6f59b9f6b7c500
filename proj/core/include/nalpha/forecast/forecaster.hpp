#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nalpha/forecast/ridge.hpp"
#include "nalpha/ingest/dataset.hpp"
#include "nalpha/portfolio/signal.hpp"

namespace nalpha::forecast {

enum class LabelPolicy { LabelsRealized, ReleaseDated };
enum class DelistPolicy { Absent, CompoundAvailable };

LabelPolicy parse_label_policy(std::string_view text);
std::string_view label_policy_name(LabelPolicy p);

struct LabelOptions {
    int horizon_months = 12;
    int days_per_month = 21;
    bool include_day0 = false;
    DelistPolicy delist = DelistPolicy::Absent;

    [[nodiscard]] int horizon_days() const { return horizon_months * days_per_month; }
};

/// A realized forward return and the last trading day it depends on.
struct Label {
    double value = 0.0;
    std::size_t end_day = 0;
};

/// Compounded simple return over the horizon following `start_day`
/// (exclusive of the start day unless include_day0). Days without a
/// return inside the firm's listed span count as zero. Absent when the
/// window runs past the calendar, or past the firm's last return under
/// DelistPolicy::Absent.
std::optional<Label> realized_label(const ingest::MarketPanel& market, std::size_t firm, std::size_t start_day,
                                    const LabelOptions& options);
/// By firm id; throws DomainError for unknown firms.
std::optional<double> realized_return(const ingest::MarketPanel& market, const std::string& firm_id,
                                      std::size_t start_day, const LabelOptions& options);

struct ForecastOptions {
    int burn_in_months = 60;
    std::vector<double> grid = default_grid();
    int folds = 5;
    LabelPolicy policy = LabelPolicy::LabelsRealized;
    LabelOptions label;
    bool standardize = false;
    /// Months on each side of a CV validation block dropped from its training set.
    int purge_months = 0;
};

struct ForecastRecord {
    std::string report_id;
    std::string firm_id;
    Date release_date;
    int horizon_months = 12;
    double predicted_return = 0.0;
    std::size_t report = ingest::kNoIndex;  ///< row in Dataset::reports
};

/// The model fitted for forecast month `month` (train_cutoff = month - 1).
struct MonthlyModel {
    YearMonth month;
    RidgeModel model;
    std::size_t row_bound = 0;  ///< training rows are labelled rows in [0, row_bound)
    std::vector<double> cv_mse;
};

struct ForecastRun {
    ForecastOptions options;
    std::vector<MonthlyModel> models;
    std::vector<ForecastRecord> forecasts;  ///< in report order
    std::vector<std::optional<Label>> labels;  ///< per report
    std::vector<std::size_t> model_of_report;  ///< index into models or kNoIndex
    std::vector<YearMonth> skipped_months;
};

/// Dense report-by-dim matrix of full embedding vectors.
Eigen::MatrixXd embedding_matrix(const ingest::EmbeddingTable& table);

/// intercept + sum_g w_g (beta . block_g), summed in group order. The
/// coalition scorer uses the same arithmetic so the full coalition
/// reproduces these forecasts bit for bit.
double score_report(const ingest::EmbeddingTable& table, std::size_t row, const RidgeModel& model);

/// Expanding-window fits, one per calendar month with reports after the
/// burn-in, each scoring that month's reports.
ForecastRun expanding_forecasts(const ingest::Dataset& dataset, const ForecastOptions& options);

struct AuditResult {
    std::size_t models = 0;
    std::size_t rows_checked = 0;
    std::size_t violations = 0;
    std::vector<std::string> details;  ///< first few violations
};

/// Re-derives every model's training rows and checks that each label
/// window ends before the model's forecast month, and that every forecast
/// comes from the model of its release month.
AuditResult audit_lookahead(const ingest::Dataset& dataset, const ForecastRun& run);

/// Forecasts as portfolio observations (firm, release month, prediction).
std::vector<portfolio::SignalObs> signal_observations(const ingest::Dataset& dataset,
                                                      const std::vector<ForecastRecord>& forecasts);

/// report_id,firm_id,release_date,predicted_return; an optional leading
/// "# ..." comment line is written when `comment` is non-empty.
void write_forecasts_csv(const std::filesystem::path& path, const std::vector<ForecastRecord>& forecasts,
                         const std::string& comment = {});
std::vector<ForecastRecord> read_forecasts_csv(const std::filesystem::path& path);
/// Resolves `report` against the dataset (by report_id); unknown ids throw.
void attach_reports(std::vector<ForecastRecord>& forecasts, const ingest::Dataset& dataset);

}  // namespace nalpha::forecast
