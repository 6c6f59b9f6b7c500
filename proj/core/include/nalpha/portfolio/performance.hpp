#pragma once

#include <span>
#include <string>
#include <vector>

#include "nalpha/ingest/panels.hpp"
#include "nalpha/portfolio/backtest.hpp"

namespace nalpha::portfolio {

/// Factor columns of a FactorPanel used as regressors.
struct FactorModel {
    std::string name;
    std::vector<std::string> factors;
};

/// capm, ff3, ff5, ff6, none, or cols:A+B+C. Canonical factor names are
/// MKT SMB HML RMW CMA MOM.
FactorModel parse_factor_model(std::string_view text);
/// Column index in the panel for a canonical factor name; accepts common
/// spellings (Mkt-RF, MKT_RF, UMD, ...). Throws InputError when absent.
std::size_t resolve_factor(const ingest::FactorPanel& panel, const std::string& name);

struct PerfStats {
    double mean = 0.0;   ///< %/month
    double sd = 0.0;     ///< %/month
    double sharpe = 0.0; ///< annualized
    double alpha = 0.0;  ///< %/month
    double alpha_t = 0.0;
    double r2 = 0.0;
    std::size_t months = 0;
    std::vector<std::string> factor_names;
    std::vector<double> loadings;
    std::vector<double> loading_t;
    double turnover = 0.0;  ///< fraction/month, filled by callers that track weights
};

/// Annualized Sharpe ratio from monthly mean and sd (any common unit).
inline double annualized_sharpe(double mean, double sd) { return mean / sd * 3.4641016151377544; }

/// Mean, sd and Sharpe of `returns` (in excess of rf when `excess`), plus
/// the intercept of an OLS on the model's factors with Newey-West(lags)
/// t-statistics. Needs at least 24 months; factor months must cover the
/// series.
PerfStats perf_stats(const StrategySeries& series, const ingest::FactorPanel& factors, const FactorModel& model,
                     bool excess, int lags = 12);

/// rf aligned with the series months; throws when the panel does not cover them.
std::vector<double> aligned_rf(const std::vector<YearMonth>& months, const ingest::FactorPanel& factors);

/// Month-by-month mean of aligned series.
StrategySeries combine_strategies(const std::vector<StrategySeries>& parts, const std::string& label);

struct InformationRatio {
    double ir = 0.0;        ///< annualized
    double mean_diff = 0.0; ///< %/month
    double sd_diff = 0.0;   ///< %/month
    double t = 0.0;         ///< NW t of the mean difference
    std::size_t months = 0;
};

InformationRatio information_ratio(const StrategySeries& combined, const StrategySeries& benchmark, int lags = 12);

/// Restriction of a series to months in [start, end].
StrategySeries window(const StrategySeries& s, YearMonth start, YearMonth end);

}  // namespace nalpha::portfolio
