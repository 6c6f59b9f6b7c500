#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "nalpha/attribution/partition.hpp"
#include "nalpha/forecast/forecaster.hpp"
#include "nalpha/portfolio/backtest.hpp"

namespace nalpha::attribution {

enum class Functional { Sharpe, MeanReturn };

/// sr | ret
Functional parse_functional(std::string_view text);
std::string_view functional_name(Functional f);

/// Annualized Sharpe ratio of a monthly H-L series, or its mean in
/// %/month. A series with zero dispersion has Sharpe 0.
double functional_value(std::span<const double> long_short, Functional f);

/// Scores every forecast under a coalition with the fixed monthly ridge
/// coefficients, reruns the backtest and caches the H-L series by mask.
/// The per-group projections beta . block_g are computed once, and the
/// coalition score repeats score_report's summation order, so the full
/// coalition reproduces the baseline forecasts bit for bit. Safe to call
/// from several threads.
class CoalitionEvaluator {
public:
    CoalitionEvaluator(const ingest::Dataset& dataset, const forecast::ForecastRun& run, Partition partition,
                       const portfolio::BacktestOptions& options);

    [[nodiscard]] const Partition& partition() const { return partition_; }
    [[nodiscard]] std::size_t players() const { return partition_.size(); }
    [[nodiscard]] const std::vector<YearMonth>& months() const { return plan_.months(); }
    [[nodiscard]] const portfolio::BacktestPlan& plan() const { return plan_; }

    /// Coalition forecasts aligned with run.forecasts.
    [[nodiscard]] std::vector<double> forecasts(Coalition S) const;
    /// Monthly H-L returns of the coalition strategy (cached).
    [[nodiscard]] std::shared_ptr<const std::vector<double>> long_short(Coalition S) const;
    /// H-L returns computed afresh, bypassing the cache.
    [[nodiscard]] std::vector<double> long_short_uncached(Coalition S) const;
    [[nodiscard]] double value(Coalition S, Functional f) const;

    /// Number of coalition backtests actually run.
    [[nodiscard]] std::size_t evaluations() const { return evaluations_.load(); }
    [[nodiscard]] std::size_t cache_size() const;

private:
    Partition partition_;
    std::size_t groups_ = 0;
    std::vector<double> intercept_;   // per forecast
    std::vector<double> weight_;      // forecast-major, groups_ wide
    std::vector<double> projection_;  // beta . block_g
    portfolio::BacktestPlan plan_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<Coalition, std::shared_ptr<const std::vector<double>>> cache_;
    mutable std::atomic<std::size_t> evaluations_{0};
};

struct ShapleyValue {
    std::string group;
    double phi = 0.0;
    double se = 0.0;             ///< Monte-Carlo standard error (0 in exact mode)
    double share = 0.0;          ///< phi / sum of phi
    double share_of_gain = 0.0;  ///< phi / (V(full) - V(empty))
};

struct ShapleyReport {
    std::string partition;
    std::string functional;
    std::string mode;  ///< exact | mc
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    double v_full = 0.0;
    double v_empty = 0.0;
    std::vector<ShapleyValue> values;
    std::size_t evaluations = 0;
    /// MC only: marginal contribution of each player in each sampled
    /// permutation (samples x players), used for aggregated standard errors.
    std::vector<std::vector<double>> draws;

    [[nodiscard]] double phi_sum() const;
    /// |sum phi - (V(full) - V(empty))|
    [[nodiscard]] double efficiency_gap() const;
};

using ValueFunction = std::function<double(Coalition)>;

/// Exact Shapley values from a value table indexed by mask (size 2^P).
std::vector<double> shapley_from_table(std::size_t players, std::span<const double> table);

/// Exact decomposition over all 2^P coalitions (P <= 24), evaluated in
/// parallel; `value` must be thread-safe.
ShapleyReport shapley_exact(const std::vector<std::string>& players, const ValueFunction& value);
/// Average marginal contributions over `samples` uniform permutations
/// drawn from `seed` (samples >= 100). The distinct coalitions are
/// evaluated in parallel; results do not depend on the thread count.
ShapleyReport shapley_mc(const std::vector<std::string>& players, const ValueFunction& value, std::size_t samples,
                         std::uint64_t seed);

ShapleyReport shapley_exact(const CoalitionEvaluator& evaluator, Functional f);
ShapleyReport shapley_mc(const CoalitionEvaluator& evaluator, Functional f, std::size_t samples, std::uint64_t seed);

/// Per-month decomposition of the mean-return functional: phi[t][p] is the
/// exact Shapley value of month t's H-L return (%). The time average equals
/// the full-sample MeanReturn decomposition.
struct MonthlyShapley {
    std::vector<YearMonth> months;
    std::vector<std::string> players;
    std::vector<std::vector<double>> phi;
};
MonthlyShapley shapley_monthly(const CoalitionEvaluator& evaluator);

/// Sums phi over the players of each category, in order of first
/// appearance; shares are recomputed. Throws InputError for a player
/// missing from the mapping.
ShapleyReport aggregate_groups(const ShapleyReport& report, const std::map<std::string, std::string>& mapping);

nlohmann::json to_json(const ShapleyReport& report);

}  // namespace nalpha::attribution
