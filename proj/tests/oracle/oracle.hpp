#pragma once

// Slow reference implementations used only by the tests. Each one works
// from the defining formula with plain loops and shares no code with the
// library routine it checks.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nalpha/common/calendar.hpp"
#include "nalpha/ingest/panels.hpp"
#include "nalpha/ingest/records.hpp"

namespace nalpha::oracle {

struct RidgeFit {
    double intercept = 0.0;
    Eigen::VectorXd beta;
    long iterations = 0;
    double gradient_norm = 0.0;
};

/// Minimizes sum (y - b0 - X b)^2 + theta |b|^2 over (b0, b) by gradient
/// descent with a fixed 1/L step, starting from zero, until the max-norm of
/// the gradient falls below `tol`.
RidgeFit ridge_gradient_descent(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double theta,
                                double tol = 1e-12, long max_iter = 5'000'000);

/// Shapley values by enumerating all P! orderings.
std::vector<double> shapley_permutations(std::size_t players, const std::function<double(std::uint64_t)>& value);

using Weights = std::map<std::size_t, double>;

/// w o (1 + rf + R) / (1 + rf + w'R) with R the excess returns of the held names.
Weights drift(const Weights& w, const Weights& excess, double rf);
/// sum_i |target_i - drifted_i| over the union of names.
double l1_distance(const Weights& target, const Weights& drifted);
/// Turnover of each month after the first: |w_t - drift(w_{t-1})|_1.
std::vector<double> turnover_path(const std::vector<Weights>& targets, const std::vector<Weights>& excess,
                                  const std::vector<double>& rf);

/// Newey-West variance of the sample mean from explicit autocovariances:
/// (g0 + 2 sum_l (1 - l/(L+1)) g_l) / n with g_l = sum_t u_t u_{t-l} / n.
double mean_variance_bartlett(std::span<const double> x, int lags);

/// OLS coefficients from the normal equations.
Eigen::VectorXd ols_coefficients(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);
/// Newey-West covariance (no small-sample factor) built with double loops
/// over observation pairs.
Eigen::MatrixXd newey_west_cov(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int lags);
/// HC1: n/(n-k) (X'X)^-1 (sum u_i^2 x_i x_i') (X'X)^-1.
Eigen::MatrixXd hc1_cov(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Pearson correlation from the covariance formula, in percent.
double correlation_pct(std::span<const double> a, std::span<const double> b);

/// prod(1 + r_firm) - prod(1 + r_bench) over the given daily returns.
double product_car(std::span<const double> firm, std::span<const double> bench);

/// Compounded return over days (start, start + days], missing days as zero.
double compounded(std::span<const double> daily, std::size_t start, std::size_t days);

/// Value-weighted mean of `value` within each cell: weights and values per
/// member, keyed by cell id. Cells with zero total weight are absent.
std::map<int, double> weighted_cell_means(const std::vector<int>& cell, const std::vector<double>& weight,
                                          const std::vector<double>& value);

/// Per-firm mean of observation values with month in [m - lb, m - 1].
struct Obs {
    std::size_t firm;
    YearMonth month;
    double value;
};
std::map<std::size_t, std::pair<double, std::size_t>> trailing_means(const std::vector<Obs>& obs, YearMonth month,
                                                                     int lb);

/// Deciles by a full stable sort on (key, firm): the item at position r
/// (1-based) gets decile ceil(10 r / n) - 1.
std::vector<int> sorted_deciles(const std::vector<double>& key);

/// Most recent record for (analyst, firm) strictly before `date` carrying
/// the field, found by scanning every record.
std::optional<double> latest_prior(std::span<const ingest::NumericRecord> records, const std::string& analyst,
                                   const std::string& firm, Date date,
                                   const std::function<std::optional<double>(const ingest::NumericRecord&)>& field);

/// SUE from the firm's latest announcement before `date`; consensus is the
/// supplied value or the median of each analyst's newest EPS forecast in
/// [announce - window, announce).
std::optional<double> sue(std::span<const ingest::EarningsEvent> events, std::span<const ingest::NumericRecord> records,
                          const std::string& firm, Date date, int window = 90);

}  // namespace nalpha::oracle
