#pragma once

#include <Eigen/Dense>
#include <span>
#include <string_view>
#include <vector>

#include "nalpha/common/calendar.hpp"

namespace nalpha::forecast {

/// Fitted ridge model: predict(x) = intercept + beta'x.
struct RidgeModel {
    double intercept = 0.0;
    Eigen::VectorXd beta;
    double theta = 1.0;
    YearMonth train_cutoff{};
    std::size_t n_train = 0;

    [[nodiscard]] double predict(const Eigen::VectorXd& x) const { return intercept + beta.dot(x); }
};

/// Closed-form ridge on column-centered data with an unpenalized intercept.
/// With `standardize`, columns are also scaled to unit (population)
/// variance before penalizing and the coefficients mapped back.
RidgeModel fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double theta, bool standardize = false);

/// Sums sufficient for centered ridge fits and squared-error evaluation over
/// a set of rows. Stats over disjoint row sets add.
struct GramStats {
    double n = 0.0;
    double sy = 0.0;
    double syy = 0.0;
    Eigen::VectorXd sx;
    Eigen::VectorXd sxy;
    Eigen::MatrixXd sxx;

    GramStats() = default;
    explicit GramStats(Eigen::Index dim);
    void add_rows(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);
    GramStats& operator+=(const GramStats& o);
    GramStats& operator-=(const GramStats& o);
};

RidgeModel fit_ridge(const GramStats& stats, double theta, bool standardize = false);
/// Sum of squared residuals of `model` over the rows behind `stats`.
double sum_squared_error(const GramStats& stats, const RidgeModel& model);

/// Contiguous block boundaries: block k spans [bounds[k], bounds[k+1]).
std::vector<std::size_t> fold_bounds(std::size_t rows, int folds);

/// Time-blocked K-fold CV over `grid`; rows must already be in time order.
/// `gap` rows on each side of the validation block are left out of its
/// training set. Ties go to the larger penalty.
double select_penalty(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::span<const double> grid, int folds,
                      std::size_t gap = 0, std::vector<double>* cv_mse = nullptr);

/// Index of the grid point with the smallest CV error, ties to the larger value.
std::size_t pick_penalty(std::span<const double> grid, std::span<const double> cv_mse);

/// "log:1e-2:1e6:9" (log-spaced, inclusive) or a comma list "0.1,1,10".
std::vector<double> parse_grid(std::string_view text);
std::vector<double> default_grid();

}  // namespace nalpha::forecast
