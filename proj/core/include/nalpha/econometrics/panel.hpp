#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "nalpha/econometrics/regression.hpp"

namespace nalpha::econ {

/// Rows for a fixed-effects regression. Missing values are NaN and are
/// dropped listwise before absorption.
struct PanelData {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;
    std::vector<std::string> names;
    /// Up to two categorical keys whose levels are absorbed.
    std::vector<std::vector<std::int64_t>> fixed_effects;
    /// Cluster keys (empty vectors = none).
    std::vector<std::int64_t> cluster_a;
    std::vector<std::int64_t> cluster_b;
};

struct DemeanOptions {
    double tolerance = 1e-10;
    int max_sweeps = 10000;
};

/// Within-transform by alternating projections; a single key needs one
/// pass. Throws DomainError when the sweeps do not converge. Returns the
/// number of sweeps used.
int demean(Eigen::MatrixXd& columns, const std::vector<std::vector<std::int64_t>>& keys,
           const DemeanOptions& options = {});

/// OLS on the within-transformed data. Without fixed effects an intercept
/// is added. Standard errors: two cluster keys give cluster2, one gives
/// cluster1, none gives HC1.
RegressionResult panel_regression(const PanelData& data, const DemeanOptions& options = {});

/// Pearson correlations of aligned series, in percent.
Eigen::MatrixXd correlation_matrix(const std::vector<std::vector<double>>& series);

}  // namespace nalpha::econ
