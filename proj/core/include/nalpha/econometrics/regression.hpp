#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace nalpha::econ {

enum class SeKind { Ols, Hc0, Hc1, NeweyWest, Cluster1, Cluster2 };

struct SeType {
    SeKind kind = SeKind::Ols;
    int lags = 0;

    static SeType ols() { return {SeKind::Ols, 0}; }
    static SeType hc0() { return {SeKind::Hc0, 0}; }
    static SeType hc1() { return {SeKind::Hc1, 0}; }
    static SeType newey_west(int lags) { return {SeKind::NeweyWest, lags}; }
    static SeType cluster1() { return {SeKind::Cluster1, 0}; }
    static SeType cluster2() { return {SeKind::Cluster2, 0}; }

    /// "ols", "hc1", "nw(12)", "cluster2" ...
    [[nodiscard]] std::string name() const;
};

/// Category codes for clustered covariance, one per row.
struct Clusters {
    std::span<const std::int64_t> a;
    std::span<const std::int64_t> b;
};

struct RegressionResult {
    std::vector<std::string> names;
    Eigen::VectorXd coef;
    Eigen::VectorXd se;
    Eigen::VectorXd t;
    Eigen::MatrixXd cov;
    Eigen::VectorXd residuals;
    double r2 = 0.0;
    double adj_r2 = 0.0;
    std::size_t n = 0;
    std::size_t absorbed = 0;  ///< fixed-effect levels absorbed before the fit
    std::string se_type;

    [[nodiscard]] std::size_t index(const std::string& name) const;
};

/// Least squares of y on the columns of X (include a column of ones for an
/// intercept). R² is centered when X spans a constant, uncentered otherwise.
/// Throws DomainError on rank deficiency, naming the dependent columns.
RegressionResult ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, SeType se,
                     std::vector<std::string> names = {}, Clusters clusters = {});

/// [1, X] with the intercept named "const".
Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X);

/// Newey-West long-run covariance of the moment rows X_i*u_i with Bartlett
/// weights 1 - l/(L+1); no small-sample scaling, so lags = 0 is the White
/// meat.
Eigen::MatrixXd newey_west_meat(const Eigen::MatrixXd& X, const Eigen::VectorXd& u, int lags);

/// One-way clustered meat: sum over clusters of (X_g'u_g)(X_g'u_g)'.
Eigen::MatrixXd cluster_meat(const Eigen::MatrixXd& X, const Eigen::VectorXd& u,
                             std::span<const std::int64_t> cluster, std::size_t* groups = nullptr);

struct MeanTest {
    double mean = 0.0;
    double se = 0.0;
    double t = 0.0;
    std::size_t n = 0;
};

/// Mean of a series with a Newey-West standard error (regression on a
/// constant).
MeanTest mean_test(std::span<const double> x, int lags);

}  // namespace nalpha::econ
