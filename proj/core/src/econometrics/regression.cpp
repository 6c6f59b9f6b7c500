#include "nalpha/econometrics/regression.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "nalpha/common/error.hpp"

namespace nalpha::econ {

std::string SeType::name() const {
    switch (kind) {
        case SeKind::Ols: return "ols";
        case SeKind::Hc0: return "hc0";
        case SeKind::Hc1: return "hc1";
        case SeKind::NeweyWest: return "nw(" + std::to_string(lags) + ")";
        case SeKind::Cluster1: return "cluster1";
        case SeKind::Cluster2: return "cluster2";
    }
    return "unknown";
}

std::size_t RegressionResult::index(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw DomainError("no coefficient named '" + name + "'");
    return static_cast<std::size_t>(it - names.begin());
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
    Eigen::MatrixXd out(X.rows(), X.cols() + 1);
    out.col(0).setOnes();
    out.rightCols(X.cols()) = X;
    return out;
}

Eigen::MatrixXd newey_west_meat(const Eigen::MatrixXd& X, const Eigen::VectorXd& u, int lags) {
    if (lags < 0) throw DomainError("Newey-West lags must be >= 0");
    const Eigen::MatrixXd g = X.array().colwise() * u.array();  // moment rows
    Eigen::MatrixXd S = g.transpose() * g;
    const Eigen::Index n = g.rows();
    for (int l = 1; l <= lags && l < n; ++l) {
        const double w = 1.0 - static_cast<double>(l) / (lags + 1.0);
        const Eigen::MatrixXd G = g.bottomRows(n - l).transpose() * g.topRows(n - l);
        S += w * (G + G.transpose());
    }
    return S;
}

Eigen::MatrixXd cluster_meat(const Eigen::MatrixXd& X, const Eigen::VectorXd& u,
                             std::span<const std::int64_t> cluster, std::size_t* groups) {
    if (static_cast<Eigen::Index>(cluster.size()) != X.rows()) throw DomainError("cluster key length mismatch");
    std::unordered_map<std::int64_t, Eigen::Index> slot;
    std::vector<Eigen::VectorXd> sums;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        auto [it, inserted] = slot.emplace(cluster[static_cast<std::size_t>(i)], static_cast<Eigen::Index>(sums.size()));
        if (inserted) sums.emplace_back(Eigen::VectorXd::Zero(X.cols()));
        sums[static_cast<std::size_t>(it->second)] += X.row(i).transpose() * u(i);
    }
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(X.cols(), X.cols());
    for (const auto& s : sums) S += s * s.transpose();
    if (groups) *groups = sums.size();
    return S;
}

namespace {

std::vector<std::int64_t> intersect_keys(std::span<const std::int64_t> a, std::span<const std::int64_t> b) {
    std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> ids;
    std::vector<std::int64_t> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto [it, _] = ids.emplace(std::make_pair(a[i], b[i]), static_cast<std::int64_t>(ids.size()));
        out[i] = it->second;
    }
    return out;
}

Eigen::MatrixXd cr1(const Eigen::MatrixXd& X, const Eigen::VectorXd& u, std::span<const std::int64_t> key,
                    const Eigen::MatrixXd& bread) {
    std::size_t G = 0;
    const Eigen::MatrixXd meat = cluster_meat(X, u, key, &G);
    if (G < 2) throw DomainError("clustered standard errors need at least two clusters");
    const double n = static_cast<double>(X.rows()), k = static_cast<double>(X.cols());
    const double scale = (static_cast<double>(G) / (G - 1.0)) * ((n - 1.0) / (n - k));
    return scale * bread * meat * bread;
}

bool spans_constant(const Eigen::MatrixXd& X) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double v = X(0, j);
        if (v != 0.0 && (X.col(j).array() == v).all()) return true;
    }
    return false;
}

}  // namespace

RegressionResult ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, SeType se, std::vector<std::string> names,
                     Clusters clusters) {
    const Eigen::Index n = X.rows(), k = X.cols();
    if (y.size() != n) throw DomainError("ols: X and y row counts differ");
    if (k == 0) throw DomainError("ols: no regressors");
    if (n <= k) throw DomainError("ols: need more rows than regressors");
    if (!X.allFinite() || !y.allFinite()) throw DomainError("ols: non-finite input");
    if (names.empty()) {
        for (Eigen::Index j = 0; j < k; ++j) names.push_back("x" + std::to_string(j));
    }
    if (static_cast<Eigen::Index>(names.size()) != k) throw DomainError("ols: names do not match columns");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < k) {
        std::string dependent;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index j = qr.rank(); j < k; ++j) {
            if (!dependent.empty()) dependent += ", ";
            dependent += names[static_cast<std::size_t>(perm(j))];
        }
        throw DomainError("ols: design matrix is rank deficient; dependent columns: " + dependent);
    }

    RegressionResult r;
    r.names = std::move(names);
    r.coef = qr.solve(y);
    r.residuals = y - X * r.coef;
    r.n = static_cast<std::size_t>(n);
    r.se_type = se.name();

    const Eigen::MatrixXd XtX = X.transpose() * X;
    const Eigen::MatrixXd bread = XtX.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    const double dn = static_cast<double>(n), dk = static_cast<double>(k);
    switch (se.kind) {
        case SeKind::Ols:
            r.cov = (r.residuals.squaredNorm() / (dn - dk)) * bread;
            break;
        case SeKind::Hc0:
            r.cov = bread * newey_west_meat(X, r.residuals, 0) * bread;
            break;
        case SeKind::Hc1:
            r.cov = (dn / (dn - dk)) * bread * newey_west_meat(X, r.residuals, 0) * bread;
            break;
        case SeKind::NeweyWest:
            r.cov = bread * newey_west_meat(X, r.residuals, se.lags) * bread;
            break;
        case SeKind::Cluster1:
            if (clusters.a.empty()) throw DomainError("cluster1 needs a cluster key");
            r.cov = cr1(X, r.residuals, clusters.a, bread);
            break;
        case SeKind::Cluster2: {
            if (clusters.a.empty() || clusters.b.empty()) throw DomainError("cluster2 needs two cluster keys");
            if (clusters.a.size() != clusters.b.size()) throw DomainError("cluster key length mismatch");
            const auto ab = intersect_keys(clusters.a, clusters.b);
            r.cov = cr1(X, r.residuals, clusters.a, bread) + cr1(X, r.residuals, clusters.b, bread) -
                    cr1(X, r.residuals, ab, bread);
            break;
        }
    }
    r.cov = 0.5 * (r.cov + r.cov.transpose());
    r.se = r.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    r.t.resize(k);
    for (Eigen::Index j = 0; j < k; ++j) r.t(j) = r.se(j) > 0.0 ? r.coef(j) / r.se(j) : std::nan("");

    const double ssr = r.residuals.squaredNorm();
    const bool centered = spans_constant(X);
    const double sst = centered ? (y.array() - y.mean()).square().sum() : y.squaredNorm();
    r.r2 = sst > 0.0 ? 1.0 - ssr / sst : 1.0;
    const double c = centered ? 1.0 : 0.0;
    r.adj_r2 = 1.0 - (1.0 - r.r2) * (dn - c) / (dn - dk);
    return r;
}

MeanTest mean_test(std::span<const double> x, int lags) {
    if (x.size() < 2) throw DomainError("mean test needs at least two observations");
    const Eigen::Index n = static_cast<Eigen::Index>(x.size());
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = x[static_cast<std::size_t>(i)];
    MeanTest m;
    m.n = x.size();
    m.mean = y.mean();
    const Eigen::VectorXd u = y.array() - m.mean;
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(n, 1);
    const double S = newey_west_meat(ones, u, lags)(0, 0);
    m.se = std::sqrt(std::max(S, 0.0)) / static_cast<double>(n);
    m.t = m.se > 0.0 ? m.mean / m.se : std::nan("");
    return m;
}

}  // namespace nalpha::econ
