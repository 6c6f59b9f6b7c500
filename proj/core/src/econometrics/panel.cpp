#include "nalpha/econometrics/panel.hpp"

#include <cmath>
#include <unordered_map>

#include "nalpha/common/error.hpp"

namespace nalpha::econ {

namespace {

struct Grouping {
    std::vector<Eigen::Index> code;  // dense level per row
    std::vector<double> size;
};

Grouping dense_codes(const std::vector<std::int64_t>& key) {
    Grouping g;
    g.code.resize(key.size());
    std::unordered_map<std::int64_t, Eigen::Index> ids;
    for (std::size_t i = 0; i < key.size(); ++i) {
        auto [it, inserted] = ids.emplace(key[i], static_cast<Eigen::Index>(g.size.size()));
        if (inserted) g.size.push_back(0.0);
        g.code[i] = it->second;
        g.size[static_cast<std::size_t>(it->second)] += 1.0;
    }
    return g;
}

// Subtracts group means from every column; returns the largest mean removed.
double sweep(Eigen::MatrixXd& m, const Grouping& g) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.size.size()), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) sums.row(g.code[static_cast<std::size_t>(i)]) += m.row(i);
    for (Eigen::Index l = 0; l < sums.rows(); ++l) sums.row(l) /= g.size[static_cast<std::size_t>(l)];
    for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i) -= sums.row(g.code[static_cast<std::size_t>(i)]);
    return sums.rows() > 0 ? sums.cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace

int demean(Eigen::MatrixXd& columns, const std::vector<std::vector<std::int64_t>>& keys, const DemeanOptions& options) {
    if (keys.empty()) return 0;
    if (keys.size() > 2) throw DomainError("at most two fixed-effect keys are supported");
    std::vector<Grouping> groups;
    for (const auto& k : keys) {
        if (static_cast<Eigen::Index>(k.size()) != columns.rows()) throw DomainError("fixed-effect key length mismatch");
        groups.push_back(dense_codes(k));
    }
    if (groups.size() == 1) {
        sweep(columns, groups[0]);
        return 1;
    }
    for (int s = 1; s <= options.max_sweeps; ++s) {
        double change = 0.0;
        for (const auto& g : groups) change = std::max(change, sweep(columns, g));
        if (change < options.tolerance) return s;
    }
    throw DomainError("fixed-effect absorption did not converge after " + std::to_string(options.max_sweeps) +
                      " sweeps");
}

RegressionResult panel_regression(const PanelData& data, const DemeanOptions& options) {
    const Eigen::Index n = data.y.size();
    if (data.X.rows() != n) throw DomainError("panel: X and y row counts differ");
    if (data.fixed_effects.size() > 2) throw DomainError("at most two fixed-effect keys are supported");
    auto check_len = [&](const std::vector<std::int64_t>& v, const char* what) {
        if (!v.empty() && static_cast<Eigen::Index>(v.size()) != n) {
            throw DomainError(std::string("panel: ") + what + " length mismatch");
        }
    };
    for (const auto& fe : data.fixed_effects) check_len(fe, "fixed-effect key");
    check_len(data.cluster_a, "cluster key");
    check_len(data.cluster_b, "cluster key");

    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::isfinite(data.y(i)) && data.X.row(i).allFinite()) keep.push_back(i);
    }
    const auto m = static_cast<Eigen::Index>(keep.size());
    const Eigen::Index k = data.X.cols();
    Eigen::MatrixXd M(m, k + 1);
    std::vector<std::vector<std::int64_t>> fe(data.fixed_effects.size(), std::vector<std::int64_t>(keep.size()));
    std::vector<std::int64_t> ca, cb;
    for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index i = keep[static_cast<std::size_t>(r)];
        M(r, 0) = data.y(i);
        M.row(r).tail(k) = data.X.row(i);
        for (std::size_t f = 0; f < fe.size(); ++f) fe[f][static_cast<std::size_t>(r)] = data.fixed_effects[f][static_cast<std::size_t>(i)];
        if (!data.cluster_a.empty()) ca.push_back(data.cluster_a[static_cast<std::size_t>(i)]);
        if (!data.cluster_b.empty()) cb.push_back(data.cluster_b[static_cast<std::size_t>(i)]);
    }

    std::size_t absorbed = 0;
    for (const auto& key : fe) {
        const Grouping g = dense_codes(key);
        bool all_singletons = !g.size.empty();
        for (double s : g.size) all_singletons = all_singletons && s == 1.0;
        if (all_singletons) throw DomainError("fixed-effect key has only singleton groups");
        absorbed += g.size.size();
    }

    std::vector<std::string> names = data.names;
    Eigen::MatrixXd X;
    if (fe.empty()) {
        X = with_intercept(M.rightCols(k));
        names.insert(names.begin(), "const");
    } else {
        demean(M, fe, options);
        X = M.rightCols(k);
    }
    const Eigen::VectorXd y = M.col(0);

    SeType se = SeType::hc1();
    if (!ca.empty() && !cb.empty()) se = SeType::cluster2();
    else if (!ca.empty()) se = SeType::cluster1();
    RegressionResult r = ols(X, y, se, std::move(names), Clusters{ca, cb});
    r.absorbed = absorbed;
    return r;
}

Eigen::MatrixXd correlation_matrix(const std::vector<std::vector<double>>& series) {
    const std::size_t s = series.size();
    if (s == 0) return {};
    const std::size_t n = series[0].size();
    if (n < 2) throw DomainError("correlation needs at least two observations");
    Eigen::MatrixXd Z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(s));
    for (std::size_t j = 0; j < s; ++j) {
        if (series[j].size() != n) throw DomainError("correlation: series are not aligned");
        for (std::size_t i = 0; i < n; ++i) Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = series[j][i];
    }
    Z.rowwise() -= Z.colwise().mean();
    const Eigen::VectorXd norms = Z.colwise().norm();
    for (Eigen::Index j = 0; j < Z.cols(); ++j) {
        if (!(norms(j) > 0.0)) throw DomainError("correlation: series " + std::to_string(j) + " has zero variance");
    }
    Eigen::MatrixXd C = Z.transpose() * Z;
    for (Eigen::Index a = 0; a < C.rows(); ++a) {
        for (Eigen::Index b = 0; b < C.cols(); ++b) C(a, b) = 100.0 * C(a, b) / (norms(a) * norms(b));
        C(a, a) = 100.0;
    }
    return C;
}

}  // namespace nalpha::econ
