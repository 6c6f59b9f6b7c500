#include <doctest.h>

#include <cmath>
#include <map>

#include "nalpha/common/error.hpp"
#include "nalpha/common/random.hpp"
#include "nalpha/econometrics/panel.hpp"
#include "nalpha/econometrics/regression.hpp"
#include "oracle.hpp"

using namespace nalpha;
using namespace nalpha::econ;

namespace {

Eigen::MatrixXd random_design(Eigen::Index n, Eigen::Index k, Rng& rng) {
    Eigen::MatrixXd X(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        for (Eigen::Index j = 1; j < k; ++j) X(i, j) = rng.normal();
    }
    return X;
}

double max_abs(const Eigen::MatrixXd& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("ols recovers exact linear relations") {
    Rng rng(1);
    Eigen::MatrixXd X = random_design(50, 2, rng);
    Eigen::VectorXd y = 2.0 * X.col(1);
    const auto r = ols(X, y, SeType::ols(), {"const", "x"});
    CHECK(std::abs(r.coef(0)) < 1e-12);
    CHECK(r.coef(1) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.r2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.index("x") == 1);
    CHECK_THROWS_AS(r.index("z"), DomainError);

    // a regressor orthogonal to y gets a zero slope
    Eigen::MatrixXd Z(4, 2);
    Z << 1, 1, 1, -1, 1, 1, 1, -1;
    Eigen::VectorXd w(4);
    w << 1, 1, 3, 3;
    CHECK(std::abs(ols(Z, w, SeType::ols()).coef(1)) < 1e-14);
}

TEST_CASE("rank deficiency names the dependent columns") {
    Rng rng(2);
    Eigen::MatrixXd X = random_design(30, 4, rng);
    X.col(3) = X.col(1) + X.col(2);
    try {
        (void)ols(X, X.col(1), SeType::hc1(), {"const", "a", "b", "ab"});
        FAIL("expected an error");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("rank deficient") != std::string::npos);
        const std::string msg = e.what();
        const std::string named = msg.substr(msg.rfind(": ") + 2);
        CHECK((named == "a" || named == "b" || named == "ab"));
    }
    CHECK_THROWS_AS(ols(X.topRows(3), X.col(1).head(3), SeType::ols()), DomainError);
}

TEST_CASE("coefficients match the normal equations") {
    Rng rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        const Eigen::MatrixXd X = random_design(200, 5, rng);
        Eigen::VectorXd y(200);
        for (Eigen::Index i = 0; i < 200; ++i) y(i) = X.row(i).sum() + rng.normal();
        const auto r = ols(X, y, SeType::ols());
        CHECK(max_abs(r.coef - oracle::ols_coefficients(X, y)) < 1e-10);
    }
}

TEST_CASE("newey-west covariance matches the pairwise sum on AR(1) errors") {
    Rng rng(4);
    const Eigen::Index n = 400;
    Eigen::MatrixXd X = random_design(n, 3, rng);
    for (Eigen::Index i = 1; i < n; ++i) X(i, 1) = 0.6 * X(i - 1, 1) + rng.normal();
    Eigen::VectorXd y(n);
    double u = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        u = 0.7 * u + rng.normal();
        y(i) = 0.5 + 0.3 * X(i, 1) - 0.2 * X(i, 2) + u;
    }
    for (int lags : {0, 1, 6, 12}) {
        const auto r = ols(X, y, SeType::newey_west(lags));
        const Eigen::MatrixXd expect = oracle::newey_west_cov(X, y, lags);
        CHECK(max_abs(r.cov - expect) < 1e-10 * max_abs(expect));
        CHECK(r.se_type == "nw(" + std::to_string(lags) + ")");
    }
    CHECK_THROWS_AS(ols(X, y, SeType::newey_west(-1)), DomainError);
}

TEST_CASE("heteroskedasticity-robust covariance") {
    Rng rng(5);
    const Eigen::Index n = 150;
    const Eigen::MatrixXd X = random_design(n, 3, rng);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = X(i, 1) + std::abs(X(i, 2)) * rng.normal();
    const auto hc1 = ols(X, y, SeType::hc1());
    const Eigen::MatrixXd expect = oracle::hc1_cov(X, y);
    CHECK(max_abs(hc1.cov - expect) < 1e-12 * max_abs(expect));
    const auto hc0 = ols(X, y, SeType::hc0());
    CHECK(max_abs(hc0.cov * (static_cast<double>(n) / (n - 3)) - hc1.cov) < 1e-12 * max_abs(expect));
    const auto nw0 = ols(X, y, SeType::newey_west(0));
    CHECK(max_abs(nw0.cov - hc0.cov) < 1e-12 * max_abs(expect));
}

TEST_CASE("clustered covariance") {
    Rng rng(6);
    const Eigen::Index n = 300;
    const Eigen::MatrixXd X = random_design(n, 3, rng);
    Eigen::VectorXd y(n);
    std::vector<std::int64_t> ga(static_cast<std::size_t>(n)), gb(ga.size()), single(ga.size()), single2(ga.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        ga[iu] = i % 17;
        gb[iu] = i % 11;
        single[iu] = i;
        single2[iu] = 1000 + i;
        y(i) = X(i, 1) + rng.normal() + 0.5 * std::sin(static_cast<double>(ga[iu]));
    }

    // one-way clusters against an explicit group sum with CR1 scaling
    const auto c1 = ols(X, y, SeType::cluster1(), {}, {ga, {}});
    const Eigen::VectorXd u = y - X * c1.coef;
    std::map<std::int64_t, Eigen::VectorXd> score;
    for (Eigen::Index i = 0; i < n; ++i) {
        auto [it, fresh] = score.try_emplace(ga[static_cast<std::size_t>(i)], Eigen::VectorXd::Zero(3));
        it->second += X.row(i).transpose() * u(i);
    }
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(3, 3);
    for (const auto& [g, s] : score) meat += s * s.transpose();
    const Eigen::MatrixXd bread = (X.transpose() * X).inverse();
    const double G = static_cast<double>(score.size());
    const Eigen::MatrixXd expect = G / (G - 1) * (n - 1.0) / (n - 3.0) * bread * meat * bread;
    CHECK(max_abs(c1.cov - expect) < 1e-12 * max_abs(expect));

    // two-way clustering on singleton keys collapses to HC1
    const auto c2 = ols(X, y, SeType::cluster2(), {}, {single, single2});
    const auto hc1 = ols(X, y, SeType::hc1());
    CHECK(max_abs(c2.cov - hc1.cov) < 1e-12 * max_abs(hc1.cov));

    // two-way on real keys is V_a + V_b - V_ab
    std::vector<std::int64_t> ab(ga.size());
    for (std::size_t i = 0; i < ab.size(); ++i) ab[i] = ga[i] * 100 + gb[i];
    const auto va = ols(X, y, SeType::cluster1(), {}, {ga, {}});
    const auto vb = ols(X, y, SeType::cluster1(), {}, {gb, {}});
    const auto vab = ols(X, y, SeType::cluster1(), {}, {ab, {}});
    const auto two = ols(X, y, SeType::cluster2(), {}, {ga, gb});
    CHECK(max_abs(two.cov - (va.cov + vb.cov - vab.cov)) < 1e-12 * max_abs(va.cov));

    CHECK_THROWS_AS(ols(X, y, SeType::cluster1()), DomainError);
    const std::vector<std::int64_t> one(ga.size(), 7);
    CHECK_THROWS_AS(ols(X, y, SeType::cluster1(), {}, {one, {}}), DomainError);
}

TEST_CASE("mean test uses the Bartlett long-run variance") {
    Rng rng(7);
    std::vector<double> x(240);
    double prev = 0.0;
    for (double& v : x) v = prev = 0.3 * prev + rng.normal(0.01, 0.05);
    for (int lags : {0, 3, 12}) {
        const auto m = mean_test(x, lags);
        CHECK(m.se == doctest::Approx(std::sqrt(oracle::mean_variance_bartlett(x, lags))).epsilon(1e-10));
        CHECK(m.t == doctest::Approx(m.mean / m.se).epsilon(1e-14));
        CHECK(m.n == 240);
    }
    CHECK_THROWS_AS(mean_test(std::vector<double>{1.0}, 1), DomainError);
}

TEST_CASE("one fixed effect equals OLS on manually demeaned data") {
    Rng rng(8);
    const Eigen::Index n = 500;
    PanelData d;
    d.y.resize(n);
    d.X.resize(n, 2);
    d.names = {"x1", "x2"};
    d.fixed_effects.emplace_back(static_cast<std::size_t>(n));
    std::vector<double> fe(25);
    for (double& v : fe) v = rng.normal(0.0, 2.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto g = static_cast<std::int64_t>(rng.below(25));
        d.fixed_effects[0][static_cast<std::size_t>(i)] = g;
        d.X(i, 0) = rng.normal() + 0.3 * fe[static_cast<std::size_t>(g)];
        d.X(i, 1) = rng.normal();
        d.y(i) = fe[static_cast<std::size_t>(g)] + 0.4 * d.X(i, 0) - 0.1 * d.X(i, 1) + rng.normal();
    }
    // group means by hand
    Eigen::MatrixXd all(n, 3);
    all << d.y, d.X;
    std::map<std::int64_t, Eigen::RowVectorXd> sum;
    std::map<std::int64_t, double> count;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto g = d.fixed_effects[0][static_cast<std::size_t>(i)];
        auto [it, fresh] = sum.try_emplace(g, Eigen::RowVectorXd::Zero(3));
        it->second += all.row(i);
        count[g] += 1.0;
    }
    Eigen::MatrixXd dm = all;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto g = d.fixed_effects[0][static_cast<std::size_t>(i)];
        dm.row(i) -= sum[g] / count[g];
    }
    const auto direct = ols(dm.rightCols(2), dm.col(0), SeType::ols());
    const auto panel = panel_regression(d);
    CHECK(max_abs(panel.coef - direct.coef) < 1e-12);
    CHECK(panel.absorbed == 25);

    Eigen::MatrixXd again = dm;
    CHECK(demean(again, d.fixed_effects) == 1);
    CHECK(max_abs(again - dm) < 1e-12);
}

TEST_CASE("two-way fixed effects recover a planted slope") {
    Rng rng(9);
    const Eigen::Index n = 10000;
    PanelData d;
    d.y.resize(n);
    d.X.resize(n, 1);
    d.names = {"x"};
    std::vector<std::int64_t> firm(static_cast<std::size_t>(n)), month(firm.size());
    std::vector<double> fa(400), fb(60);
    for (double& v : fa) v = rng.normal(0.0, 1.0);
    for (double& v : fb) v = rng.normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        firm[iu] = static_cast<std::int64_t>(rng.below(400));
        month[iu] = static_cast<std::int64_t>(rng.below(60));
        const double a = fa[static_cast<std::size_t>(firm[iu])], b = fb[static_cast<std::size_t>(month[iu])];
        d.X(i, 0) = rng.normal() + a - b;
        d.y(i) = a + b + 0.6 * d.X(i, 0) + rng.normal(0.0, 0.3);
    }
    d.fixed_effects = {firm, month};
    d.cluster_a = firm;
    d.cluster_b = month;
    const auto r = panel_regression(d);
    CHECK(std::abs(r.coef(0) - 0.6) < 0.01);
    CHECK(r.se_type == "cluster2");
    CHECK(r.se(0) > 0.0);

    DemeanOptions tight;
    tight.max_sweeps = 1;
    CHECK_THROWS_AS(panel_regression(d, tight), DomainError);

    PanelData singles = d;
    singles.fixed_effects = {std::vector<std::int64_t>(firm.size())};
    for (std::size_t i = 0; i < firm.size(); ++i) singles.fixed_effects[0][i] = static_cast<std::int64_t>(i);
    CHECK_THROWS_AS(panel_regression(singles), DomainError);
}

TEST_CASE("correlation matrices in percent") {
    Rng rng(10);
    std::vector<std::vector<double>> s(4, std::vector<double>(100));
    for (std::size_t t = 0; t < 100; ++t) {
        s[0][t] = rng.normal();
        s[1][t] = -s[0][t];
        s[2][t] = 0.5 * s[0][t] + rng.normal();
        s[3][t] = rng.normal();
    }
    const auto c = correlation_matrix(s);
    CHECK(c(0, 0) == doctest::Approx(100.0));
    CHECK(c(0, 1) == doctest::Approx(-100.0));
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            CHECK(std::abs(c(i, j) - oracle::correlation_pct(s[static_cast<std::size_t>(i)], s[static_cast<std::size_t>(j)])) <
                  1e-10);
            CHECK(c(i, j) == c(j, i));
        }
    }
    s[3].assign(100, 2.0);
    CHECK_THROWS_AS(correlation_matrix(s), DomainError);
    CHECK_THROWS_AS(correlation_matrix({{1.0, 2.0}, {1.0}}), DomainError);
}
