#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nalpha/common/error.hpp"
#include "nalpha/forecast/forecaster.hpp"
#include "nalpha/forecast/ridge.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace nalpha;
using namespace nalpha::forecast;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index n, Eigen::Index d, Rng& rng) {
    Eigen::MatrixXd X(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) X(i, j) = rng.normal();
    }
    return X;
}

Eigen::VectorXd random_vector(Eigen::Index n, Rng& rng, double sd = 1.0) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal(0.0, sd);
    return v;
}

double spearman(std::vector<double> a, std::vector<double> b) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
        std::vector<double> r(v.size());
        for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k);
        return r;
    };
    const auto ra = ranks(a), rb = ranks(b);
    return oracle::correlation_pct(ra, rb) / 100.0;
}

// One report per firm; each firm is flat except for a single jump the day
// after its report, so the 12-month label equals the planted value.
struct PlantedMarket {
    ingest::Dataset ds;
    std::vector<double> target;
};

PlantedMarket planted_dataset(std::size_t reports, int months, Rng& rng,
                              const std::function<double(const Eigen::VectorXd&, Rng&)>& label,
                              const std::function<int(std::size_t)>& month_of) {
    PlantedMarket pm;
    auto& ds = pm.ds;
    ds.calendar = testing::weekday_calendar(Date::from_ymd(2001, 1, 1), static_cast<std::size_t>(months) * 22 + 300);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < reports; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "F%05zu", i);
        ids.emplace_back(buf);
    }
    ds.market = ingest::MarketPanel(ids, ds.calendar);
    const std::size_t dim = 10;
    ingest::EmbeddingTable emb(dim, {"G"});
    struct Row {
        ingest::ReportRecord rec;
        std::vector<float> block;
        double y;
    };
    std::vector<Row> rows;
    for (std::size_t i = 0; i < reports; ++i) {
        Row r;
        const YearMonth m = ds.calendar.first_month() + month_of(i);
        const auto [lo, hi] = ds.calendar.month_range(m);
        const std::size_t day = lo + rng.below(hi - lo);
        r.rec.report_id = "R" + ids[i];
        r.rec.firm_id = ids[i];
        r.rec.analyst_id = "A";
        r.rec.broker_id = "B";
        r.rec.release_date = ds.calendar.day(day);
        r.rec.firm = i;
        r.rec.event_day = day;
        Eigen::VectorXd x(static_cast<Eigen::Index>(dim));
        for (std::size_t j = 0; j < dim; ++j) {
            const auto v = static_cast<float>(rng.normal());
            r.block.push_back(v);
            x(static_cast<Eigen::Index>(j)) = v;
        }
        r.y = label(x, rng);
        for (std::size_t d = 0; d < ds.calendar.size(); ++d) {
            ds.market.ret_ref(i, d) = d == day + 1 ? r.y : 0.0;
            ds.market.cap_ref(i, d) = 100.0;
        }
        rows.push_back(std::move(r));
    }
    ds.market.finalize(ds.calendar);
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return std::tie(a.rec.release_date, a.rec.report_id) < std::tie(b.rec.release_date, b.rec.report_id);
    });
    const std::vector<double> w = {1.0};
    for (auto& r : rows) {
        emb.append(r.rec.report_id, w, r.block);
        pm.target.push_back(r.y);
        ds.reports.push_back(r.rec);
        ds.matched.emplace_back();
    }
    ds.embeddings = std::move(emb);
    return pm;
}

}  // namespace

TEST_CASE("closed-form ridge matches gradient descent on the penalized objective") {
    Rng rng(2024);
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::MatrixXd X = random_matrix(50, 20, rng);
        const Eigen::VectorXd y = X * random_vector(20, rng, 0.5) + random_vector(50, rng, 0.3) +
                                  Eigen::VectorXd::Constant(50, 0.7);
        const double theta = std::pow(10.0, rng.uniform(-1.0, 1.5));
        const RidgeModel fit = fit_ridge(X, y, theta);
        const auto gd = oracle::ridge_gradient_descent(X, y, theta);
        worst = std::max({worst, (fit.beta - gd.beta).cwiseAbs().maxCoeff(), std::abs(fit.intercept - gd.intercept)});

        // stationarity of the objective at the closed-form solution
        const Eigen::VectorXd resid = y - X * fit.beta - Eigen::VectorXd::Constant(50, fit.intercept);
        const Eigen::VectorXd grad = -2.0 * X.transpose() * resid + 2.0 * theta * fit.beta;
        CHECK(grad.cwiseAbs().maxCoeff() < 1e-8 * 50);
        CHECK(std::abs(resid.sum()) < 1e-8 * 50);
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("ridge limits") {
    Rng rng(3);
    const Eigen::MatrixXd X = random_matrix(40, 6, rng);
    const Eigen::VectorXd y = random_vector(40, rng);
    const RidgeModel big = fit_ridge(X, y, 1e12);
    CHECK(big.beta.cwiseAbs().maxCoeff() < 1e-6);
    CHECK(std::abs(big.intercept - y.mean()) < 1e-6);

    const RidgeModel flat = fit_ridge(X, Eigen::VectorXd::Constant(40, 0.03), 1.0);
    CHECK(std::abs(flat.intercept - 0.03) < 1e-12);
    CHECK(flat.beta.cwiseAbs().maxCoeff() < 1e-12);

    Eigen::MatrixXd bad = X;
    bad(3, 2) = std::nan("");
    CHECK_THROWS_AS(fit_ridge(bad, y, 1.0), DomainError);
    CHECK_THROWS_AS(fit_ridge(X, y, 0.0), DomainError);
    CHECK_THROWS_AS(fit_ridge(X.topRows(1), y.head(1), 1.0), DomainError);
}

TEST_CASE("ridge from sufficient statistics equals the matrix fit") {
    Rng rng(4);
    const Eigen::MatrixXd X = random_matrix(90, 8, rng);
    const Eigen::VectorXd y = random_vector(90, rng);
    GramStats a(8), b(8);
    a.add_rows(X.topRows(40), y.head(40));
    b.add_rows(X.bottomRows(50), y.tail(50));
    GramStats all = a;
    all += b;
    for (bool standardize : {false, true}) {
        const RidgeModel m1 = fit_ridge(X, y, 2.5, standardize);
        const RidgeModel m2 = fit_ridge(all, 2.5, standardize);
        CHECK((m1.beta - m2.beta).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(std::abs(m1.intercept - m2.intercept) < 1e-10);
        double sse = 0.0;
        for (Eigen::Index i = 0; i < 90; ++i) sse += std::pow(y(i) - m1.predict(X.row(i).transpose()), 2);
        CHECK(std::abs(sum_squared_error(all, m2) - sse) < 1e-8);
    }
    GramStats back = all;
    back -= b;
    CHECK((fit_ridge(back, 1.0).beta - fit_ridge(X.topRows(40), y.head(40), 1.0).beta).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("fold bounds are contiguous and cover every row") {
    for (std::size_t n : {5u, 17u, 100u}) {
        for (int k : {2, 3, 5}) {
            const auto b = fold_bounds(n, k);
            REQUIRE(b.size() == static_cast<std::size_t>(k) + 1);
            CHECK(b.front() == 0);
            CHECK(b.back() == n);
            for (int i = 0; i < k; ++i) {
                const std::size_t len = b[static_cast<std::size_t>(i) + 1] - b[static_cast<std::size_t>(i)];
                CHECK(len >= n / static_cast<std::size_t>(k));
                CHECK(len <= n / static_cast<std::size_t>(k) + 1);
            }
        }
    }
}

TEST_CASE("penalty selection") {
    Rng rng(5);
    const Eigen::MatrixXd X = random_matrix(60, 5, rng);
    const Eigen::VectorXd beta = random_vector(5, rng);
    const std::vector<double> one = {3.0};
    CHECK(select_penalty(X, X * beta, one, 5) == 3.0);

    // exact linear target: compare the two CV errors by direct computation
    const std::vector<double> grid = {1e-4, 1e4};
    const Eigen::VectorXd y = X * beta;
    std::vector<double> mse;
    CHECK(select_penalty(X, y, grid, 5, 0, &mse) == 1e-4);
    const auto fb = fold_bounds(60, 5);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double total = 0.0;
        for (int k = 0; k < 5; ++k) {
            const auto lo = static_cast<Eigen::Index>(fb[static_cast<std::size_t>(k)]);
            const auto hi = static_cast<Eigen::Index>(fb[static_cast<std::size_t>(k) + 1]);
            Eigen::MatrixXd Xt(60 - (hi - lo), 5);
            Eigen::VectorXd yt(60 - (hi - lo));
            Eigen::Index r = 0;
            for (Eigen::Index i = 0; i < 60; ++i) {
                if (i >= lo && i < hi) continue;
                Xt.row(r) = X.row(i);
                yt(r++) = y(i);
            }
            const auto m = oracle::ridge_gradient_descent(Xt, yt, grid[g], 1e-10);
            double s = 0.0;
            for (Eigen::Index i = lo; i < hi; ++i) s += std::pow(y(i) - m.intercept - X.row(i).dot(m.beta), 2);
            total += s / static_cast<double>(hi - lo);
        }
        CHECK(mse[g] == doctest::Approx(total / 5.0).epsilon(1e-6));
    }
    CHECK(mse[0] < mse[1]);

    // ties go to the larger penalty
    const std::vector<double> tied_grid = {1.0, 2.0, 3.0};
    const std::vector<double> tied = {0.5, 0.4, 0.4};
    CHECK(pick_penalty(tied_grid, tied) == 2);

    CHECK_THROWS_AS(select_penalty(X.topRows(3), y.head(3), grid, 5), DomainError);
}

TEST_CASE("pure noise prefers heavy shrinkage") {
    Rng rng(6);
    const std::vector<double> grid = {1e-2, 1e6};
    int heavy = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const Eigen::MatrixXd X = random_matrix(80, 10, rng);
        const Eigen::VectorXd y = random_vector(80, rng);
        if (select_penalty(X, y, grid, 5) == 1e6) ++heavy;
    }
    CHECK(heavy >= 95);
}

TEST_CASE("penalty grids parse") {
    const auto g = parse_grid("log:1e-2:1e2:5");
    REQUIRE(g.size() == 5);
    CHECK(g[0] == doctest::Approx(1e-2));
    CHECK(g[2] == doctest::Approx(1.0));
    CHECK(g[4] == doctest::Approx(1e2));
    CHECK(parse_grid("0.1,1,10") == std::vector<double>{0.1, 1.0, 10.0});
    CHECK_THROWS_AS(parse_grid("log:1:0:3"), InputError);
    CHECK_THROWS_AS(parse_grid("1,-2"), InputError);
    CHECK_FALSE(default_grid().empty());
}

TEST_CASE("realized labels compound daily returns") {
    const auto cal = testing::weekday_calendar(Date::from_ymd(2010, 1, 4), 400);
    ingest::MarketPanel m({"A", "B", "C"}, cal);
    Rng rng(8);
    for (std::size_t d = 0; d < cal.size(); ++d) {
        m.ret_ref(0, d) = 0.0;
        m.ret_ref(1, d) = (d == 11 || d == 12) ? 0.10 : 0.0;
        m.ret_ref(2, d) = rng.uniform() < 0.05 ? std::nan("") : rng.normal(0.0, 0.02);
    }
    m.finalize(cal);
    LabelOptions o;
    CHECK(*realized_return(m, "A", 10, o) == 0.0);
    CHECK(*realized_return(m, "B", 10, o) == doctest::Approx(0.21).epsilon(1e-14));
    std::vector<double> daily(cal.size());
    for (std::size_t d = 0; d < cal.size(); ++d) daily[d] = m.ret(2, d);
    for (std::size_t start : {0u, 37u, 100u}) {
        const auto l = realized_label(m, 2, start, o);
        REQUIRE(l.has_value());
        CHECK(l->end_day == start + 252);
        CHECK(std::abs(l->value - oracle::compounded(daily, start, 252)) < 1e-12);
    }
    CHECK_FALSE(realized_return(m, "A", 200, o).has_value());
    CHECK_THROWS_AS(realized_return(m, "Z", 10, o), DomainError);
}

TEST_CASE("delisting policy") {
    const auto cal = testing::weekday_calendar(Date::from_ymd(2010, 1, 4), 400);
    ingest::MarketPanel m({"A"}, cal);
    for (std::size_t d = 0; d < 150; ++d) m.ret_ref(0, d) = 0.01;
    m.finalize(cal);
    LabelOptions o;
    CHECK_FALSE(realized_label(m, 0, 10, o).has_value());
    o.delist = DelistPolicy::CompoundAvailable;
    const auto l = realized_label(m, 0, 10, o);
    REQUIRE(l.has_value());
    CHECK(l->end_day == 149);
    CHECK(l->value == doctest::Approx(std::pow(1.01, 139) - 1.0));
}

TEST_CASE("planted linear signal is recovered out of sample") {
    Rng rng(9);
    auto pm = planted_dataset(
        1200, 48, rng, [](const Eigen::VectorXd& x, Rng& r) { return 0.5 * x(7) + r.normal(0.0, 0.02); },
        [](std::size_t i) { return static_cast<int>(i % 48); });
    ForecastOptions opt;
    opt.burn_in_months = 24;
    const auto run = expanding_forecasts(pm.ds, opt);
    REQUIRE(run.forecasts.size() > 300);
    std::vector<double> pred, real;
    for (const auto& f : run.forecasts) {
        pred.push_back(f.predicted_return);
        real.push_back(pm.target[f.report]);
        CHECK(std::abs(f.predicted_return - score_report(pm.ds.embeddings, f.report,
                                                         run.models[run.model_of_report[f.report]].model)) == 0.0);
    }
    CHECK(spearman(pred, real) > 0.5);

    const auto audit = audit_lookahead(pm.ds, run);
    CHECK(audit.violations == 0);
    CHECK(audit.rows_checked > 0);
    for (const auto& mm : run.models) {
        CHECK(mm.model.train_cutoff == mm.month - 1);
        CHECK(std::abs(mm.model.beta(7) - 0.5) < 0.05);
    }

    // dating rows by release lets unrealized labels in, which the audit flags
    opt.policy = LabelPolicy::ReleaseDated;
    const auto leaky = expanding_forecasts(pm.ds, opt);
    CHECK(audit_lookahead(pm.ds, leaky).violations > 0);
}

TEST_CASE("a single forecast month uses a single model") {
    Rng rng(10);
    auto pm = planted_dataset(
        400, 40, rng, [](const Eigen::VectorXd& x, Rng& r) { return 0.1 * x(0) + r.normal(0.0, 0.05); },
        [](std::size_t i) { return i < 300 ? static_cast<int>(i % 12) : 30; });
    ForecastOptions opt;
    opt.burn_in_months = 24;
    const auto run = expanding_forecasts(pm.ds, opt);
    REQUIRE(run.models.size() == 1);
    CHECK(run.models[0].month == pm.ds.calendar.first_month() + 30);
    CHECK(run.forecasts.size() == 100);
    for (const auto& f : run.forecasts) CHECK(run.model_of_report[f.report] == 0);
    CHECK(audit_lookahead(pm.ds, run).violations == 0);
}

TEST_CASE("forecasts csv round-trip") {
    testing::TempDir dir("fc");
    std::vector<ForecastRecord> fs(3);
    for (std::size_t i = 0; i < fs.size(); ++i) {
        fs[i].report_id = "R" + std::to_string(i);
        fs[i].firm_id = "F";
        fs[i].release_date = Date::from_ymd(2020, 1, 1) + static_cast<int>(i);
        fs[i].predicted_return = 0.1 / (1.0 + static_cast<double>(i));
    }
    write_forecasts_csv(dir / "f.csv", fs, "config_hash=abc");
    const auto back = read_forecasts_csv(dir / "f.csv");
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].report_id == fs[i].report_id);
        CHECK(back[i].release_date == fs[i].release_date);
        CHECK(back[i].predicted_return == fs[i].predicted_return);
    }
    CHECK(parse_label_policy("labels-realized") == LabelPolicy::LabelsRealized);
    CHECK_THROWS_AS(parse_label_policy("x"), InputError);
}
