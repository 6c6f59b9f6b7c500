#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "nalpha/common/error.hpp"
#include "nalpha/common/hash.hpp"
#include "nalpha/econometrics/regression.hpp"
#include "nalpha/portfolio/backtest.hpp"
#include "nalpha/synth/generator.hpp"
#include "support.hpp"

using namespace nalpha;
using namespace nalpha::synth;

namespace {

const std::vector<std::string> kFiles = {"reports.csv", "embeddings.bin", "market.csv",   "chars.csv",   "factors.csv",
                                         "calendar.csv", "numerics.csv",  "earnings.csv", "manifest.json"};

SynthSpec tiny(std::uint64_t seed) {
    auto s = testing::small_spec(seed);
    s.n_firms = 40;
    s.n_months = 12;
    s.burn_in_months = 3;
    return s;
}

// H-L of value-weighted deciles sorted each month on the true latent score.
std::vector<double> truth_sorted_spread(const ingest::Dataset& ds, const GroundTruth& truth) {
    std::vector<portfolio::SignalObs> obs;
    for (YearMonth m = ds.calendar.first_month(); m <= ds.calendar.last_month(); ++m) {
        for (std::size_t f = 0; f < truth.z.size(); ++f) {
            obs.push_back({*ds.market.firm_index(truth.firm_ids[f]), m, truth.z[f]});
        }
    }
    portfolio::BacktestOptions opt;
    opt.lb = 1;
    return portfolio::strategy_returns(ds.market, ds.calendar, obs, opt).long_short.returns;
}

}  // namespace

TEST_CASE("the same seed writes byte-identical files") {
    testing::TempDir a("synth-a"), b("synth-b"), c("synth-c");
    generate(tiny(4), a.path());
    generate(tiny(4), b.path());
    generate(tiny(5), c.path());
    for (const auto& f : kFiles) {
        CHECK(hash_file(a / f) == hash_file(b / f));
    }
    CHECK(hash_file(a / "market.csv") != hash_file(c / "market.csv"));
}

TEST_CASE("spec parsing") {
    const auto s = spec_from_json(nlohmann::json::parse(R"({"n_firms": 50, "seed": 9, "start": "2001-02-05",
        "signal": [{"group": "Financial Analysis"}]})"));
    CHECK(s.n_firms == 50);
    CHECK(s.seed == 9);
    CHECK(s.start == Date::from_ymd(2001, 2, 5));
    REQUIRE(s.signal.size() == 1);
    CHECK(s.signal[0].loading == 12.0);
    CHECK(spec_from_json(spec_to_json(s)).n_firms == 50);
    CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse(R"({"n_firm": 50})")), InputError);
    CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse(R"({"n_firms": "many"})")), InputError);
    CHECK_THROWS_AS(spec_from_json(nlohmann::json::array()), InputError);

    auto bad = tiny(1);
    bad.n_firms = 10;
    CHECK_THROWS_AS(check_spec(bad), DomainError);
    bad = tiny(1);
    bad.signal = {{"Weather", 1.0}};
    CHECK_THROWS_AS(check_spec(bad), DomainError);
    bad = tiny(1);
    bad.spread_pct = 500.0;
    bad.sigma_daily = 1e-6;
    testing::TempDir dir("synth-bad");
    CHECK_THROWS_AS(generate(bad, dir.path()), DomainError);
}

TEST_CASE("manifest records the planted truth") {
    testing::TempDir dir("synth-man");
    const auto spec = tiny(6);
    const auto truth = generate(spec, dir.path());
    const auto m = nlohmann::json::parse(testing::read_text(dir / "manifest.json"));
    CHECK(m["reports"].get<std::size_t>() == truth.reports);
    CHECK(m["truth"]["planted_spread"].get<double>() == doctest::Approx(0.06));
    CHECK(m["truth"]["signal_groups"][0] == "Strategic Outlook");
    CHECK(m["truth"]["z"].size() == spec.n_firms);
    CHECK(m["spec"]["seed"].get<std::uint64_t>() == 6);
    for (const auto& f : kFiles) {
        if (f != "manifest.json") CHECK(m["files"][f].get<std::string>() == hash_file(dir / f));
    }
    // z is standardized
    double s = 0.0, ss = 0.0;
    for (double z : truth.z) {
        s += z;
        ss += z * z;
    }
    CHECK(std::abs(s / truth.z.size()) < 1e-9);
    CHECK(ss / truth.z.size() == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("a zero planted effect leaves the truth-sorted spread at noise") {
    testing::TempDir dir("synth-null"), planted_dir("synth-planted");
    auto spec = testing::small_spec(8);
    spec.n_firms = 100;
    spec.n_months = 60;
    spec.burn_in_months = 2;
    spec.spread_pct = 0.0;
    GroundTruth truth;
    const auto ds = testing::synth_dataset(spec, dir.path(), &truth);
    const auto hl = truth_sorted_spread(ds, truth);
    const auto t_null = econ::mean_test(hl, 6).t;
    CHECK(std::abs(t_null) < 3.0);
    CHECK(truth.drift_per_z == 0.0);

    spec.spread_pct = 6.0;
    GroundTruth planted;
    const auto pds = testing::synth_dataset(spec, planted_dir.path(), &planted);
    const auto phl = truth_sorted_spread(pds, planted);
    CHECK(econ::mean_test(phl, 6).t > 3.0);
    CHECK(planted.realized_spread > 0.03);
}
