#include <doctest.h>

#include <fstream>
#include <sstream>

#include "nalpha/common/csv.hpp"
#include "nalpha/common/error.hpp"
#include "nalpha/ingest/dataset.hpp"
#include "nalpha/pipeline/run.hpp"
#include "support.hpp"

using namespace nalpha;
using namespace nalpha::ingest;

namespace {

EmbeddingTable random_table(std::size_t reports, std::size_t dim, std::size_t groups, Rng& rng) {
    std::vector<std::string> names;
    for (std::size_t g = 0; g < groups; ++g) names.push_back("G" + std::to_string(g));
    EmbeddingTable t(dim, names);
    for (std::size_t i = 0; i < reports; ++i) {
        std::vector<double> w(groups);
        double s = 0.0;
        for (double& x : w) s += (x = rng.uniform(0.1, 1.0));
        for (double& x : w) x /= s;
        std::vector<float> b(groups * dim);
        for (float& x : b) x = static_cast<float>(rng.normal());
        t.append("R" + std::to_string(i), w, b);
    }
    return t;
}

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        for (auto v : csv::split(line)) f.emplace_back(v);
        rows.push_back(std::move(f));
    }
    return rows;
}

void write_rows(const std::filesystem::path& p, const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(p);
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
        out << '\n';
    }
}

}  // namespace

TEST_CASE("embedding tables round-trip through the binary format") {
    Rng rng(11);
    const auto t = random_table(25, 8, 5, rng);
    testing::TempDir dir("emb");
    write_embeddings(dir / "e.bin", t);
    const auto back = read_embeddings(dir / "e.bin");
    CHECK(back == t);
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(t.weight_sum_error(i) < 1e-12);
        CHECK(t.reconstruction_error(i) < 1e-6);
        const auto rep = t.report(i);
        CHECK((rep.full_vector() - t.full_vector(i)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("corrupt embedding files are rejected") {
    Rng rng(12);
    const auto t = random_table(3, 4, 2, rng);
    testing::TempDir dir("embbad");
    write_embeddings(dir / "e.bin", t);
    std::string bytes = testing::read_text(dir / "e.bin");

    testing::write_text(dir / "magic.bin", "XXXX" + bytes.substr(4));
    CHECK_THROWS_AS(read_embeddings(dir / "magic.bin"), InputError);
    testing::write_text(dir / "short.bin", bytes.substr(0, bytes.size() - 7));
    CHECK_THROWS_AS(read_embeddings(dir / "short.bin"), InputError);

    EmbeddingTable dup(4, {"G0", "G1"});
    const std::vector<double> w = {0.5, 0.5};
    const std::vector<float> b(8, 1.0f);
    dup.append("R1", w, b);
    dup.append("R1", w, b);
    write_embeddings(dir / "dup.bin", dup);
    CHECK_THROWS_AS(read_embeddings(dir / "dup.bin"), InputError);
}

TEST_CASE("numeric records match by closest trading day, earlier on ties") {
    const auto cal = testing::weekday_calendar(Date::from_ymd(2022, 3, 1), 40);
    ReportRecord rep;
    rep.analyst_id = "A";
    rep.firm_id = "F";
    rep.release_date = cal.day(20);
    auto rec = [&](std::size_t day) {
        NumericRecord r;
        r.analyst_id = "A";
        r.firm_id = "F";
        r.date = cal.day(day);
        r.recommendation = static_cast<int>(day);
        return r;
    };
    auto pick = [&](std::vector<NumericRecord> records) -> std::optional<Date> {
        NumericRevisionHistory h(std::move(records));
        const auto m = match_numeric_records(rep, h, 2, WindowUnit::TradingDays, cal);
        if (m.missing()) return std::nullopt;
        return h.records()[*m.record].date;
    };
    CHECK(pick({rec(19), rec(22)}) == cal.day(19));
    CHECK(pick({rec(22), rec(18)}) == cal.day(18));
    CHECK_FALSE(pick({rec(17), rec(23)}).has_value());
    CHECK(pick({rec(20), rec(21)}) == cal.day(20));

    // another analyst's record never matches
    auto other = rec(20);
    other.analyst_id = "B";
    CHECK_FALSE(pick({other}).has_value());

    // calendar-day windows count weekends
    NumericRevisionHistory h({rec(19)});
    rep.release_date = cal.day(20);
    const int gap = cal.day(20) - cal.day(19);
    CHECK(match_numeric_records(rep, h, gap, WindowUnit::CalendarDays, cal).record.has_value());
    CHECK(match_numeric_records(rep, h, gap - 1, WindowUnit::CalendarDays, cal).missing());
}

TEST_CASE("synthetic inputs load with no rejects and survive a rewrite") {
    testing::TempDir dir("ingest");
    auto spec = testing::small_spec(5);
    spec.n_firms = 30;
    spec.n_months = 6;
    spec.burn_in_months = 3;
    synth::GroundTruth truth;
    const auto ds = testing::synth_dataset(spec, dir.path(), &truth);
    CHECK(ds.rejects.empty());
    CHECK(ds.reports.size() == truth.reports);
    CHECK(ds.reports.size() == ds.embeddings.size());
    CHECK(ds.market.firm_count() == 30);
    for (std::size_t i = 0; i < ds.reports.size(); ++i) {
        CHECK(ds.embeddings.id(i) == ds.reports[i].report_id);
        if (i > 0) {
            const auto& a = ds.reports[i - 1];
            const auto& b = ds.reports[i];
            CHECK(std::tie(a.release_date, a.report_id) < std::tie(b.release_date, b.report_id));
        }
    }

    // writing the loaded content back and reloading gives the same dataset
    auto paths = pipeline::synth_paths(dir.path());
    testing::TempDir copy("ingest-copy");
    write_reports_csv(copy / "reports.csv", ds.reports);
    write_embeddings(copy / "embeddings.bin", ds.embeddings);
    write_market_csv(copy / "market.csv", ds.market, ds.calendar, true);
    write_chars_csv(copy / "chars.csv", ds.market, ds.calendar);
    write_factors_csv(copy / "factors.csv", ds.factors);
    write_calendar_csv(copy / "calendar.csv", ds.calendar);
    write_numerics_csv(copy / "numerics.csv", ds.numerics.records());
    write_earnings_csv(copy / "earnings.csv", ds.earnings);
    const auto again = load_dataset(pipeline::synth_paths(copy.path()), {});
    CHECK(again.fingerprint() == ds.fingerprint());
    CHECK(load_dataset(paths, {}).fingerprint() == ds.fingerprint());
}

TEST_CASE("reports without market data are rejected, duplicates are fatal") {
    testing::TempDir dir("reject");
    auto spec = testing::small_spec(6);
    spec.n_firms = 20;
    spec.n_months = 4;
    spec.burn_in_months = 2;
    synth::generate(spec, dir.path());
    const auto paths = pipeline::synth_paths(dir.path());
    auto rows = read_rows(paths.reports);
    REQUIRE(rows.size() > 3);
    CHECK(rows[0][1] == "firm_id");
    const std::string victim = rows[2][0];
    rows[2][1] = "ZZZZ";
    write_rows(paths.reports, rows);
    const auto ds = load_dataset(paths, {});
    CHECK(ds.reports.size() == rows.size() - 2);
    REQUIRE(ds.rejects.size() == 1);
    CHECK(ds.rejects[0].report_id == victim);
    CHECK(ds.rejects[0].reason == "no market data");

    rows[3][0] = rows[1][0];
    write_rows(paths.reports, rows);
    CHECK_THROWS_AS(load_dataset(paths, {}), InputError);
}

TEST_CASE("schema errors name the file and line") {
    testing::TempDir dir("schema");
    auto spec = testing::small_spec(7);
    spec.n_firms = 20;
    spec.n_months = 3;
    spec.burn_in_months = 2;
    synth::generate(spec, dir.path());
    const auto paths = pipeline::synth_paths(dir.path());
    auto rows = read_rows(paths.market);
    rows[4][2] = "abc";
    write_rows(paths.market, rows);
    try {
        (void)load_dataset(paths, {});
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("market.csv:5") != std::string::npos);
    }
}

TEST_CASE("sample range filters reports") {
    testing::TempDir dir("range");
    auto spec = testing::small_spec(8);
    spec.n_firms = 20;
    spec.n_months = 4;
    spec.burn_in_months = 2;
    synth::generate(spec, dir.path());
    IngestOptions opt;
    opt.sample_start = Date::from_ymd(2000, 3, 1);
    const auto ds = load_dataset(pipeline::synth_paths(dir.path()), opt);
    CHECK_FALSE(ds.reports.empty());
    for (const auto& r : ds.reports) CHECK(r.release_date >= *opt.sample_start);
    CHECK(ds.rejects.size() + ds.reports.size() == ds.input_report_count);
    for (const auto& r : ds.rejects) CHECK(r.reason == "outside sample range");
}
