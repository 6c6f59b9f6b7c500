#include <doctest.h>

#include <set>
#include <stdexcept>

#include "nalpha/common/calendar.hpp"
#include "nalpha/common/config.hpp"
#include "nalpha/common/csv.hpp"
#include "nalpha/common/error.hpp"
#include "nalpha/common/hash.hpp"
#include "nalpha/common/parallel.hpp"
#include "nalpha/common/random.hpp"
#include "support.hpp"

using namespace nalpha;

TEST_CASE("dates round-trip through ISO text") {
    const Date d = Date::parse("2004-02-29");
    CHECK(d.iso() == "2004-02-29");
    CHECK(d.month() == YearMonth::from_ym(2004, 2));
    CHECK(Date::from_ymd(1970, 1, 1).serial == 0);
    CHECK(Date::from_ymd(2024, 1, 1) - Date::from_ymd(2023, 1, 1) == 365);
    CHECK(Date::from_ymd(2024, 6, 3).iso_weekday() == 1);
    CHECK(Date::from_ymd(2024, 6, 9).iso_weekday() == 7);
    CHECK_THROWS_AS(Date::parse("2004-13-01"), InputError);
    CHECK_THROWS_AS(Date::parse("2004-1-01x"), InputError);
    CHECK_THROWS_AS(Date::parse("2003-02-29"), InputError);
}

TEST_CASE("year-months order and step across years") {
    const YearMonth m = YearMonth::parse("2019-12");
    CHECK(m.year() == 2019);
    CHECK(m.month() == 12);
    CHECK((m + 1).str() == "2020-01");
    CHECK((m + 1) - m == 1);
    CHECK(YearMonth::parse("2019-12-15") == m);
    CHECK(m.first_day() == Date::from_ymd(2019, 12, 1));
}

TEST_CASE("trading calendar lookups") {
    const auto cal = testing::weekday_calendar(Date::from_ymd(2021, 1, 1), 60);
    CHECK(cal.day(0) == Date::from_ymd(2021, 1, 1));
    CHECK(cal.day(1) == Date::from_ymd(2021, 1, 4));
    const Date saturday = Date::from_ymd(2021, 1, 2);
    CHECK_FALSE(cal.index_of(saturday).has_value());
    CHECK(*cal.at_or_after(saturday) == 1);
    CHECK(*cal.at_or_before(saturday) == 0);
    CHECK(cal.rank(saturday) == 1);
    CHECK(cal.first_month() == YearMonth::from_ym(2021, 1));
    const auto [b, e] = cal.month_range(YearMonth::from_ym(2021, 2));
    CHECK(cal.day(b) == Date::from_ymd(2021, 2, 1));
    CHECK(cal.day(e - 1) == Date::from_ymd(2021, 2, 26));
    CHECK(cal.month_index_of_day(b) == 1);
    CHECK_FALSE(cal.at_or_after(Date::from_ymd(2030, 1, 1)).has_value());
    CHECK_THROWS_AS(TradingCalendar({Date::from_ymd(2021, 1, 5), Date::from_ymd(2021, 1, 4)}), InputError);
}

TEST_CASE("number formatting is shortest round-trip") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 123456789.125, 0.0}) {
        CHECK(std::stod(csv::format(v)) == v);
    }
    CHECK(csv::format(0.5) == "0.5");
    CHECK(csv::format(std::optional<double>{}).empty());
    const auto parts = csv::split("a,,b");
    REQUIRE(parts.size() == 3);
    CHECK(parts[1].empty());
}

TEST_CASE("csv reader reports file and line on bad numbers") {
    testing::TempDir dir("csv");
    testing::write_text(dir / "t.csv", "# comment\nx,y\n1,2\n\n3,oops\n");
    csv::Reader r(dir / "t.csv");
    CHECK(r.require("y") == 1);
    CHECK_FALSE(r.column("z").has_value());
    REQUIRE(r.next());
    CHECK(r.number(0) == 1.0);
    REQUIRE(r.next());
    try {
        (void)r.number(1);
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("t.csv:5") != std::string::npos);
    }
    CHECK_FALSE(r.next());
}

TEST_CASE("toml documents become json") {
    const auto j = parse_toml("seed = 3\n[portfolio]\nlookbacks = [9, 12]\nweighting = \"value\"\n[[windows]]\nname = \"a\"\n");
    CHECK(j["seed"].get<int>() == 3);
    CHECK(j["portfolio"]["lookbacks"][1].get<int>() == 12);
    CHECK(j["windows"][0]["name"].get<std::string>() == "a");
    CHECK_THROWS_AS(parse_toml("x = = 1"), InputError);
}

TEST_CASE("fnv-1a digests are stable") {
    CHECK(hash_string("") == "cbf29ce484222325");
    CHECK(hash_string("a") == "af63dc4c8601ec8c");
    CHECK(hash_string("abc") != hash_string("acb"));
}

TEST_CASE("rng draws are reproducible and in range") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
    Rng r(7);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        sum += z;
        sq += z * z;
        const auto k = r.below(7);
        CHECK(k < 7);
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sq / n - 1.0) < 0.02);
    double p = 0.0;
    for (int i = 0; i < 20000; ++i) p += r.poisson(2.0);
    CHECK(std::abs(p / 20000 - 2.0) < 0.05);
}

TEST_CASE("parallel_for fills every slot and rethrows") {
    set_worker_threads(4);
    std::vector<int> out(1000, 0);
    parallel_for(out.size(), [&](std::size_t i) { out[i] = static_cast<int>(i) * 2; });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i) * 2);
    CHECK_THROWS_AS(parallel_for(100, [](std::size_t i) {
                        if (i == 37) throw DomainError("boom");
                    }),
                    DomainError);
    set_worker_threads(1);
}
