#include "nalpha/common/calendar.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>

#include "nalpha/common/error.hpp"

namespace nalpha {

namespace {

int parse_int(std::string_view text, std::string_view whole) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw InputError("malformed date '" + std::string(whole) + "'");
    }
    return value;
}

}  // namespace

Date Date::from_ymd(int year, unsigned month, unsigned day) {
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                             std::chrono::day{day}};
    if (!ymd.ok()) {
        throw InputError("invalid calendar date " + std::to_string(year) + "-" +
                         std::to_string(month) + "-" + std::to_string(day));
    }
    return Date{static_cast<std::int32_t>(sys_days{ymd}.time_since_epoch().count())};
}

Date Date::parse(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw InputError("malformed date '" + std::string(text) + "'");
    }
    const int y = parse_int(text.substr(0, 4), text);
    const int m = parse_int(text.substr(5, 2), text);
    const int d = parse_int(text.substr(8, 2), text);
    return from_ymd(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

std::string Date::iso() const {
    using namespace std::chrono;
    const year_month_day ymd{sys_days{days{serial}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

YearMonth Date::month() const {
    using namespace std::chrono;
    const year_month_day ymd{sys_days{days{serial}}};
    return YearMonth::from_ym(static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()));
}

unsigned Date::iso_weekday() const {
    using namespace std::chrono;
    return weekday{sys_days{days{serial}}}.iso_encoding();
}

YearMonth YearMonth::parse(std::string_view text) {
    if (text.size() != 7 && text.size() != 10) {
        throw InputError("malformed month '" + std::string(text) + "'");
    }
    if (text[4] != '-') throw InputError("malformed month '" + std::string(text) + "'");
    const int y = parse_int(text.substr(0, 4), text);
    const int m = parse_int(text.substr(5, 2), text);
    if (m < 1 || m > 12) throw InputError("malformed month '" + std::string(text) + "'");
    return from_ym(y, static_cast<unsigned>(m));
}

int YearMonth::year() const {
    // floor division so negative serials behave
    return value >= 0 ? value / 12 : -((-value + 11) / 12);
}

unsigned YearMonth::month() const {
    return static_cast<unsigned>(value - year() * 12 + 1);
}

std::string YearMonth::str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u", year(), month());
    return buf;
}

Date YearMonth::first_day() const { return Date::from_ymd(year(), month(), 1); }

TradingCalendar::TradingCalendar(std::vector<Date> days) : days_(std::move(days)) {
    for (std::size_t i = 1; i < days_.size(); ++i) {
        if (!(days_[i - 1] < days_[i])) {
            throw InputError("trading calendar is not strictly increasing at " + days_[i].iso());
        }
    }
    if (days_.empty()) return;
    const YearMonth first = days_.front().month();
    const YearMonth last = days_.back().month();
    for (YearMonth m = first; m <= last; ++m) months_.push_back(m);
    month_bounds_.assign(months_.size(), {0, 0});
    day_month_.resize(days_.size());
    std::size_t i = 0;
    for (std::size_t k = 0; k < months_.size(); ++k) {
        const std::size_t begin = i;
        while (i < days_.size() && days_[i].month() == months_[k]) {
            day_month_[i] = k;
            ++i;
        }
        month_bounds_[k] = {begin, i};
    }
}

std::optional<std::size_t> TradingCalendar::index_of(Date d) const {
    auto it = std::lower_bound(days_.begin(), days_.end(), d);
    if (it == days_.end() || *it != d) return std::nullopt;
    return static_cast<std::size_t>(it - days_.begin());
}

std::optional<std::size_t> TradingCalendar::at_or_after(Date d) const {
    auto it = std::lower_bound(days_.begin(), days_.end(), d);
    if (it == days_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - days_.begin());
}

std::optional<std::size_t> TradingCalendar::at_or_before(Date d) const {
    auto it = std::upper_bound(days_.begin(), days_.end(), d);
    if (it == days_.begin()) return std::nullopt;
    return static_cast<std::size_t>(it - days_.begin()) - 1;
}

std::size_t TradingCalendar::rank(Date d) const {
    return static_cast<std::size_t>(std::lower_bound(days_.begin(), days_.end(), d) - days_.begin());
}

std::pair<std::size_t, std::size_t> TradingCalendar::month_range(YearMonth m) const {
    if (months_.empty() || m < months_.front() || m > months_.back()) return {0, 0};
    return month_bounds_[static_cast<std::size_t>(m - months_.front())];
}

}  // namespace nalpha
