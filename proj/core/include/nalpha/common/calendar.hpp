#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nalpha {

struct YearMonth;

/// Calendar date stored as days since 1970-01-01.
struct Date {
    std::int32_t serial = 0;

    static Date from_ymd(int year, unsigned month, unsigned day);
    /// Parses YYYY-MM-DD; throws InputError on malformed text.
    static Date parse(std::string_view text);

    [[nodiscard]] std::string iso() const;
    [[nodiscard]] YearMonth month() const;
    /// 1 = Monday ... 7 = Sunday.
    [[nodiscard]] unsigned iso_weekday() const;

    Date operator+(int days) const { return Date{serial + days}; }
    Date operator-(int days) const { return Date{serial - days}; }
    int operator-(Date other) const { return serial - other.serial; }
    auto operator<=>(const Date&) const = default;
};

/// Calendar month stored as year*12 + (month-1).
struct YearMonth {
    std::int32_t value = 0;

    static YearMonth from_ym(int year, unsigned month) {
        return YearMonth{year * 12 + static_cast<std::int32_t>(month) - 1};
    }
    /// Parses YYYY-MM (a trailing -DD is accepted and ignored).
    static YearMonth parse(std::string_view text);

    [[nodiscard]] int year() const;
    [[nodiscard]] unsigned month() const;
    [[nodiscard]] std::string str() const;
    [[nodiscard]] Date first_day() const;

    YearMonth operator+(int n) const { return YearMonth{value + n}; }
    YearMonth operator-(int n) const { return YearMonth{value - n}; }
    int operator-(YearMonth other) const { return value - other.value; }
    YearMonth& operator++() { ++value; return *this; }
    auto operator<=>(const YearMonth&) const = default;
};

/// Sorted list of trading days with month lookup.
class TradingCalendar {
public:
    TradingCalendar() = default;
    /// Throws InputError unless `days` is strictly increasing.
    explicit TradingCalendar(std::vector<Date> days);

    [[nodiscard]] std::size_t size() const { return days_.size(); }
    [[nodiscard]] bool empty() const { return days_.empty(); }
    [[nodiscard]] Date day(std::size_t index) const { return days_[index]; }
    [[nodiscard]] const std::vector<Date>& days() const { return days_; }

    [[nodiscard]] std::optional<std::size_t> index_of(Date d) const;
    [[nodiscard]] std::optional<std::size_t> at_or_after(Date d) const;
    [[nodiscard]] std::optional<std::size_t> at_or_before(Date d) const;
    /// Position the date would take in the sorted day list (number of
    /// trading days strictly before `d`).
    [[nodiscard]] std::size_t rank(Date d) const;

    [[nodiscard]] YearMonth first_month() const { return months_.front(); }
    [[nodiscard]] YearMonth last_month() const { return months_.back(); }
    [[nodiscard]] const std::vector<YearMonth>& months() const { return months_; }
    /// Half-open trading-day index range covering `m`; empty when the month
    /// has no trading days or lies outside the calendar.
    [[nodiscard]] std::pair<std::size_t, std::size_t> month_range(YearMonth m) const;
    /// Index into months() of the month that contains the trading day.
    [[nodiscard]] std::size_t month_index_of_day(std::size_t day_index) const {
        return day_month_[day_index];
    }

private:
    std::vector<Date> days_;
    std::vector<YearMonth> months_;                    // contiguous span first..last
    std::vector<std::pair<std::size_t, std::size_t>> month_bounds_;
    std::vector<std::size_t> day_month_;
};

}  // namespace nalpha
