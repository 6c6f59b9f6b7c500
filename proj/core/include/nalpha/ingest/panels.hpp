#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nalpha/common/calendar.hpp"

namespace nalpha::ingest {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool present(double v) { return !std::isnan(v); }

/// Monthly firm characteristics, in chars.csv column order.
enum class Characteristic : std::size_t { LogSize = 0, BookToMarket, Momentum, GrossProfit, Investment, IdioVol };
inline constexpr std::size_t kCharacteristicCount = 6;
std::string_view characteristic_name(Characteristic c);
/// Accepts the chars.csv column names (logsize, bm, mom12, gprof, inv, ivol).
std::optional<Characteristic> parse_characteristic(std::string_view name);

/// Daily returns and caps per firm on the trading calendar, plus derived
/// monthly returns, month-end caps and monthly characteristics. Firms are
/// indexed in ascending firm_id order, so index order is also the
/// deterministic tiebreak order used by the sorts.
class MarketPanel {
public:
    MarketPanel() = default;
    MarketPanel(std::vector<std::string> firm_ids, const TradingCalendar& calendar);

    [[nodiscard]] std::size_t firm_count() const { return firm_ids_.size(); }
    [[nodiscard]] std::size_t day_count() const { return days_; }
    [[nodiscard]] std::size_t month_count() const { return months_; }
    [[nodiscard]] const std::vector<std::string>& firm_ids() const { return firm_ids_; }
    [[nodiscard]] std::optional<std::size_t> firm_index(std::string_view id) const;

    [[nodiscard]] double ret(std::size_t f, std::size_t d) const { return ret_[f * days_ + d]; }
    [[nodiscard]] double cap(std::size_t f, std::size_t d) const { return cap_[f * days_ + d]; }
    [[nodiscard]] double close(std::size_t f, std::size_t d) const { return close_[f * days_ + d]; }
    double& ret_ref(std::size_t f, std::size_t d) { return ret_[f * days_ + d]; }
    double& cap_ref(std::size_t f, std::size_t d) { return cap_[f * days_ + d]; }
    double& close_ref(std::size_t f, std::size_t d) { return close_[f * days_ + d]; }

    /// Month index k refers to calendar.months()[k].
    [[nodiscard]] double monthly_ret(std::size_t f, std::size_t k) const { return mret_[f * months_ + k]; }
    [[nodiscard]] double month_end_cap(std::size_t f, std::size_t k) const { return mcap_[f * months_ + k]; }
    /// Last trading day index with a return for the firm (kNoDay if none).
    [[nodiscard]] std::size_t last_day(std::size_t f) const { return last_day_[f]; }
    [[nodiscard]] std::size_t first_day(std::size_t f) const { return first_day_[f]; }

    [[nodiscard]] double characteristic(std::size_t f, std::size_t k, Characteristic c) const {
        return chars_[(f * months_ + k) * kCharacteristicCount + static_cast<std::size_t>(c)];
    }
    void set_characteristic(std::size_t f, std::size_t k, Characteristic c, double v) {
        chars_[(f * months_ + k) * kCharacteristicCount + static_cast<std::size_t>(c)] = v;
    }

    /// Recomputes monthly aggregates from the daily arrays: compounded
    /// return over the days with data, and the last available cap.
    void finalize(const TradingCalendar& calendar);

    static constexpr std::size_t kNoDay = static_cast<std::size_t>(-1);

private:
    std::vector<std::string> firm_ids_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t days_ = 0;
    std::size_t months_ = 0;
    std::vector<double> ret_, cap_, close_;
    std::vector<double> mret_, mcap_;
    std::vector<double> chars_;
    std::vector<std::size_t> first_day_, last_day_;
};

/// Monthly factor excess returns and the risk-free rate.
class FactorPanel {
public:
    FactorPanel() = default;
    /// Throws InputError when months are not contiguous or names repeat.
    FactorPanel(std::vector<YearMonth> months, std::vector<double> rf, std::vector<std::string> names,
                std::vector<std::vector<double>> columns);

    [[nodiscard]] const std::vector<YearMonth>& months() const { return months_; }
    [[nodiscard]] const std::vector<std::string>& names() const { return names_; }
    [[nodiscard]] std::optional<std::size_t> month_index(YearMonth m) const;
    [[nodiscard]] std::optional<std::size_t> factor_index(std::string_view name) const;
    [[nodiscard]] double rf(std::size_t k) const { return rf_[k]; }
    [[nodiscard]] double value(std::size_t k, std::size_t factor) const { return columns_[factor][k]; }
    [[nodiscard]] bool empty() const { return months_.empty(); }

private:
    std::vector<YearMonth> months_;
    std::vector<double> rf_;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> columns_;
};

}  // namespace nalpha::ingest
