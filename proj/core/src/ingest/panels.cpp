#include "nalpha/ingest/panels.hpp"

#include <algorithm>
#include <unordered_set>

#include "nalpha/common/error.hpp"

namespace nalpha::ingest {

namespace {
constexpr std::string_view kCharNames[kCharacteristicCount] = {"logsize", "bm", "mom12", "gprof", "inv", "ivol"};
}

std::string_view characteristic_name(Characteristic c) { return kCharNames[static_cast<std::size_t>(c)]; }

std::optional<Characteristic> parse_characteristic(std::string_view name) {
    for (std::size_t i = 0; i < kCharacteristicCount; ++i) {
        if (kCharNames[i] == name) return static_cast<Characteristic>(i);
    }
    return std::nullopt;
}

MarketPanel::MarketPanel(std::vector<std::string> firm_ids, const TradingCalendar& calendar)
    : firm_ids_(std::move(firm_ids)), days_(calendar.size()), months_(calendar.months().size()) {
    if (!std::is_sorted(firm_ids_.begin(), firm_ids_.end())) {
        throw InputError("market panel firm ids must be sorted");
    }
    for (std::size_t i = 0; i < firm_ids_.size(); ++i) {
        if (!index_.emplace(firm_ids_[i], i).second) throw InputError("duplicate firm id " + firm_ids_[i]);
    }
    const std::size_t F = firm_ids_.size();
    ret_.assign(F * days_, kMissing);
    cap_.assign(F * days_, kMissing);
    close_.assign(F * days_, kMissing);
    mret_.assign(F * months_, kMissing);
    mcap_.assign(F * months_, kMissing);
    chars_.assign(F * months_ * kCharacteristicCount, kMissing);
    first_day_.assign(F, kNoDay);
    last_day_.assign(F, kNoDay);
}

std::optional<std::size_t> MarketPanel::firm_index(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void MarketPanel::finalize(const TradingCalendar& calendar) {
    for (std::size_t f = 0; f < firm_ids_.size(); ++f) {
        first_day_[f] = kNoDay;
        last_day_[f] = kNoDay;
        for (std::size_t d = 0; d < days_; ++d) {
            if (present(ret(f, d))) {
                if (first_day_[f] == kNoDay) first_day_[f] = d;
                last_day_[f] = d;
            }
        }
        for (std::size_t k = 0; k < months_; ++k) {
            const auto [b, e] = calendar.month_range(calendar.months()[k]);
            double growth = 1.0;
            bool any = false;
            double last_cap = kMissing;
            for (std::size_t d = b; d < e; ++d) {
                const double r = ret(f, d);
                if (present(r)) {
                    growth *= 1.0 + r;
                    any = true;
                }
                if (present(cap(f, d))) last_cap = cap(f, d);
            }
            mret_[f * months_ + k] = any ? growth - 1.0 : kMissing;
            mcap_[f * months_ + k] = last_cap;
        }
    }
}

FactorPanel::FactorPanel(std::vector<YearMonth> months, std::vector<double> rf, std::vector<std::string> names,
                         std::vector<std::vector<double>> columns)
    : months_(std::move(months)), rf_(std::move(rf)), names_(std::move(names)), columns_(std::move(columns)) {
    for (std::size_t i = 1; i < months_.size(); ++i) {
        if (months_[i] - months_[i - 1] != 1) {
            throw InputError("factor months are not contiguous at " + months_[i].str());
        }
    }
    std::unordered_set<std::string> seen;
    for (const auto& n : names_) {
        if (!seen.insert(n).second) throw InputError("duplicate factor name '" + n + "'");
    }
    if (rf_.size() != months_.size() || columns_.size() != names_.size()) {
        throw InputError("factor panel shape mismatch");
    }
    for (const auto& c : columns_) {
        if (c.size() != months_.size()) throw InputError("factor panel shape mismatch");
    }
}

std::optional<std::size_t> FactorPanel::month_index(YearMonth m) const {
    if (months_.empty() || m < months_.front() || m > months_.back()) return std::nullopt;
    return static_cast<std::size_t>(m - months_.front());
}

std::optional<std::size_t> FactorPanel::factor_index(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return i;
    }
    return std::nullopt;
}

}  // namespace nalpha::ingest
