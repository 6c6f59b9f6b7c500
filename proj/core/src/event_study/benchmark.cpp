#include "nalpha/event_study/benchmark.hpp"

#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

#include "nalpha/common/error.hpp"
#include "nalpha/portfolio/signal.hpp"

namespace nalpha::event {

using ingest::Characteristic;
using ingest::present;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Splits `members` into bins by ascending key (ties by firm order);
// returns the bin (0-based) per member.
std::vector<int> sort_into_bins(const std::vector<std::size_t>& members, const std::vector<double>& key, int bins) {
    std::vector<double> k(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) k[i] = key[members[i]];
    const auto b = portfolio::rank_bins(k, static_cast<std::size_t>(bins));
    std::vector<int> out(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) out[i] = static_cast<int>(b[i]) - 1;
    return out;
}

}  // namespace

double BenchmarkAssignment::day_weight(const ingest::MarketPanel& market, std::size_t f, std::size_t d) {
    const double r = market.ret(f, d);
    if (!present(r)) return kNaN;
    if (d > 0) {
        const double prev = market.cap(f, d - 1);
        if (present(prev) && prev > 0.0) return prev;
    }
    const double cap = market.cap(f, d);
    if (present(cap) && cap > 0.0) return cap / (1.0 + r);
    return kNaN;
}

BenchmarkAssignment::BenchmarkAssignment(const ingest::MarketPanel& market, const TradingCalendar& calendar, int bins)
    : bins_(bins), months_(market.month_count()), days_(market.day_count()) {
    if (bins < 2) throw DomainError("benchmark sorts need at least two bins per dimension");
    const std::size_t F = market.firm_count();
    cells_.assign(F * months_, kUnassigned);
    day_month_.resize(days_);
    for (std::size_t d = 0; d < days_; ++d) day_month_[d] = calendar.month_index_of_day(d);

    std::vector<double> size(F), bm(F), mom(F);
    for (std::size_t k = 0; k < months_; ++k) {
        std::vector<std::size_t> universe;
        for (std::size_t f = 0; f < F; ++f) {
            size[f] = market.characteristic(f, k, Characteristic::LogSize);
            bm[f] = market.characteristic(f, k, Characteristic::BookToMarket);
            mom[f] = market.characteristic(f, k, Characteristic::Momentum);
            if (present(size[f]) && present(bm[f]) && present(mom[f])) universe.push_back(f);
        }
        if (universe.empty()) continue;
        const auto sb = sort_into_bins(universe, size, bins);
        for (int s = 0; s < bins; ++s) {
            std::vector<std::size_t> in_s;
            for (std::size_t i = 0; i < universe.size(); ++i) {
                if (sb[i] == s) in_s.push_back(universe[i]);
            }
            if (in_s.empty()) continue;
            const auto bb = sort_into_bins(in_s, bm, bins);
            for (int b = 0; b < bins; ++b) {
                std::vector<std::size_t> in_sb;
                for (std::size_t i = 0; i < in_s.size(); ++i) {
                    if (bb[i] == b) in_sb.push_back(in_s[i]);
                }
                if (in_sb.empty()) continue;
                const auto mb = sort_into_bins(in_sb, mom, bins);
                for (std::size_t i = 0; i < in_sb.size(); ++i) {
                    cells_[in_sb[i] * months_ + k] = (s * bins + b) * bins + mb[i];
                }
            }
        }
    }

    const auto C = static_cast<std::size_t>(cell_count());
    std::vector<double> num(C * days_, 0.0), den(C * days_, 0.0);
    std::vector<std::size_t> members(C * days_, 0);
    universe_.assign(days_, kNaN);
    std::vector<double> unum(days_, 0.0), uden(days_, 0.0);
    for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t d = 0; d < days_; ++d) {
            const double w = day_weight(market, f, d);
            const int c = cells_[f * months_ + day_month_[d]];
            if (c != kUnassigned) ++members[static_cast<std::size_t>(c) * days_ + d];
            if (!present(w)) continue;
            const double r = market.ret(f, d);
            unum[d] += w * r;
            uden[d] += w;
            if (c == kUnassigned) continue;
            num[static_cast<std::size_t>(c) * days_ + d] += w * r;
            den[static_cast<std::size_t>(c) * days_ + d] += w;
        }
    }
    for (std::size_t d = 0; d < days_; ++d) {
        if (uden[d] > 0.0) universe_[d] = unum[d] / uden[d];
    }
    raw_.assign(C * days_, kNaN);
    for (std::size_t i = 0; i < C * days_; ++i) {
        if (den[i] > 0.0) raw_[i] = num[i] / den[i];
    }
    resolved_ = raw_;
    for (std::size_t c = 0; c < C; ++c) {
        const int s = static_cast<int>(c) / (bins * bins);
        const int rest = static_cast<int>(c) % (bins * bins);
        for (std::size_t d = 0; d < days_; ++d) {
            if (present(raw_[c * days_ + d])) continue;
            double v = kNaN;
            for (int step = 1; step < bins && !present(v); ++step) {
                for (int s2 : {s - step, s + step}) {
                    if (s2 < 0 || s2 >= bins) continue;
                    const double cand = raw_[static_cast<std::size_t>(s2 * bins * bins + rest) * days_ + d];
                    if (present(cand)) {
                        v = cand;
                        break;
                    }
                }
            }
            if (!present(v)) v = universe_[d];
            resolved_[c * days_ + d] = v;
            fallbacks_ += members[c * days_ + d];
        }
    }
    if (fallbacks_ > 0) {
        spdlog::info("benchmarks: {} member-days used a neighbouring cell along size", fallbacks_);
    }
}

double BenchmarkAssignment::benchmark_return(std::size_t firm, std::size_t day) const {
    const int c = cells_[firm * months_ + day_month_[day]];
    if (c == kUnassigned) return universe_[day];
    return resolved_[static_cast<std::size_t>(c) * days_ + day];
}

BenchmarkAssignment assign_benchmarks(const ingest::MarketPanel& market, const TradingCalendar& calendar, int bins) {
    return BenchmarkAssignment(market, calendar, bins);
}

}  // namespace nalpha::event
