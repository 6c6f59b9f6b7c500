#include "nalpha/portfolio/turnover.hpp"

#include <cmath>

#include "nalpha/common/error.hpp"

namespace nalpha::portfolio {

std::vector<Holding> drift_weights(const std::vector<Holding>& weights, std::span<const double> returns) {
    if (returns.size() != weights.size()) throw DomainError("drift: returns do not match holdings");
    double growth = 1.0;
    for (std::size_t i = 0; i < weights.size(); ++i) growth += weights[i].weight * returns[i];
    if (growth == 0.0 || !std::isfinite(growth)) throw DomainError("drift: portfolio value wiped out");
    std::vector<Holding> out(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        out[i] = {weights[i].firm, weights[i].weight * (1.0 + returns[i]) / growth};
    }
    return out;
}

double trade_size(const std::vector<Holding>& target, const std::vector<Holding>& drifted) {
    double l1 = 0.0;
    std::size_t a = 0, b = 0;
    while (a < target.size() || b < drifted.size()) {
        if (b >= drifted.size() || (a < target.size() && target[a].firm < drifted[b].firm)) {
            l1 += std::abs(target[a++].weight);
        } else if (a >= target.size() || drifted[b].firm < target[a].firm) {
            l1 += std::abs(drifted[b++].weight);
        } else {
            l1 += std::abs(target[a++].weight - drifted[b++].weight);
        }
    }
    return l1;
}

TurnoverSeries turnover(const StrategySeries& leg) {
    if (leg.weights.size() != leg.months.size() || leg.held_returns.size() != leg.months.size()) {
        throw DomainError("turnover: series lacks a weights history");
    }
    TurnoverSeries out;
    out.months = leg.months;
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t t = 0; t < leg.months.size(); ++t) {
        const bool cash = t == 0 || leg.months[t] - leg.months[t - 1] != 1;
        double x = 0.0;
        if (cash) {
            for (const auto& h : leg.weights[t]) x += std::abs(h.weight);
        } else {
            x = trade_size(leg.weights[t], drift_weights(leg.weights[t - 1], leg.held_returns[t - 1]));
            sum += x;
            ++counted;
        }
        out.turnover.push_back(x);
        out.from_cash.push_back(cash);
    }
    out.average = counted > 0 ? sum / static_cast<double>(counted) : 0.0;
    return out;
}

LongShortTurnover long_short_turnover(const StrategySeries& long_leg, const StrategySeries& short_leg) {
    if (long_leg.months != short_leg.months) throw DomainError("turnover: legs are not aligned");
    LongShortTurnover out;
    out.long_leg = turnover(long_leg);
    out.short_leg = turnover(short_leg);
    double mean = 0.0, sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t t = 0; t < out.long_leg.turnover.size(); ++t) {
        const double both = out.long_leg.turnover[t] + out.short_leg.turnover[t];
        out.traded.push_back(both);
        if (out.long_leg.from_cash[t]) continue;
        mean += both / 2.0;
        sum += both;
        ++counted;
    }
    if (counted > 0) {
        out.combined_mean = mean / static_cast<double>(counted);
        out.combined_sum = sum / static_cast<double>(counted);
    }
    return out;
}

StrategySeries net_returns(const StrategySeries& gross, std::span<const double> traded, double cost,
                           std::span<const double> rf) {
    if (cost < 0.0) throw DomainError("transaction cost must be >= 0");
    if (traded.size() != gross.size()) throw DomainError("net returns: turnover does not match the series");
    if (!rf.empty() && rf.size() != gross.size()) throw DomainError("net returns: rf does not match the series");
    StrategySeries out;
    out.label = gross.label;
    out.months = gross.months;
    out.returns.resize(gross.size());
    for (std::size_t t = 0; t < gross.size(); ++t) {
        if (cost == 0.0 || traded[t] == 0.0) {
            out.returns[t] = gross.returns[t];
            continue;
        }
        const double r = rf.empty() ? 0.0 : rf[t];
        out.returns[t] = (1.0 + r + gross.returns[t]) * (1.0 - cost * traded[t]) - (1.0 + r);
    }
    return out;
}

}  // namespace nalpha::portfolio
