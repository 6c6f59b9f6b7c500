#include "nalpha/portfolio/performance.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "nalpha/common/error.hpp"
#include "nalpha/econometrics/regression.hpp"

namespace nalpha::portfolio {

namespace {

std::string canonical(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    if (out == "MKTRF" || out == "MARKET" || out == "MKTEXCESS") return "MKT";
    if (out == "UMD" || out == "WML") return "MOM";
    return out;
}

double sample_sd(std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    double m = 0.0;
    for (double v : x) m += v;
    m /= n;
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / (n - 1.0));
}

double mean_of(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m += v;
    return m / static_cast<double>(x.size());
}

}  // namespace

FactorModel parse_factor_model(std::string_view text) {
    FactorModel m;
    m.name = std::string(text);
    if (text == "none") return m;
    if (text == "capm") m.factors = {"MKT"};
    else if (text == "ff3") m.factors = {"MKT", "SMB", "HML"};
    else if (text == "ff5") m.factors = {"MKT", "SMB", "HML", "RMW", "CMA"};
    else if (text == "ff6") m.factors = {"MKT", "SMB", "HML", "RMW", "CMA", "MOM"};
    else if (text.starts_with("cols:")) {
        std::string_view rest = text.substr(5);
        std::size_t pos = 0;
        while (true) {
            const auto c = rest.find('+', pos);
            const auto part = rest.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos);
            if (part.empty()) throw InputError("empty factor name in model '" + std::string(text) + "'");
            m.factors.emplace_back(part);
            if (c == std::string_view::npos) break;
            pos = c + 1;
        }
    } else {
        throw InputError("unknown factor model '" + std::string(text) + "' (capm|ff3|ff5|ff6|none|cols:A+B)");
    }
    return m;
}

std::size_t resolve_factor(const ingest::FactorPanel& panel, const std::string& name) {
    if (auto exact = panel.factor_index(name)) return *exact;
    const std::string want = canonical(name);
    for (std::size_t i = 0; i < panel.names().size(); ++i) {
        if (canonical(panel.names()[i]) == want) return i;
    }
    throw InputError("factor '" + name + "' is not a column of the factor file");
}

std::vector<double> aligned_rf(const std::vector<YearMonth>& months, const ingest::FactorPanel& factors) {
    std::vector<double> rf;
    rf.reserve(months.size());
    for (YearMonth m : months) {
        const auto k = factors.month_index(m);
        if (!k) throw DomainError("factor panel does not cover " + m.str());
        rf.push_back(factors.rf(*k));
    }
    return rf;
}

PerfStats perf_stats(const StrategySeries& series, const ingest::FactorPanel& factors, const FactorModel& model,
                     bool excess, int lags) {
    const std::size_t n = series.size();
    if (n < 24) throw DomainError("performance statistics need at least 24 months (" + series.label + " has " +
                                  std::to_string(n) + ")");
    std::vector<double> y(series.returns);
    if (excess || !model.factors.empty()) {
        const auto rf = aligned_rf(series.months, factors);
        if (excess) {
            for (std::size_t t = 0; t < n; ++t) y[t] -= rf[t];
        }
    }
    PerfStats p;
    p.months = n;
    p.mean = 100.0 * mean_of(y);
    p.sd = 100.0 * sample_sd(y);
    p.sharpe = p.sd > 0.0 ? annualized_sharpe(p.mean, p.sd) : std::nan("");

    std::vector<std::size_t> cols;
    for (const auto& f : model.factors) cols.push_back(resolve_factor(factors, f));
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size() + 1));
    Eigen::VectorXd Y(static_cast<Eigen::Index>(n));
    for (std::size_t t = 0; t < n; ++t) {
        const auto k = factors.month_index(series.months[t]);
        if (!k) throw DomainError("factor panel does not cover " + series.months[t].str());
        const auto r = static_cast<Eigen::Index>(t);
        X(r, 0) = 1.0;
        for (std::size_t j = 0; j < cols.size(); ++j) X(r, static_cast<Eigen::Index>(j + 1)) = factors.value(*k, cols[j]);
        Y(r) = y[t];
    }
    std::vector<std::string> names{"alpha"};
    names.insert(names.end(), model.factors.begin(), model.factors.end());
    const auto fit = econ::ols(X, Y, econ::SeType::newey_west(lags), names);
    p.alpha = 100.0 * fit.coef(0);
    p.alpha_t = fit.t(0);
    p.r2 = fit.r2;
    p.factor_names = model.factors;
    for (std::size_t j = 0; j < cols.size(); ++j) {
        p.loadings.push_back(fit.coef(static_cast<Eigen::Index>(j + 1)));
        p.loading_t.push_back(fit.t(static_cast<Eigen::Index>(j + 1)));
    }
    return p;
}

StrategySeries combine_strategies(const std::vector<StrategySeries>& parts, const std::string& label) {
    if (parts.empty()) throw DomainError("combine: no series");
    StrategySeries out;
    out.label = label;
    out.months = parts[0].months;
    out.returns.assign(out.months.size(), 0.0);
    for (const auto& p : parts) {
        if (p.months != out.months) throw DomainError("combine: series months are not aligned (" + p.label + ")");
        for (std::size_t t = 0; t < p.size(); ++t) out.returns[t] += p.returns[t];
    }
    for (double& r : out.returns) r /= static_cast<double>(parts.size());
    return out;
}

InformationRatio information_ratio(const StrategySeries& combined, const StrategySeries& benchmark, int lags) {
    if (combined.months != benchmark.months) throw DomainError("information ratio: series are not aligned");
    const std::size_t n = combined.size();
    if (n < 24) throw DomainError("information ratio needs at least 24 months");
    std::vector<double> d(n);
    for (std::size_t t = 0; t < n; ++t) d[t] = combined.returns[t] - benchmark.returns[t];
    const double sd = sample_sd(d);
    if (!(sd > 1e-15)) throw DomainError("information ratio: return difference has zero variance");
    InformationRatio out;
    out.months = n;
    out.mean_diff = 100.0 * mean_of(d);
    out.sd_diff = 100.0 * sd;
    out.ir = annualized_sharpe(out.mean_diff, out.sd_diff);
    out.t = econ::mean_test(d, lags).t;
    return out;
}

StrategySeries window(const StrategySeries& s, YearMonth start, YearMonth end) {
    StrategySeries out;
    out.label = s.label;
    for (std::size_t t = 0; t < s.size(); ++t) {
        if (s.months[t] < start || s.months[t] > end) continue;
        out.months.push_back(s.months[t]);
        out.returns.push_back(s.returns[t]);
        if (t < s.weights.size()) out.weights.push_back(s.weights[t]);
        if (t < s.held_returns.size()) out.held_returns.push_back(s.held_returns[t]);
    }
    return out;
}

}  // namespace nalpha::portfolio
