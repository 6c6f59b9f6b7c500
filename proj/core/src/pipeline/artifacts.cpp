#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "nalpha/common/csv.hpp"
#include "nalpha/common/error.hpp"
#include "nalpha/pipeline/run.hpp"

namespace nalpha::pipeline {

using portfolio::StrategySeries;

nlohmann::json to_json(const portfolio::PerfStats& s) {
    nlohmann::json loadings = nlohmann::json::object();
    for (std::size_t i = 0; i < s.factor_names.size(); ++i) {
        loadings[s.factor_names[i]] = {{"beta", s.loadings[i]}, {"t", s.loading_t[i]}};
    }
    return {{"mean", s.mean},   {"sd", s.sd},       {"sharpe", s.sharpe},     {"alpha", s.alpha},
            {"alpha_t", s.alpha_t}, {"r2", s.r2}, {"months", s.months}, {"loadings", loadings}};
}

nlohmann::json strategy_json(const StrategySeries& s, const ingest::FactorPanel& factors,
                             const std::vector<std::string>& models, bool excess) {
    nlohmann::json j;
    j["months"] = s.size();
    if (s.size() < 2) return j;
    std::vector<double> r = s.returns;
    if (excess) {
        const auto rf = portfolio::aligned_rf(s.months, factors);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= rf[i];
    }
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    double ss = 0.0;
    for (double v : r) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(r.size() - 1));
    j["mean"] = 100.0 * mean;
    j["sd"] = 100.0 * sd;
    j["sharpe"] = sd > 0.0 ? portfolio::annualized_sharpe(mean, sd) : 0.0;
    j["first_month"] = s.months.front().str();
    j["last_month"] = s.months.back().str();
    if (s.size() < 24) {
        j["alphas"] = "omitted: fewer than 24 months";
        return j;
    }
    nlohmann::json alphas = nlohmann::json::object();
    for (const auto& m : models) {
        auto st = portfolio::perf_stats(s, factors, portfolio::parse_factor_model(m), excess);
        alphas[m] = to_json(st);
    }
    j["alphas"] = std::move(alphas);
    return j;
}

void write_series_csv(const std::filesystem::path& path, const std::vector<StrategySeries>& series,
                      const std::string& comment) {
    std::set<YearMonth> months;
    for (const auto& s : series) months.insert(s.months.begin(), s.months.end());
    std::vector<std::map<YearMonth, double>> by(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        for (std::size_t t = 0; t < series[i].size(); ++t) by[i][series[i].months[t]] = series[i].returns[t];
    }
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    if (!comment.empty()) out << "# " << comment << '\n';
    out << "month";
    for (const auto& s : series) out << ',' << s.label;
    out << '\n';
    for (YearMonth m : months) {
        out << m.str();
        for (const auto& b : by) {
            auto it = b.find(m);
            out << ',';
            if (it != b.end()) out << csv::format(it->second);
        }
        out << '\n';
    }
}

void write_curves_csv(const std::filesystem::path& path, const std::vector<event::EventCurve>& curves,
                      const std::string& comment) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    if (!comment.empty()) out << "# " << comment << '\n';
    out << "curve,day,car,t,months\n";
    for (const auto& c : curves) {
        for (std::size_t d = 0; d < c.car.size(); ++d) {
            out << c.label << ',' << d << ',' << csv::format(c.car[d]) << ',' << csv::format(c.t[d]) << ','
                << c.months << '\n';
        }
    }
}

std::vector<StrategySeries> read_series_csv(const std::filesystem::path& path) {
    csv::Reader in(path);
    if (in.header().empty() || in.header()[0] != "month") in.fail("first column must be 'month'");
    std::vector<StrategySeries> out(in.header().size() - 1);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].label = in.header()[i + 1];
    while (in.next()) {
        const YearMonth m = YearMonth::parse(in.field(0));
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (auto v = in.optional_number(i + 1)) {
                if (!out[i].months.empty() && !(out[i].months.back() < m)) in.fail("months must increase");
                out[i].months.push_back(m);
                out[i].returns.push_back(*v);
            }
        }
    }
    return out;
}

std::vector<StrategySeries> common_months(const std::vector<StrategySeries>& series) {
    if (series.empty()) return {};
    std::vector<YearMonth> common = series[0].months;
    for (std::size_t i = 1; i < series.size(); ++i) {
        std::vector<YearMonth> next;
        std::set_intersection(common.begin(), common.end(), series[i].months.begin(), series[i].months.end(),
                              std::back_inserter(next));
        common = std::move(next);
    }
    std::vector<StrategySeries> out;
    for (const auto& s : series) {
        StrategySeries r;
        r.label = s.label;
        std::size_t j = 0;
        for (std::size_t t = 0; t < s.size(); ++t) {
            while (j < common.size() && common[j] < s.months[t]) ++j;
            if (j < common.size() && common[j] == s.months[t]) {
                r.months.push_back(s.months[t]);
                r.returns.push_back(s.returns[t]);
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace nalpha::pipeline
