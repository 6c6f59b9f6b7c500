#include "nalpha/forecast/forecaster.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "nalpha/common/csv.hpp"
#include "nalpha/common/error.hpp"
#include "nalpha/common/parallel.hpp"

namespace nalpha::forecast {

using ingest::Dataset;
using ingest::EmbeddingTable;
using ingest::MarketPanel;

LabelPolicy parse_label_policy(std::string_view text) {
    if (text == "labels-realized") return LabelPolicy::LabelsRealized;
    if (text == "release-dated") return LabelPolicy::ReleaseDated;
    throw InputError("unknown label policy '" + std::string(text) + "' (labels-realized | release-dated)");
}

std::string_view label_policy_name(LabelPolicy p) {
    return p == LabelPolicy::LabelsRealized ? "labels-realized" : "release-dated";
}

namespace {

std::optional<std::size_t> label_end_day(const MarketPanel& market, std::size_t firm, std::size_t start_day,
                                         const LabelOptions& o) {
    const std::size_t last = start_day + static_cast<std::size_t>(o.horizon_days());
    if (last >= market.day_count()) return std::nullopt;
    const std::size_t listed_until = market.last_day(firm);
    if (listed_until == MarketPanel::kNoDay) return std::nullopt;
    if (last <= listed_until) return last;
    if (o.delist == DelistPolicy::Absent) return std::nullopt;
    const std::size_t first = o.include_day0 ? start_day : start_day + 1;
    if (listed_until < first) return std::nullopt;
    return listed_until;
}

constexpr std::size_t kBlock = 256;

}  // namespace

std::optional<Label> realized_label(const MarketPanel& market, std::size_t firm, std::size_t start_day,
                                    const LabelOptions& options) {
    if (options.horizon_months < 1 || options.days_per_month < 1) throw DomainError("label horizon must be positive");
    const auto end = label_end_day(market, firm, start_day, options);
    if (!end) return std::nullopt;
    double growth = 1.0;
    for (std::size_t d = options.include_day0 ? start_day : start_day + 1; d <= *end; ++d) {
        const double r = market.ret(firm, d);
        if (ingest::present(r)) growth *= 1.0 + r;
    }
    return Label{growth - 1.0, *end};
}

std::optional<double> realized_return(const MarketPanel& market, const std::string& firm_id, std::size_t start_day,
                                      const LabelOptions& options) {
    const auto f = market.firm_index(firm_id);
    if (!f) throw DomainError("unknown firm '" + firm_id + "'");
    if (start_day >= market.day_count()) throw DomainError("start day outside the calendar");
    const auto l = realized_label(market, *f, start_day, options);
    if (!l) return std::nullopt;
    return l->value;
}

Eigen::MatrixXd embedding_matrix(const EmbeddingTable& table) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(table.size()), static_cast<Eigen::Index>(table.dim()));
    for (std::size_t i = 0; i < table.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = table.full_vector(i).transpose();
    return X;
}

double score_report(const EmbeddingTable& table, std::size_t row, const RidgeModel& model) {
    double acc = model.intercept;
    for (std::size_t g = 0; g < table.group_count(); ++g) {
        const auto b = table.block(row, g);
        double p = 0.0;
        for (std::size_t j = 0; j < b.size(); ++j) p += model.beta(static_cast<Eigen::Index>(j)) * static_cast<double>(b[j]);
        acc += table.weight(row, g) * p;
    }
    return acc;
}

ForecastRun expanding_forecasts(const Dataset& ds, const ForecastOptions& options) {
    if (options.burn_in_months < 12) throw DomainError("burn-in must be at least 12 months");
    if (options.folds < 2) throw DomainError("cross-validation needs at least two folds");
    if (options.grid.empty()) throw DomainError("penalty grid is empty");
    if (options.purge_months < 0) throw DomainError("purge gap must be >= 0");

    ForecastRun run;
    run.options = options;
    const auto& reps = ds.reports;
    const std::size_t n = reps.size();
    run.labels.resize(n);
    run.model_of_report.assign(n, ingest::kNoIndex);
    if (n == 0) return run;

    const Eigen::MatrixXd X = embedding_matrix(ds.embeddings);
    const Eigen::Index D = X.cols();
    Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    std::vector<std::size_t> labelled;  // rows with a realized label, ascending
    std::vector<std::size_t> rank(n + 1, 0);  // labelled rows before i
    for (std::size_t i = 0; i < n; ++i) {
        run.labels[i] = realized_label(ds.market, reps[i].firm, reps[i].event_day, options.label);
        rank[i + 1] = rank[i];
        if (run.labels[i]) {
            y(static_cast<Eigen::Index>(i)) = run.labels[i]->value;
            labelled.push_back(i);
            ++rank[i + 1];
        }
    }

    const std::size_t blocks = (n + kBlock - 1) / kBlock;
    std::vector<GramStats> block_stats(blocks, GramStats(D));
    auto add_row = [&](GramStats& s, std::size_t i) {
        const auto r = static_cast<Eigen::Index>(i);
        s.n += 1.0;
        s.sy += y(r);
        s.syy += y(r) * y(r);
        s.sx += X.row(r).transpose();
        s.sxy += X.row(r).transpose() * y(r);
        s.sxx.noalias() += X.row(r).transpose() * X.row(r);
    };
    parallel_for(blocks, [&](std::size_t b) {
        const std::size_t lo = b * kBlock, hi = std::min(n, lo + kBlock);
        std::vector<Eigen::Index> rows;
        for (std::size_t i = lo; i < hi; ++i) {
            if (run.labels[i]) rows.push_back(static_cast<Eigen::Index>(i));
        }
        if (rows.empty()) return;
        Eigen::MatrixXd xb(static_cast<Eigen::Index>(rows.size()), D);
        Eigen::VectorXd yb(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t k = 0; k < rows.size(); ++k) {
            xb.row(static_cast<Eigen::Index>(k)) = X.row(rows[k]);
            yb(static_cast<Eigen::Index>(k)) = y(rows[k]);
        }
        block_stats[b].add_rows(xb, yb);
    });
    auto range_stats = [&](std::size_t lo, std::size_t hi) {
        GramStats s(D);
        if (hi <= lo) return s;
        const std::size_t bl = (lo + kBlock - 1) / kBlock, bh = hi / kBlock;
        if (bl >= bh) {
            for (std::size_t i = lo; i < hi; ++i) {
                if (run.labels[i]) add_row(s, i);
            }
            return s;
        }
        for (std::size_t i = lo; i < bl * kBlock; ++i) {
            if (run.labels[i]) add_row(s, i);
        }
        for (std::size_t b = bl; b < bh; ++b) s += block_stats[b];
        for (std::size_t i = bh * kBlock; i < hi; ++i) {
            if (run.labels[i]) add_row(s, i);
        }
        return s;
    };

    auto month_of = [&](std::size_t i) { return reps[i].release_date.month(); };
    const YearMonth first = month_of(0), last = month_of(n - 1);
    const int H = options.label.horizon_days();

    struct Slot {
        YearMonth month;
        std::size_t lo = 0, hi = 0;  // reports released in the month
        std::optional<MonthlyModel> fitted;
    };
    std::vector<Slot> slots;
    for (YearMonth m = first + options.burn_in_months; m <= last; ++m) {
        auto begin = std::partition_point(reps.begin(), reps.end(), [&](const auto& r) { return r.release_date.month() < m; });
        auto end = std::partition_point(begin, reps.end(), [&](const auto& r) { return r.release_date.month() <= m; });
        if (begin == end) continue;
        slots.push_back({m, static_cast<std::size_t>(begin - reps.begin()), static_cast<std::size_t>(end - reps.begin()), {}});
    }

    parallel_for(slots.size(), [&](std::size_t si) {
        Slot& slot = slots[si];
        const YearMonth tau = slot.month;
        std::size_t bound = 0;
        if (options.policy == LabelPolicy::LabelsRealized) {
            const std::size_t first_day = ds.calendar.at_or_after(tau.first_day()).value_or(ds.calendar.size());
            bound = static_cast<std::size_t>(
                std::partition_point(reps.begin(), reps.end(),
                                     [&](const auto& r) { return r.event_day + static_cast<std::size_t>(H) < first_day; }) -
                reps.begin());
        } else {
            bound = static_cast<std::size_t>(
                std::partition_point(reps.begin(), reps.end(), [&](const auto& r) { return r.release_date < tau.first_day(); }) -
                reps.begin());
        }
        const std::size_t m = rank[bound];
        if (m < static_cast<std::size_t>(options.folds) || m < 2) return;

        const auto fb = fold_bounds(m, options.folds);
        auto pos = [&](std::size_t r) { return r < m ? labelled[r] : bound; };
        const GramStats total = range_stats(0, bound);
        std::vector<GramStats> val, train;
        for (int k = 0; k < options.folds; ++k) {
            const std::size_t lo = pos(fb[static_cast<std::size_t>(k)]), hi = pos(fb[static_cast<std::size_t>(k) + 1]);
            GramStats v = range_stats(lo, hi);
            GramStats t = total;
            t -= v;
            if (options.purge_months > 0 && hi > lo) {
                const YearMonth gap_lo = month_of(lo) - options.purge_months, gap_hi = month_of(hi - 1) + options.purge_months;
                const auto before = static_cast<std::size_t>(
                    std::partition_point(reps.begin(), reps.begin() + static_cast<std::ptrdiff_t>(lo),
                                         [&](const auto& r) { return r.release_date.month() < gap_lo; }) -
                    reps.begin());
                const auto after = static_cast<std::size_t>(
                    std::partition_point(reps.begin() + static_cast<std::ptrdiff_t>(hi),
                                         reps.begin() + static_cast<std::ptrdiff_t>(bound),
                                         [&](const auto& r) { return r.release_date.month() <= gap_hi; }) -
                    reps.begin());
                t -= range_stats(before, lo);
                t -= range_stats(hi, after);
            }
            val.push_back(std::move(v));
            train.push_back(std::move(t));
        }
        MonthlyModel mm;
        mm.month = tau;
        mm.row_bound = bound;
        mm.cv_mse.assign(options.grid.size(), 0.0);
        for (std::size_t g = 0; g < options.grid.size(); ++g) {
            int used = 0;
            for (std::size_t k = 0; k < val.size(); ++k) {
                if (train[k].n < 2.0 || val[k].n < 1.0) continue;
                const RidgeModel fit = fit_ridge(train[k], options.grid[g], options.standardize);
                mm.cv_mse[g] += sum_squared_error(val[k], fit) / val[k].n;
                ++used;
            }
            mm.cv_mse[g] = used > 0 ? mm.cv_mse[g] / used : std::numeric_limits<double>::infinity();
        }
        const double theta = options.grid[pick_penalty(options.grid, mm.cv_mse)];
        mm.model = fit_ridge(total, theta, options.standardize);
        mm.model.train_cutoff = tau - 1;
        slot.fitted = std::move(mm);
    });

    for (auto& slot : slots) {
        if (!slot.fitted) {
            spdlog::warn("forecast: no usable training rows for {}; month skipped", slot.month.str());
            run.skipped_months.push_back(slot.month);
            continue;
        }
        const std::size_t mi = run.models.size();
        run.models.push_back(std::move(*slot.fitted));
        const RidgeModel& model = run.models.back().model;
        for (std::size_t i = slot.lo; i < slot.hi; ++i) {
            ForecastRecord f;
            f.report_id = reps[i].report_id;
            f.firm_id = reps[i].firm_id;
            f.release_date = reps[i].release_date;
            f.horizon_months = options.label.horizon_months;
            f.predicted_return = score_report(ds.embeddings, i, model);
            f.report = i;
            run.model_of_report[i] = mi;
            run.forecasts.push_back(std::move(f));
        }
    }
    return run;
}

AuditResult audit_lookahead(const Dataset& ds, const ForecastRun& run) {
    AuditResult out;
    out.models = run.models.size();
    auto flag = [&](std::string what) {
        ++out.violations;
        if (out.details.size() < 20) out.details.push_back(std::move(what));
    };
    for (const auto& mm : run.models) {
        const Date cut = mm.month.first_day();
        if (!(mm.model.train_cutoff < mm.month)) flag("model " + mm.month.str() + " has train_cutoff not before its month");
        for (std::size_t i = 0; i < mm.row_bound && i < ds.reports.size(); ++i) {
            const auto& r = ds.reports[i];
            const auto end = label_end_day(ds.market, r.firm, r.event_day, run.options.label);
            if (!end) continue;  // unlabelled rows never enter a fit
            ++out.rows_checked;
            if (!(ds.calendar.day(*end) < cut)) {
                flag("model " + mm.month.str() + ": report " + r.report_id + " label ends " +
                     ds.calendar.day(*end).iso());
            }
        }
    }
    for (const auto& f : run.forecasts) {
        const std::size_t mi = f.report < run.model_of_report.size() ? run.model_of_report[f.report] : ingest::kNoIndex;
        if (mi == ingest::kNoIndex || mi >= run.models.size()) {
            flag("forecast " + f.report_id + " has no model");
            continue;
        }
        const auto& mm = run.models[mi];
        if (mm.month != f.release_date.month() || !(mm.model.train_cutoff < f.release_date.month())) {
            flag("forecast " + f.report_id + " scored by model " + mm.month.str());
        }
    }
    return out;
}

std::vector<portfolio::SignalObs> signal_observations(const Dataset& ds, const std::vector<ForecastRecord>& forecasts) {
    std::vector<portfolio::SignalObs> obs;
    obs.reserve(forecasts.size());
    for (const auto& f : forecasts) {
        if (f.report == ingest::kNoIndex) throw DomainError("forecast " + f.report_id + " is not attached to a report");
        obs.push_back({ds.reports[f.report].firm, f.release_date.month(), f.predicted_return});
    }
    return obs;
}

void write_forecasts_csv(const std::filesystem::path& path, const std::vector<ForecastRecord>& forecasts,
                         const std::string& comment) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    if (!comment.empty()) out << "# " << comment << '\n';
    out << "report_id,firm_id,release_date,predicted_return\n";
    for (const auto& f : forecasts) {
        out << f.report_id << ',' << f.firm_id << ',' << f.release_date.iso() << ',' << csv::format(f.predicted_return)
            << '\n';
    }
}

std::vector<ForecastRecord> read_forecasts_csv(const std::filesystem::path& path) {
    csv::Reader r(path);
    r.expect_prefix({"report_id", "firm_id", "release_date", "predicted_return"});
    std::vector<ForecastRecord> out;
    while (r.next()) {
        ForecastRecord f;
        f.report_id = std::string(r.field(0));
        f.firm_id = std::string(r.field(1));
        f.release_date = Date::parse(r.field(2));
        f.predicted_return = r.number(3);
        out.push_back(std::move(f));
    }
    return out;
}

void attach_reports(std::vector<ForecastRecord>& forecasts, const Dataset& ds) {
    std::unordered_map<std::string, std::size_t> index;
    index.reserve(ds.reports.size());
    for (std::size_t i = 0; i < ds.reports.size(); ++i) index.emplace(ds.reports[i].report_id, i);
    for (auto& f : forecasts) {
        auto it = index.find(f.report_id);
        if (it == index.end()) throw InputError("forecast for unknown report '" + f.report_id + "'");
        if (ds.reports[it->second].firm_id != f.firm_id) {
            throw InputError("forecast for report '" + f.report_id + "' names a different firm");
        }
        f.report = it->second;
    }
}

}  // namespace nalpha::forecast
