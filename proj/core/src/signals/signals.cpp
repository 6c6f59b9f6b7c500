#include "nalpha/signals/signals.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "nalpha/common/csv.hpp"
#include "nalpha/common/error.hpp"
#include "nalpha/common/parallel.hpp"
#include "nalpha/econometrics/regression.hpp"
#include "nalpha/event_study/car.hpp"

namespace nalpha::signals {

using ingest::Dataset;
using ingest::EarningsEvent;
using ingest::NumericRecord;
using ingest::NumericRevisionHistory;

std::optional<double> tone(int pos, int neg, int total) {
    if (total <= 0) return std::nullopt;
    return static_cast<double>(pos - neg) / static_cast<double>(total);
}

namespace {

template <class Field>
std::optional<double> last_prior(std::span<const NumericRecord> pair, Date before, Field field) {
    for (std::size_t i = pair.size(); i-- > 0;) {
        if (pair[i].date >= before) continue;
        if (auto v = field(pair[i])) return static_cast<double>(*v);
    }
    return std::nullopt;
}

std::optional<double> lagged_close(const ingest::MarketPanel& market, std::size_t firm, std::size_t day, int lag) {
    if (day == ingest::kNoIndex || day < static_cast<std::size_t>(lag)) return std::nullopt;
    for (std::size_t d = day - static_cast<std::size_t>(lag) + 1; d-- > 0;) {
        const double c = market.close(firm, d);
        if (ingest::present(c) && c > 0.0) return c;
    }
    return std::nullopt;
}

void add_reason(std::string& reasons, const std::string& r) {
    if (reasons.find(r) != std::string::npos) return;
    if (!reasons.empty()) reasons += "; ";
    reasons += r;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

Revision revisions(const Dataset& ds, std::size_t i, int price_lag) {
    Revision out;
    const auto& rep = ds.reports.at(i);
    if (i >= ds.matched.size() || ds.matched[i].missing()) {
        out.reason = "no matched history record";
        return out;
    }
    const NumericRecord& cur = ds.numerics.records()[*ds.matched[i].record];
    const auto pair = ds.numerics.for_pair(cur.analyst_id, cur.firm_id);

    auto rec = [](const NumericRecord& r) { return r.recommendation; };
    auto eps = [](const NumericRecord& r) { return r.eps_forecast; };
    auto tp = [](const NumericRecord& r) { return r.target_price; };

    if (cur.recommendation) {
        if (auto prev = last_prior(pair, cur.date, rec)) out.rec_rev = *cur.recommendation - *prev;
        else add_reason(out.reason, "no prior record");
    }
    const auto price = lagged_close(ds.market, rep.firm, rep.event_day, price_lag);
    auto scaled = [&](std::optional<double> now, const auto& field, std::optional<double>& slot) {
        if (!now) return;
        const auto prev = last_prior(pair, cur.date, field);
        if (!prev) {
            add_reason(out.reason, "no prior record");
            return;
        }
        if (!price) {
            add_reason(out.reason, "no price " + std::to_string(price_lag) + " trading days before release");
            return;
        }
        slot = (*now - *prev) / *price;
    };
    scaled(cur.eps_forecast, eps, out.ef_rev);
    scaled(cur.target_price, tp, out.tp_rev);
    return out;
}

std::optional<double> consensus_eps(const EarningsEvent& ev, const NumericRevisionHistory& history, int window_days) {
    if (ev.consensus_eps) return ev.consensus_eps;
    const Date lo = ev.announce_date - window_days;
    std::map<std::string, std::pair<Date, double>> latest;  // analyst -> (date, eps)
    for (const NumericRecord* r : history.for_firm(ev.firm_id)) {
        if (!r->eps_forecast || r->date < lo || r->date >= ev.announce_date) continue;
        auto [it, inserted] = latest.try_emplace(r->analyst_id, r->date, *r->eps_forecast);
        if (!inserted && r->date >= it->second.first) it->second = {r->date, *r->eps_forecast};
    }
    if (latest.empty()) return std::nullopt;
    std::vector<double> v;
    v.reserve(latest.size());
    for (const auto& [a, de] : latest) v.push_back(de.second);
    return median(std::move(v));
}

std::optional<double> sue(const std::string& firm_id, Date date, std::span<const EarningsEvent> earnings,
                          const NumericRevisionHistory& history, int window_days) {
    auto lo = std::lower_bound(earnings.begin(), earnings.end(), firm_id,
                               [](const EarningsEvent& e, const std::string& f) { return e.firm_id < f; });
    const EarningsEvent* last = nullptr;
    for (auto it = lo; it != earnings.end() && it->firm_id == firm_id; ++it) {
        if (it->announce_date < date) last = &*it;
    }
    if (last == nullptr || !(last->price > 0.0)) return std::nullopt;
    const auto c = consensus_eps(*last, history, window_days);
    if (!c) return std::nullopt;
    return (last->actual_eps - *c) / last->price;
}

std::vector<ReportSignals> compute_signals(const Dataset& ds, const event::BenchmarkAssignment& bench) {
    std::vector<ReportSignals> out(ds.reports.size());
    parallel_for(ds.reports.size(), [&](std::size_t i) {
        const auto& r = ds.reports[i];
        ReportSignals& s = out[i];
        s.report_id = r.report_id;
        s.tone = tone(r.n_pos, r.n_neg, r.n_sent);
        if (r.headline_pos && r.headline_neg && r.headline_sent) {
            s.headline_tone = tone(*r.headline_pos, *r.headline_neg, *r.headline_sent);
        }
        const Revision rev = revisions(ds, i);
        s.rec_rev = rev.rec_rev;
        s.ef_rev = rev.ef_rev;
        s.tp_rev = rev.tp_rev;
        s.note = rev.reason;
        s.sue = sue(r.firm_id, r.release_date, ds.earnings, ds.numerics);
        s.car01 = event::car(ds.market, bench, r.firm, r.event_day, 1);
    });
    return out;
}

void write_signals_csv(const std::filesystem::path& path, const std::vector<ReportSignals>& signals,
                       const std::string& comment) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    if (!comment.empty()) out << "# " << comment << '\n';
    out << "report_id,tone,headline_tone,rec_rev,ef_rev,tp_rev,sue,car01,note\n";
    for (const auto& s : signals) {
        out << s.report_id << ',' << csv::format(s.tone) << ',' << csv::format(s.headline_tone) << ','
            << csv::format(s.rec_rev) << ',' << csv::format(s.ef_rev) << ',' << csv::format(s.tp_rev) << ','
            << csv::format(s.sue) << ',' << csv::format(s.car01) << ',';
        for (char c : s.note) out << (c == ',' ? ';' : c);
        out << '\n';
    }
}

SentimentKind parse_sentiment_kind(std::string_view text) {
    for (auto k : kSentimentKinds) {
        if (sentiment_kind_name(k) == text) return k;
    }
    throw InputError("unknown sentiment signal '" + std::string(text) + "'");
}

std::string_view sentiment_kind_name(SentimentKind k) {
    switch (k) {
        case SentimentKind::Car01: return "car01";
        case SentimentKind::RecRev: return "rec_rev";
        case SentimentKind::HeadlineTone: return "headline_tone";
        case SentimentKind::BodyTone: return "body_tone";
    }
    return "";
}

std::vector<portfolio::SignalObs> sentiment_signal(const Dataset& ds, const std::vector<ReportSignals>& signals,
                                                   SentimentKind kind) {
    if (signals.size() != ds.reports.size()) throw DomainError("signals are not aligned with the reports");
    std::vector<portfolio::SignalObs> obs;
    for (std::size_t i = 0; i < signals.size(); ++i) {
        const auto& s = signals[i];
        std::optional<double> v;
        switch (kind) {
            case SentimentKind::Car01: v = s.car01; break;
            case SentimentKind::RecRev: v = s.rec_rev; break;
            case SentimentKind::HeadlineTone: v = s.headline_tone; break;
            case SentimentKind::BodyTone: v = s.tone; break;
        }
        if (v) obs.push_back({ds.reports[i].firm, ds.reports[i].release_date.month(), *v});
    }
    return obs;
}

ProfileInput profile_input(const Dataset& ds, const forecast::ForecastRun& run,
                           const std::vector<ReportSignals>& signals) {
    if (signals.size() != ds.reports.size()) throw DomainError("signals are not aligned with the reports");
    ProfileInput in;
    in.columns = {"predicted", "realized", "car01", "sue", "rec_rev", "ef_rev", "tp_rev"};
    in.values.assign(in.columns.size(), {});
    auto val = [](const std::optional<double>& v) { return v ? *v : ingest::kMissing; };
    for (const auto& f : run.forecasts) {
        const std::size_t i = f.report;
        in.report.push_back(i);
        in.month.push_back(f.release_date.month());
        in.predicted.push_back(f.predicted_return);
        in.values[0].push_back(f.predicted_return);
        in.values[1].push_back(i < run.labels.size() && run.labels[i] ? run.labels[i]->value : ingest::kMissing);
        const ReportSignals& s = signals.at(i);
        in.values[2].push_back(val(s.car01));
        in.values[3].push_back(val(s.sue));
        in.values[4].push_back(val(s.rec_rev));
        in.values[5].push_back(val(s.ef_rev));
        in.values[6].push_back(val(s.tp_rev));
    }
    return in;
}

DecileProfile decile_profile(const ProfileInput& in, int lags) {
    const std::size_t C = in.columns.size();
    const std::size_t n = in.predicted.size();
    DecileProfile out;
    out.columns = in.columns;

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return in.month[a] < in.month[b]; });

    // monthly[d][c] = per-month decile means (NaN when empty)
    std::array<std::vector<std::vector<double>>, 10> monthly;
    for (auto& m : monthly) m.assign(C, {});
    std::size_t b = 0;
    while (b < n) {
        std::size_t e = b;
        while (e < n && in.month[order[e]] == in.month[order[b]]) ++e;
        std::vector<double> keys;
        for (std::size_t k = b; k < e; ++k) keys.push_back(in.predicted[order[k]]);
        const auto bins = portfolio::rank_bins(keys, 10);
        for (std::size_t c = 0; c < C; ++c) {
            std::array<double, 10> sum{};
            std::array<std::size_t, 10> cnt{};
            for (std::size_t k = b; k < e; ++k) {
                const double v = in.values[c][order[k]];
                if (!ingest::present(v)) continue;
                sum[bins[k - b] - 1] += v;
                ++cnt[bins[k - b] - 1];
            }
            for (std::size_t d = 0; d < 10; ++d) {
                monthly[d][c].push_back(cnt[d] > 0 ? sum[d] / static_cast<double>(cnt[d]) : ingest::kMissing);
            }
        }
        ++out.months;
        b = e;
    }

    for (std::size_t d = 0; d < 10; ++d) {
        out.rows[d].assign(C, std::nullopt);
        for (std::size_t c = 0; c < C; ++c) {
            double s = 0.0;
            std::size_t k = 0;
            for (double v : monthly[d][c]) {
                if (!ingest::present(v)) continue;
                s += v;
                ++k;
            }
            if (k > 0) out.rows[d][c] = s / static_cast<double>(k);
        }
    }
    out.hl.assign(C, std::nullopt);
    out.hl_t.assign(C, std::nullopt);
    for (std::size_t c = 0; c < C; ++c) {
        if (!out.rows[9][c] || !out.rows[0][c]) continue;
        out.hl[c] = *out.rows[9][c] - *out.rows[0][c];
        std::vector<double> diff;
        for (std::size_t t = 0; t < out.months; ++t) {
            const double hi = monthly[9][c][t], lo = monthly[0][c][t];
            if (ingest::present(hi) && ingest::present(lo)) diff.push_back(hi - lo);
        }
        if (diff.size() < 2) continue;
        const auto m = econ::mean_test(diff, lags);
        if (m.se > 0.0) out.hl_t[c] = m.t;
    }
    return out;
}

void write_profile_csv(const std::filesystem::path& path, const DecileProfile& p, const std::string& comment) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    if (!comment.empty()) out << "# " << comment << '\n';
    out << "decile";
    for (const auto& c : p.columns) out << ',' << c;
    out << '\n';
    for (std::size_t d = 0; d < 10; ++d) {
        out << (d == 0 ? "L" : d == 9 ? "H" : std::to_string(d + 1));
        for (const auto& v : p.rows[d]) out << ',' << csv::format(v);
        out << '\n';
    }
    out << "H-L";
    for (const auto& v : p.hl) out << ',' << csv::format(v);
    out << "\nt(H-L)";
    for (const auto& v : p.hl_t) out << ',' << csv::format(v);
    out << '\n';
}

}  // namespace nalpha::signals
