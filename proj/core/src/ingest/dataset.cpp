#include "nalpha/ingest/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "nalpha/common/config.hpp"
#include "nalpha/common/csv.hpp"
#include "nalpha/common/error.hpp"
#include "nalpha/common/hash.hpp"

namespace nalpha::ingest {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    return out;
}

std::string opt_int(std::optional<int> v) { return v ? std::to_string(*v) : std::string{}; }

std::optional<int> checked_int(const csv::Reader& r, std::size_t col) {
    auto v = r.optional_integer(col);
    if (!v) return std::nullopt;
    return static_cast<int>(*v);
}

int count_field(const csv::Reader& r, std::size_t col) {
    const long long v = r.integer(col);
    if (v < 0) r.fail("column '" + r.header()[col] + "' must be nonnegative");
    return static_cast<int>(v);
}

MarketPanel read_market(const std::filesystem::path& market_path, const std::filesystem::path& chars_path,
                        const TradingCalendar& calendar) {
    struct Row {
        std::string firm;
        std::size_t day;
        double ret, cap, close;
    };
    std::vector<Row> rows;
    std::unordered_set<std::string> firms;
    {
        csv::Reader r(market_path);
        r.expect_prefix({"firm_id", "date", "ret", "mktcap"});
        const auto close_col = r.column("close");
        while (r.next()) {
            Row row;
            row.firm = std::string(r.field(0));
            if (row.firm.empty()) r.fail("empty firm_id");
            const Date d = Date::parse(r.field(1));
            auto idx = calendar.index_of(d);
            if (!idx) r.fail("date " + d.iso() + " is not a trading day in the calendar");
            row.day = *idx;
            const auto ret = r.optional_number(2);
            if (ret && *ret <= -1.0) r.fail("return must exceed -1");
            row.ret = ret.value_or(kMissing);
            const auto cap = r.optional_number(3);
            if (cap && *cap <= 0.0) r.fail("market cap must be positive");
            row.cap = cap.value_or(kMissing);
            row.close = kMissing;
            if (close_col) {
                const auto c = r.optional_number(*close_col);
                if (c && *c <= 0.0) r.fail("price must be positive");
                row.close = c.value_or(kMissing);
            }
            firms.insert(row.firm);
            rows.push_back(std::move(row));
        }
    }
    std::vector<std::string> ids(firms.begin(), firms.end());
    std::sort(ids.begin(), ids.end());
    MarketPanel panel(ids, calendar);
    std::vector<char> filled(ids.size() * calendar.size(), 0);
    for (const Row& row : rows) {
        const std::size_t f = *panel.firm_index(row.firm);
        char& seen = filled[f * calendar.size() + row.day];
        if (seen) {
            throw InputError(market_path.string() + ": duplicate row for firm " + row.firm + " on " +
                             calendar.day(row.day).iso());
        }
        seen = 1;
        panel.ret_ref(f, row.day) = row.ret;
        panel.cap_ref(f, row.day) = row.cap;
        panel.close_ref(f, row.day) = row.close;
    }
    panel.finalize(calendar);

    csv::Reader r(chars_path);
    r.expect_prefix({"firm_id", "month", "logsize", "bm", "mom12", "gprof", "inv", "ivol"});
    std::size_t skipped = 0;
    while (r.next()) {
        auto f = panel.firm_index(r.field(0));
        const YearMonth m = YearMonth::parse(r.field(1));
        if (!f || m < calendar.first_month() || m > calendar.last_month()) {
            ++skipped;
            continue;
        }
        const auto k = static_cast<std::size_t>(m - calendar.first_month());
        for (std::size_t c = 0; c < kCharacteristicCount; ++c) {
            panel.set_characteristic(*f, k, static_cast<Characteristic>(c), r.optional_number(2 + c).value_or(kMissing));
        }
    }
    if (skipped > 0) {
        spdlog::warn("{}: skipped {} characteristic rows outside the market panel", chars_path.string(), skipped);
    }
    return panel;
}

std::filesystem::path resolve(const nlohmann::json& data, const char* key, const std::filesystem::path& base,
                              bool required) {
    if (!data.contains(key)) {
        if (required) throw InputError(std::string("config [data] is missing '") + key + "'");
        return {};
    }
    std::filesystem::path p = data.at(key).get<std::string>();
    if (p.is_relative()) p = base / p;
    return p;
}

}  // namespace

TradingCalendar read_calendar_csv(const std::filesystem::path& path) {
    csv::Reader r(path);
    r.expect_prefix({"date"});
    std::vector<Date> days;
    while (r.next()) days.push_back(Date::parse(r.field(0)));
    try {
        return TradingCalendar(std::move(days));
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

std::vector<ReportRecord> read_reports_csv(const std::filesystem::path& path) {
    csv::Reader r(path);
    r.expect_prefix({"report_id", "firm_id", "analyst_id", "broker_id", "release_date", "recommendation",
                     "eps_forecast", "target_price", "n_pos", "n_neg", "n_sent"});
    const auto industry = r.column("industry");
    const auto h_pos = r.column("headline_pos");
    const auto h_neg = r.column("headline_neg");
    const auto h_sent = r.column("headline_sent");
    std::vector<ReportRecord> out;
    while (r.next()) {
        ReportRecord rec;
        rec.report_id = std::string(r.field(0));
        if (rec.report_id.empty()) r.fail("empty report_id");
        rec.firm_id = std::string(r.field(1));
        rec.analyst_id = std::string(r.field(2));
        rec.broker_id = std::string(r.field(3));
        rec.release_date = Date::parse(r.field(4));
        rec.recommendation = checked_int(r, 5);
        if (rec.recommendation && (*rec.recommendation < 1 || *rec.recommendation > 5)) {
            r.fail("recommendation must be in 1..5");
        }
        rec.eps_forecast = r.optional_number(6);
        rec.target_price = r.optional_number(7);
        rec.n_pos = count_field(r, 8);
        rec.n_neg = count_field(r, 9);
        rec.n_sent = count_field(r, 10);
        if (rec.n_pos + rec.n_neg > rec.n_sent) r.fail("n_pos + n_neg exceeds n_sent");
        if (industry) rec.industry = std::string(r.field(*industry));
        if (h_pos) rec.headline_pos = checked_int(r, *h_pos);
        if (h_neg) rec.headline_neg = checked_int(r, *h_neg);
        if (h_sent) rec.headline_sent = checked_int(r, *h_sent);
        out.push_back(std::move(rec));
    }
    return out;
}

FactorPanel read_factors_csv(const std::filesystem::path& path) {
    csv::Reader r(path);
    r.expect_prefix({"month", "rf"});
    std::vector<std::string> names(r.header().begin() + 2, r.header().end());
    std::vector<YearMonth> months;
    std::vector<double> rf;
    std::vector<std::vector<double>> cols(names.size());
    while (r.next()) {
        months.push_back(YearMonth::parse(r.field(0)));
        rf.push_back(r.number(1));
        for (std::size_t c = 0; c < names.size(); ++c) cols[c].push_back(r.number(2 + c));
    }
    try {
        return FactorPanel(std::move(months), std::move(rf), std::move(names), std::move(cols));
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

NumericRevisionHistory read_numerics_csv(const std::filesystem::path& path) {
    csv::Reader r(path);
    r.expect_prefix({"analyst_id", "firm_id", "date", "recommendation", "eps_forecast", "target_price"});
    std::vector<NumericRecord> out;
    while (r.next()) {
        NumericRecord rec;
        rec.analyst_id = std::string(r.field(0));
        rec.firm_id = std::string(r.field(1));
        rec.date = Date::parse(r.field(2));
        rec.recommendation = checked_int(r, 3);
        rec.eps_forecast = r.optional_number(4);
        rec.target_price = r.optional_number(5);
        out.push_back(std::move(rec));
    }
    return NumericRevisionHistory(std::move(out));
}

std::vector<EarningsEvent> read_earnings_csv(const std::filesystem::path& path) {
    csv::Reader r(path);
    r.expect_prefix({"firm_id", "announce_date", "actual_eps", "consensus_eps", "price"});
    std::vector<EarningsEvent> out;
    while (r.next()) {
        EarningsEvent e;
        e.firm_id = std::string(r.field(0));
        e.announce_date = Date::parse(r.field(1));
        e.actual_eps = r.number(2);
        e.consensus_eps = r.optional_number(3);
        e.price = r.number(4);
        if (e.price <= 0.0) r.fail("price must be positive");
        out.push_back(std::move(e));
    }
    std::stable_sort(out.begin(), out.end(), [](const EarningsEvent& a, const EarningsEvent& b) {
        return std::tie(a.firm_id, a.announce_date) < std::tie(b.firm_id, b.announce_date);
    });
    return out;
}

DataPaths data_paths_from_config(const nlohmann::json& data, const std::filesystem::path& base_dir) {
    DataPaths p;
    p.reports = resolve(data, "reports", base_dir, true);
    p.embeddings = resolve(data, "embeddings", base_dir, true);
    p.market = resolve(data, "market", base_dir, true);
    p.chars = resolve(data, "chars", base_dir, true);
    p.factors = resolve(data, "factors", base_dir, true);
    p.calendar = resolve(data, "calendar", base_dir, true);
    p.numerics = resolve(data, "numerics", base_dir, false);
    p.earnings = resolve(data, "earnings", base_dir, false);
    return p;
}

IngestOptions ingest_options_from_config(const nlohmann::json& data) {
    IngestOptions o;
    if (data.contains("sample_start")) o.sample_start = Date::parse(data.at("sample_start").get<std::string>());
    if (data.contains("sample_end")) o.sample_end = Date::parse(data.at("sample_end").get<std::string>());
    if (data.contains("match_window")) o.match_window = data.at("match_window").get<int>();
    if (o.match_window < 0) throw InputError("match_window must be >= 0");
    if (data.contains("match_unit")) {
        const auto u = data.at("match_unit").get<std::string>();
        if (u == "trading") o.match_unit = WindowUnit::TradingDays;
        else if (u == "calendar") o.match_unit = WindowUnit::CalendarDays;
        else throw InputError("match_unit must be 'trading' or 'calendar'");
    }
    return o;
}

Dataset load_dataset(const std::filesystem::path& config_path) {
    const nlohmann::json cfg = read_config_file(config_path);
    if (!cfg.contains("data")) throw InputError(config_path.string() + ": missing [data] table");
    const auto base = config_path.parent_path();
    return load_dataset(data_paths_from_config(cfg.at("data"), base), ingest_options_from_config(cfg.at("data")));
}

Dataset load_dataset(const DataPaths& paths, const IngestOptions& options) {
    Dataset ds;
    ds.options = options;
    ds.calendar = read_calendar_csv(paths.calendar);
    if (ds.calendar.empty()) throw InputError(paths.calendar.string() + ": calendar is empty");
    ds.market = read_market(paths.market, paths.chars, ds.calendar);
    ds.factors = read_factors_csv(paths.factors);
    if (!paths.numerics.empty()) ds.numerics = read_numerics_csv(paths.numerics);
    if (!paths.earnings.empty()) ds.earnings = read_earnings_csv(paths.earnings);

    EmbeddingTable emb = read_embeddings(paths.embeddings);
    std::unordered_map<std::string, std::size_t> emb_index;
    emb_index.reserve(emb.size());
    for (std::size_t i = 0; i < emb.size(); ++i) emb_index.emplace(emb.id(i), i);

    std::vector<ReportRecord> reports = read_reports_csv(paths.reports);
    ds.input_report_count = reports.size();
    {
        std::unordered_set<std::string> ids;
        for (const auto& r : reports) {
            if (!ids.insert(r.report_id).second) {
                throw InputError(paths.reports.string() + ": duplicate report_id '" + r.report_id + "'");
            }
        }
    }

    std::vector<ReportRecord> accepted;
    std::vector<std::size_t> emb_rows;
    for (auto& r : reports) {
        auto reject = [&](std::string reason) { ds.rejects.push_back({r.report_id, std::move(reason)}); };
        if ((options.sample_start && r.release_date < *options.sample_start) ||
            (options.sample_end && r.release_date > *options.sample_end)) {
            reject("outside sample range");
            continue;
        }
        auto e = emb_index.find(r.report_id);
        if (e == emb_index.end()) {
            reject("no embedding");
            continue;
        }
        if (emb.weight_sum_error(e->second) > 1e-9) {
            reject("block weights do not sum to one");
            continue;
        }
        auto f = ds.market.firm_index(r.firm_id);
        if (!f) {
            reject("no market data");
            continue;
        }
        auto day = ds.calendar.at_or_after(r.release_date);
        if (!day) {
            reject("no trading day at or after release");
            continue;
        }
        r.firm = *f;
        r.event_day = *day;
        emb_rows.push_back(e->second);
        accepted.push_back(std::move(r));
    }

    std::vector<std::size_t> order(accepted.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(accepted[a].release_date, accepted[a].report_id) <
               std::tie(accepted[b].release_date, accepted[b].report_id);
    });
    std::vector<std::size_t> emb_order(order.size());
    ds.reports.reserve(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        ds.reports.push_back(std::move(accepted[order[i]]));
        emb_order[i] = emb_rows[order[i]];
    }
    ds.embeddings = emb.select(emb_order);

    ds.matched.reserve(ds.reports.size());
    for (const auto& r : ds.reports) {
        ds.matched.push_back(match_numeric_records(r, ds.numerics, options.match_window, options.match_unit, ds.calendar));
    }
    if (!ds.rejects.empty()) spdlog::warn("ingest: {} of {} reports rejected", ds.rejects.size(), ds.input_report_count);
    return ds;
}

MatchedNumerics match_numeric_records(const ReportRecord& report, const NumericRevisionHistory& history, int window,
                                      WindowUnit unit, const TradingCalendar& calendar) {
    MatchedNumerics out;
    const auto records = history.for_pair(report.analyst_id, report.firm_id);
    if (records.empty()) return out;
    const std::size_t base = static_cast<std::size_t>(records.data() - history.records().data());
    long best_distance = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        long distance = 0;
        if (unit == WindowUnit::CalendarDays) {
            distance = records[i].date - report.release_date;
        } else {
            // positions on the trading calendar; non-trading dates map to
            // the next trading day
            distance = static_cast<long>(calendar.rank(records[i].date)) -
                       static_cast<long>(calendar.rank(report.release_date));
        }
        const long a = distance < 0 ? -distance : distance;
        if (a > window) continue;
        // records are date-sorted, so strict improvement keeps the earlier date on ties
        if (!out.record || a < best_distance) {
            out.record = base + i;
            best_distance = a;
        }
    }
    return out;
}

void write_rejects(const std::filesystem::path& path, const std::vector<Reject>& rejects) {
    auto out = open_out(path);
    out << "report_id,reason\n";
    for (const auto& r : rejects) out << r.report_id << ',' << r.reason << '\n';
}

void write_reports_csv(const std::filesystem::path& path, const std::vector<ReportRecord>& reports) {
    auto out = open_out(path);
    out << "report_id,firm_id,analyst_id,broker_id,release_date,recommendation,eps_forecast,target_price,n_pos,n_neg,"
           "n_sent,industry,headline_pos,headline_neg,headline_sent\n";
    for (const auto& r : reports) {
        out << r.report_id << ',' << r.firm_id << ',' << r.analyst_id << ',' << r.broker_id << ','
            << r.release_date.iso() << ',' << opt_int(r.recommendation) << ',' << csv::format(r.eps_forecast) << ','
            << csv::format(r.target_price) << ',' << r.n_pos << ',' << r.n_neg << ',' << r.n_sent << ','
            << r.industry << ',' << opt_int(r.headline_pos) << ',' << opt_int(r.headline_neg) << ','
            << opt_int(r.headline_sent) << '\n';
    }
}

void write_calendar_csv(const std::filesystem::path& path, const TradingCalendar& calendar) {
    auto out = open_out(path);
    out << "date\n";
    for (Date d : calendar.days()) out << d.iso() << '\n';
}

void write_numerics_csv(const std::filesystem::path& path, std::span<const NumericRecord> records) {
    auto out = open_out(path);
    out << "analyst_id,firm_id,date,recommendation,eps_forecast,target_price\n";
    for (const auto& r : records) {
        out << r.analyst_id << ',' << r.firm_id << ',' << r.date.iso() << ',' << opt_int(r.recommendation) << ','
            << csv::format(r.eps_forecast) << ',' << csv::format(r.target_price) << '\n';
    }
}

void write_earnings_csv(const std::filesystem::path& path, const std::vector<EarningsEvent>& events) {
    auto out = open_out(path);
    out << "firm_id,announce_date,actual_eps,consensus_eps,price\n";
    for (const auto& e : events) {
        out << e.firm_id << ',' << e.announce_date.iso() << ',' << csv::format(e.actual_eps) << ','
            << csv::format(e.consensus_eps) << ',' << csv::format(e.price) << '\n';
    }
}

void write_market_csv(const std::filesystem::path& path, const MarketPanel& market, const TradingCalendar& calendar,
                      bool with_close) {
    auto out = open_out(path);
    out << "firm_id,date,ret,mktcap" << (with_close ? ",close" : "") << '\n';
    auto opt = [](double v) { return present(v) ? csv::format(v) : std::string{}; };
    for (std::size_t f = 0; f < market.firm_count(); ++f) {
        for (std::size_t d = 0; d < market.day_count(); ++d) {
            const double r = market.ret(f, d), c = market.cap(f, d), p = market.close(f, d);
            if (!present(r) && !present(c) && !present(p)) continue;
            out << market.firm_ids()[f] << ',' << calendar.day(d).iso() << ',' << opt(r) << ',' << opt(c);
            if (with_close) out << ',' << opt(p);
            out << '\n';
        }
    }
}

void write_chars_csv(const std::filesystem::path& path, const MarketPanel& market, const TradingCalendar& calendar) {
    auto out = open_out(path);
    out << "firm_id,month,logsize,bm,mom12,gprof,inv,ivol\n";
    for (std::size_t f = 0; f < market.firm_count(); ++f) {
        for (std::size_t k = 0; k < market.month_count(); ++k) {
            bool any = false;
            for (std::size_t c = 0; c < kCharacteristicCount; ++c) {
                any = any || present(market.characteristic(f, k, static_cast<Characteristic>(c)));
            }
            if (!any) continue;
            out << market.firm_ids()[f] << ',' << calendar.months()[k].str();
            for (std::size_t c = 0; c < kCharacteristicCount; ++c) {
                const double v = market.characteristic(f, k, static_cast<Characteristic>(c));
                out << ',' << (present(v) ? csv::format(v) : std::string{});
            }
            out << '\n';
        }
    }
}

void write_factors_csv(const std::filesystem::path& path, const FactorPanel& factors) {
    auto out = open_out(path);
    out << "month,rf";
    for (const auto& n : factors.names()) out << ',' << n;
    out << '\n';
    for (std::size_t k = 0; k < factors.months().size(); ++k) {
        out << factors.months()[k].str() << ',' << csv::format(factors.rf(k));
        for (std::size_t c = 0; c < factors.names().size(); ++c) out << ',' << csv::format(factors.value(k, c));
        out << '\n';
    }
}

std::string Dataset::fingerprint() const {
    Fnv1a h;
    for (Date d : calendar.days()) h.update(static_cast<std::int64_t>(d.serial));
    for (const auto& id : market.firm_ids()) h.update(id);
    for (std::size_t f = 0; f < market.firm_count(); ++f) {
        for (std::size_t d = 0; d < market.day_count(); ++d) {
            h.update(market.ret(f, d));
            h.update(market.cap(f, d));
            h.update(market.close(f, d));
        }
        for (std::size_t k = 0; k < market.month_count(); ++k) {
            for (std::size_t c = 0; c < kCharacteristicCount; ++c) {
                h.update(market.characteristic(f, k, static_cast<Characteristic>(c)));
            }
        }
    }
    for (const auto& n : factors.names()) h.update(n);
    for (std::size_t k = 0; k < factors.months().size(); ++k) {
        h.update(static_cast<std::int64_t>(factors.months()[k].value));
        h.update(factors.rf(k));
        for (std::size_t c = 0; c < factors.names().size(); ++c) h.update(factors.value(k, c));
    }
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        h.update(r.report_id);
        h.update(r.firm_id);
        h.update(r.analyst_id);
        h.update(r.broker_id);
        h.update(static_cast<std::int64_t>(r.release_date.serial));
        h.update(static_cast<std::int64_t>(r.recommendation.value_or(-1)));
        h.update(r.eps_forecast.value_or(kMissing));
        h.update(r.target_price.value_or(kMissing));
        h.update(static_cast<std::int64_t>(r.n_pos));
        h.update(static_cast<std::int64_t>(r.n_neg));
        h.update(static_cast<std::int64_t>(r.n_sent));
        h.update(r.industry);
        for (std::size_t g = 0; g < embeddings.group_count(); ++g) {
            h.update(embeddings.weight(i, g));
            auto b = embeddings.block(i, g);
            h.update(b.data(), b.size() * sizeof(float));
        }
        h.update(static_cast<std::int64_t>(matched[i].record ? static_cast<std::int64_t>(*matched[i].record) : -1));
    }
    for (const auto& rec : numerics.records()) {
        h.update(rec.analyst_id);
        h.update(rec.firm_id);
        h.update(static_cast<std::int64_t>(rec.date.serial));
        h.update(static_cast<std::int64_t>(rec.recommendation.value_or(-1)));
        h.update(rec.eps_forecast.value_or(kMissing));
        h.update(rec.target_price.value_or(kMissing));
    }
    for (const auto& e : earnings) {
        h.update(e.firm_id);
        h.update(static_cast<std::int64_t>(e.announce_date.serial));
        h.update(e.actual_eps);
        h.update(e.consensus_eps.value_or(kMissing));
        h.update(e.price);
    }
    for (const auto& r : rejects) {
        h.update(r.report_id);
        h.update(r.reason);
    }
    return h.hex();
}

std::optional<std::size_t> Dataset::report_index(const std::string& id) const {
    for (std::size_t i = 0; i < reports.size(); ++i) {
        if (reports[i].report_id == id) return i;
    }
    return std::nullopt;
}

}  // namespace nalpha::ingest
