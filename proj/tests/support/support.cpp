#include "support.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "nalpha/pipeline/run.hpp"

namespace nalpha::testing {

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    path_ = base / ("nalpha-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

TradingCalendar weekday_calendar(Date start, std::size_t days) {
    std::vector<Date> out;
    for (Date d = start; out.size() < days; d = d + 1) {
        if (d.iso_weekday() <= 5) out.push_back(d);
    }
    return TradingCalendar(std::move(out));
}

ingest::MarketPanel random_market(const TradingCalendar& calendar, std::size_t firms, Rng& rng,
                                  const MarketOptions& options) {
    std::vector<std::string> ids;
    for (std::size_t f = 0; f < firms; ++f) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "F%04zu", f);
        ids.emplace_back(buf);
    }
    ingest::MarketPanel m(ids, calendar);
    for (std::size_t f = 0; f < firms; ++f) {
        double cap = std::exp(rng.normal(7.0, 1.5));
        const double shares = cap / rng.uniform(10.0, 80.0);
        for (std::size_t d = 0; d < calendar.size(); ++d) {
            if (options.missing > 0.0 && rng.uniform() < options.missing) continue;
            const double r = rng.normal(options.mean, options.sd);
            cap *= 1.0 + r;
            m.ret_ref(f, d) = r;
            m.cap_ref(f, d) = cap;
            m.close_ref(f, d) = cap / shares;
        }
    }
    m.finalize(calendar);
    if (options.chars) {
        for (std::size_t f = 0; f < firms; ++f) {
            for (std::size_t k = 0; k < m.month_count(); ++k) {
                using ingest::Characteristic;
                const double cap = k > 0 ? m.month_end_cap(f, k - 1) : m.cap(f, 0);
                m.set_characteristic(f, k, Characteristic::LogSize, std::log(cap > 0.0 ? cap : 1.0));
                m.set_characteristic(f, k, Characteristic::BookToMarket, rng.normal(0.0, 1.0));
                m.set_characteristic(f, k, Characteristic::Momentum, rng.normal(0.0, 1.0));
            }
        }
    }
    return m;
}

synth::SynthSpec small_spec(std::uint64_t seed) {
    synth::SynthSpec s = synth::default_spec();
    s.n_firms = 60;
    s.n_months = 30;
    s.burn_in_months = 12;
    s.dim = 16;
    s.seed = seed;
    return s;
}

ingest::Dataset synth_dataset(const synth::SynthSpec& spec, const std::filesystem::path& dir,
                              synth::GroundTruth* truth) {
    const auto t = synth::generate(spec, dir);
    if (truth) *truth = t;
    return ingest::load_dataset(pipeline::synth_paths(dir), ingest::IngestOptions{});
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

}  // namespace nalpha::testing
