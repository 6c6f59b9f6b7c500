#pragma once

#include <filesystem>
#include <string>

#include "nalpha/common/calendar.hpp"
#include "nalpha/common/random.hpp"
#include "nalpha/ingest/dataset.hpp"
#include "nalpha/synth/generator.hpp"

namespace nalpha::testing {

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Monday-to-Friday trading days from `start`.
TradingCalendar weekday_calendar(Date start, std::size_t days);

struct MarketOptions {
    double mean = 0.0004;
    double sd = 0.02;
    double missing = 0.0;  ///< probability that a firm-day return is absent
    bool chars = true;     ///< fill logsize, bm and mom12 for every month
};

/// Random daily returns, caps that compound with them, closes and monthly
/// size/value/momentum characteristics. Firm ids are F0000, F0001, ...
ingest::MarketPanel random_market(const TradingCalendar& calendar, std::size_t firms, Rng& rng,
                                  const MarketOptions& options = {});

/// Small synthetic spec that keeps generated datasets quick to build.
synth::SynthSpec small_spec(std::uint64_t seed = 3);

/// Generates `spec` into `dir` and loads it back.
ingest::Dataset synth_dataset(const synth::SynthSpec& spec, const std::filesystem::path& dir,
                              synth::GroundTruth* truth = nullptr);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace nalpha::testing
