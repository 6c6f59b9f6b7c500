#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nalpha/common/calendar.hpp"

namespace nalpha::synth {

struct GroupSpec {
    std::string name;
    double share = 0.0;  ///< mean token weight before jitter
};

/// A group whose block carries the firm's latent score along a fixed unit
/// direction: block = loading * z * u + N(0, 1).
struct SignalSpec {
    std::string group;
    double loading = 12.0;
};

struct SynthSpec {
    std::size_t n_firms = 300;
    int n_months = 120;       ///< evaluation months after the burn-in
    int burn_in_months = 24;  ///< months reserved for the first fits
    std::size_t dim = 64;
    std::vector<GroupSpec> groups;  ///< default: the five meta-categories
    double weight_jitter = 0.3;     ///< sd of the log-normal token-weight jitter
    std::vector<SignalSpec> signal; ///< default: Strategic Outlook
    double spread_pct = 6.0;        ///< planted annual top-minus-bottom decile spread, %
    double sigma_daily = 0.002;
    double market_mean = 0.0003;
    double market_sd = 0.01;
    double rf_daily = 0.0001;
    double reports_per_firm_month = 2.0;
    std::size_t analysts_per_firm = 3;
    Date start = Date::from_ymd(2000, 1, 3);
    std::uint64_t seed = 1;

    /// Calendar months generated: burn-in, evaluation span and the month
    /// the first forecasts are formed in.
    [[nodiscard]] int total_months() const { return burn_in_months + n_months + 1; }
};

SynthSpec default_spec();
/// Missing keys keep their defaults; unknown keys are rejected.
SynthSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const SynthSpec& spec);

struct GroundTruth {
    std::vector<std::string> firm_ids;
    std::vector<double> z;              ///< standardized latent score per firm
    double drift_per_z = 0.0;           ///< annual return per unit z
    double planted_spread = 0.0;        ///< annual, fraction
    double realized_spread = 0.0;       ///< measured value-weighted z-decile spread, annual
    std::size_t reports = 0;
};

/// Writes reports.csv, embeddings.bin, market.csv, chars.csv, factors.csv,
/// calendar.csv, numerics.csv, earnings.csv and manifest.json into `dir`.
/// Single-threaded and fully determined by the spec. Throws DomainError for
/// an infeasible spec.
GroundTruth generate(const SynthSpec& spec, const std::filesystem::path& dir);

/// Validates feasibility without generating.
void check_spec(const SynthSpec& spec);

}  // namespace nalpha::synth
