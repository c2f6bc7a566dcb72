#pragma once

// Seeded synthetic market datasets.
//
// Day-ahead prices follow a daily profile plus AR(1) noise. Wind output is a
// logistic AR(1) capacity factor with Gaussian forecast errors. The system
// imbalance is an AR(1) process per settlement period. Each period gets
// piecewise-constant aFRR/mFRR ladders around the day-ahead price: upward
// prices rise with depth, downward prices fall, and mFRR starts beyond the
// last aFRR price on each side.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>

#include "windbid/dataset.hpp"
#include "windbid/errors.hpp"

namespace windbid {

struct SyntheticScenario {
    std::uint64_t seed = 1;
    std::size_t hours = 1000;
    Timestamp start = parse_timestamp("2024-01-01T00:00Z");
    MarketResolution resolution{60, 15};
    double beta_mw = 400.0;

    // Day-ahead price, EUR/MWh.
    double da_mean = 70.0;
    double da_daily_amplitude = 20.0;
    double da_volatility = 12.0;
    double da_persistence = 0.9;

    // Wind capacity factor (logit-scale AR(1)) and forecast errors as fractions of capacity.
    double capacity_factor_mean = 0.45;
    double capacity_factor_volatility = 0.8;
    double capacity_factor_persistence = 0.95;
    double forecast_bias = 0.0;
    double forecast_dispersion = 0.06;
    double quarter_dispersion = 0.02;
    /// Every settlement period gets exactly production / n.
    bool uniform_quarters = false;

    // System imbalance, MW.
    double si_mean_mw = 0.0;
    double si_volatility_mw = 150.0;
    double si_persistence = 0.85;

    // Bid ladders: segment counts and nominal volumes (MW), prices (EUR/MWh).
    int afrr_segments = 8;
    double afrr_segment_mw = 25.0;
    int mfrr_segments = 10;
    double mfrr_segment_mw = 60.0;
    double afrr_premium = 15.0;
    double mfrr_premium = 20.0;
    double ladder_slope = 0.15;
    double price_jitter = 2.0;
};

/// Installed capacity far below the imbalance scale: the producer cannot move prices.
inline SyntheticScenario small_producer_preset() {
    SyntheticScenario s;
    s.beta_mw = 0.5;
    return s;
}

/// Installed capacity comparable to the imbalance scale.
inline SyntheticScenario large_producer_preset() {
    SyntheticScenario s;
    s.beta_mw = 400.0;
    return s;
}

/// Large producer against shallow ladders; scarcity becomes common.
inline SyntheticScenario stress_preset() {
    SyntheticScenario s = large_producer_preset();
    s.afrr_segments = 4;
    s.afrr_segment_mw = 15.0;
    s.mfrr_segments = 4;
    s.mfrr_segment_mw = 30.0;
    return s;
}

inline SyntheticScenario preset_by_name(std::string_view name) {
    if (name == "small") return small_producer_preset();
    if (name == "large") return large_producer_preset();
    if (name == "stress") return stress_preset();
    throw DomainError("unknown preset '" + std::string(name) + "' (expected small, large or stress)");
}

namespace detail {

/// mt19937_64 with a portable Gaussian (Box-Muller); std::normal_distribution
/// is implementation-defined and would break cross-platform reproducibility.
class SeededStream {
public:
    explicit SeededStream(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double exponential(double mean) { return -mean * std::log(uniform()); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace detail

inline DatasetBundle generate_synthetic(const SyntheticScenario& s) {
    if (!(s.beta_mw > 0.0)) throw DomainError("installed capacity must be > 0");
    if (!(s.capacity_factor_mean > 0.0 && s.capacity_factor_mean < 1.0))
        throw DomainError("mean capacity factor must lie in (0, 1)");
    if (s.afrr_segments < 0 || s.mfrr_segments < 0) throw DomainError("ladder depth must be >= 0");

    detail::SeededStream rng(s.seed);
    const auto& res = s.resolution;
    const int n = res.periods_per_contract();

    DatasetBundle data;
    data.metadata.beta_mw = s.beta_mw;
    data.metadata.resolution = res;

    const double cf_logit = std::log(s.capacity_factor_mean / (1.0 - s.capacity_factor_mean));
    const double cf_innovation = std::sqrt(1.0 - s.capacity_factor_persistence * s.capacity_factor_persistence);
    const double da_innovation = std::sqrt(1.0 - s.da_persistence * s.da_persistence);
    const double si_innovation = std::sqrt(1.0 - s.si_persistence * s.si_persistence);
    const double hourly_sd = s.forecast_dispersion * s.beta_mw;
    const double quarter_sd = s.uniform_quarters ? 0.0 : s.quarter_dispersion * s.beta_mw;

    double cf_state = s.capacity_factor_volatility * rng.normal();
    double da_state = s.da_volatility * rng.normal();
    double si_state = s.si_volatility_mw * rng.normal();

    auto ladder = [&](Timestamp quarter, double reference) {
        auto& bids = data.balancing_bids[quarter];
        for (int side = 0; side < 2; ++side) {
            const double sign = side == 0 ? 1.0 : -1.0;
            const auto dir = side == 0 ? BidDirection::Up : BidDirection::Down;
            double depth = 0.0;
            double offset = s.afrr_premium;
            for (int k = 0; k < s.afrr_segments; ++k) {
                const double volume = s.afrr_segment_mw * (0.75 + 0.5 * rng.uniform());
                bids.push_back({Product::aFRR, dir, volume, reference + sign * (offset + s.ladder_slope * depth)});
                depth += volume;
                offset += rng.exponential(s.price_jitter);
            }
            offset += s.mfrr_premium;
            for (int k = 0; k < s.mfrr_segments; ++k) {
                const double volume = s.mfrr_segment_mw * (0.75 + 0.5 * rng.uniform());
                bids.push_back({Product::mFRR, dir, volume, reference + sign * (offset + s.ladder_slope * depth)});
                depth += volume;
                offset += rng.exponential(s.price_jitter);
            }
        }
    };

    for (std::size_t h = 0; h < s.hours; ++h) {
        const Timestamp hour = s.start + std::chrono::minutes{static_cast<long>(h) * res.day_ahead_minutes()};
        const auto minute_of_day = (hour - std::chrono::floor<std::chrono::days>(hour)).count();
        const double hour_of_day = minute_of_day / 60.0;

        da_state = s.da_persistence * da_state + da_innovation * s.da_volatility * rng.normal();
        const double da_price = s.da_mean +
                                s.da_daily_amplitude * std::sin(2.0 * std::numbers::pi * (hour_of_day - 6.0) / 24.0) +
                                da_state;
        data.da_prices[hour] = da_price;

        cf_state = s.capacity_factor_persistence * cf_state +
                   cf_innovation * s.capacity_factor_volatility * rng.normal();
        const double forecast_mw = s.beta_mw / (1.0 + std::exp(-(cf_logit + cf_state)));
        const double hourly_error = s.forecast_bias * s.beta_mw + hourly_sd * rng.normal();
        const double variance_mw2 = hourly_sd * hourly_sd + quarter_sd * quarter_sd / n;
        data.forecasts[hour] = {forecast_mw * res.contract_hours(),
                                variance_mw2 * res.contract_hours() * res.contract_hours()};

        for (const auto& q : sub_windows({hour, res.day_ahead_minutes()}, res)) {
            const double noise = quarter_sd > 0.0 ? quarter_sd * rng.normal() : 0.0;
            const double power = std::clamp(forecast_mw + hourly_error + noise, 0.0, s.beta_mw);
            data.production[q.start] = power * res.settlement_hours();

            si_state = s.si_persistence * si_state + si_innovation * s.si_volatility_mw * rng.normal();
            data.system_imbalance[q.start] = s.si_mean_mw + si_state;
            ladder(q.start, da_price);
        }
    }
    return data;
}

}  // namespace windbid
