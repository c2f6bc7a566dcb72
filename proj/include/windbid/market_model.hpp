#pragma once

// Time windows, market resolutions and resolution conversion.
//
// Units used across the engine: energy in MWh, power in MW, prices in EUR/MWh,
// installed capacity in MW. Timestamps are UTC minutes since the epoch; local
// time (and DST) is resolved before data reaches the engine.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "windbid/errors.hpp"

namespace windbid {

using Timestamp = std::chrono::sys_time<std::chrono::minutes>;

/// Parses `YYYY-MM-DDTHH:MM[:SS]Z` (seconds must be zero). Returns false on any
/// syntax or calendar error.
inline bool try_parse_timestamp(std::string_view text, Timestamp& out) {
    auto field = [&](std::size_t pos, std::size_t len, int& value) {
        if (pos + len > text.size()) return false;
        auto first = text.data() + pos;
        auto [ptr, ec] = std::from_chars(first, first + len, value);
        return ec == std::errc{} && ptr == first + len;
    };
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    if (text.size() != 17 && text.size() != 20) return false;
    if (!field(0, 4, y) || text[4] != '-' || !field(5, 2, mo) || text[7] != '-' ||
        !field(8, 2, d) || text[10] != 'T' || !field(11, 2, h) || text[13] != ':' ||
        !field(14, 2, mi))
        return false;
    if (text.size() == 20) {
        if (text[16] != ':' || !field(17, 2, s) || s != 0) return false;
    }
    if (text.back() != 'Z') return false;
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                    std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59) return false;
    out = std::chrono::sys_days{ymd} + std::chrono::hours{h} + std::chrono::minutes{mi};
    return true;
}

inline Timestamp parse_timestamp(std::string_view text) {
    Timestamp t;
    if (!try_parse_timestamp(text, t)) throw DataError("invalid UTC timestamp '" + std::string(text) + "'");
    return t;
}

/// Formats as `YYYY-MM-DDTHH:MM:00Z`.
inline std::string format_timestamp(Timestamp t) {
    auto day = std::chrono::floor<std::chrono::days>(t);
    std::chrono::year_month_day ymd{day};
    auto minutes = (t - day).count();
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:00Z", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long long>(minutes / 60), static_cast<long long>(minutes % 60));
    return buf;
}

/// Day-ahead contract length and imbalance settlement period, both in minutes.
/// The settlement period must divide the contract length.
class MarketResolution {
public:
    MarketResolution(int day_ahead_minutes = 60, int balancing_minutes = 15)
        : day_ahead_minutes_(day_ahead_minutes), balancing_minutes_(balancing_minutes) {
        if (day_ahead_minutes <= 0 || balancing_minutes <= 0)
            throw DomainError("market resolutions must be positive");
        if (day_ahead_minutes % balancing_minutes != 0)
            throw DomainError("day-ahead resolution " + std::to_string(day_ahead_minutes) +
                              " min is not a multiple of balancing resolution " +
                              std::to_string(balancing_minutes) + " min");
    }

    int day_ahead_minutes() const noexcept { return day_ahead_minutes_; }
    int balancing_minutes() const noexcept { return balancing_minutes_; }

    /// Settlement periods per day-ahead contract.
    int periods_per_contract() const noexcept { return day_ahead_minutes_ / balancing_minutes_; }

    /// Hours covered by one day-ahead contract; MW times this gives MWh.
    double contract_hours() const noexcept { return day_ahead_minutes_ / 60.0; }
    double settlement_hours() const noexcept { return balancing_minutes_ / 60.0; }

    bool operator==(const MarketResolution&) const = default;

private:
    int day_ahead_minutes_;
    int balancing_minutes_;
};

struct ContractWindow {
    Timestamp start;
    int resolution_minutes = 60;

    Timestamp end() const { return start + std::chrono::minutes{resolution_minutes}; }
    bool aligned() const {
        auto m = start.time_since_epoch().count();
        return resolution_minutes > 0 && m % resolution_minutes == 0;
    }
    bool contains(const ContractWindow& other) const { return other.start >= start && other.end() <= end(); }

    bool operator==(const ContractWindow&) const = default;
};

inline void require_aligned(const ContractWindow& w) {
    if (!w.aligned())
        throw AlignmentError("window " + format_timestamp(w.start) + " is not aligned to " +
                             std::to_string(w.resolution_minutes) + "-minute boundaries");
}

/// Splits a day-ahead window into its consecutive settlement periods.
inline std::vector<ContractWindow> sub_windows(const ContractWindow& w, const MarketResolution& res) {
    if (w.resolution_minutes != res.day_ahead_minutes())
        throw ShapeError("window resolution " + std::to_string(w.resolution_minutes) +
                         " min differs from the day-ahead resolution");
    require_aligned(w);
    std::vector<ContractWindow> out;
    out.reserve(static_cast<std::size_t>(res.periods_per_contract()));
    for (int i = 0; i < res.periods_per_contract(); ++i)
        out.push_back({w.start + std::chrono::minutes{i * res.balancing_minutes()}, res.balancing_minutes()});
    return out;
}

/// Hourly balancing price as the mean of the settlement-period prices.
///
/// Computed as `v0 + mean(v_i - v0)`, which is exact for constant inputs and
/// keeps the result inside [min, max].
inline double resample_mean(std::span<const double> values, int n) {
    if (n < 1 || values.size() != static_cast<std::size_t>(n))
        throw ShapeError("expected " + std::to_string(n) + " settlement values, got " +
                         std::to_string(values.size()));
    for (double v : values)
        if (!std::isfinite(v)) throw DataError("non-finite settlement value");
    const double anchor = values.front();
    double offset = 0.0;
    for (double v : values) offset += v - anchor;
    double mean = anchor + offset / n;
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return std::clamp(mean, *lo, *hi);
}

}  // namespace windbid
