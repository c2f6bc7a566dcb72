#pragma once

// In-memory market dataset: hourly forecasts and prices plus settlement-period
// production, system imbalance and balancing bid ladders.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "windbid/market_model.hpp"
#include "windbid/merit_order.hpp"
#include "windbid/settlement.hpp"
#include "windbid/strategy.hpp"

namespace windbid {

struct DatasetMetadata {
    double beta_mw = 0.0;
    MarketResolution resolution{60, 15};
    std::string timezone = "UTC";
};

struct DatasetBundle {
    DatasetMetadata metadata;
    // Keyed by day-ahead window start.
    std::map<Timestamp, ForecastMoments> forecasts;
    std::map<Timestamp, double> da_prices;
    // Optional; when absent, decisions use the realised prices.
    std::map<Timestamp, PriceExpectation> price_expectations;
    // Keyed by settlement period start.
    std::map<Timestamp, double> production;
    std::map<Timestamp, double> system_imbalance;
    std::map<Timestamp, std::vector<BalancingEnergyBid>> balancing_bids;
    // Optional audit column.
    std::map<Timestamp, double> published_prices;

    /// Every day-ahead window between the first and last hourly row.
    std::vector<Timestamp> horizon() const {
        std::optional<Timestamp> lo, hi;
        auto widen = [&](Timestamp t) {
            if (!lo || t < *lo) lo = t;
            if (!hi || t > *hi) hi = t;
        };
        for (const auto& [t, _] : forecasts) widen(t);
        for (const auto& [t, _] : da_prices) widen(t);
        std::vector<Timestamp> out;
        if (!lo) return out;
        const std::chrono::minutes step{metadata.resolution.day_ahead_minutes()};
        for (auto t = *lo; t <= *hi; t += step) out.push_back(t);
        return out;
    }
};

/// An hour excluded from every series, with the first missing input.
struct Gap {
    Timestamp hour;
    std::string reason;

    bool operator==(const Gap&) const = default;
};

/// Inputs for one hour, or the reason it is a gap. A settlement period without
/// any bid rows is not a gap: it clears against an empty curve.
inline std::variant<HourInputs, Gap> assemble_hour(const DatasetBundle& data, Timestamp hour) {
    const auto& res = data.metadata.resolution;
    if (!data.forecasts.contains(hour)) return Gap{hour, "missing forecast"};
    auto da = data.da_prices.find(hour);
    if (da == data.da_prices.end()) return Gap{hour, "missing day-ahead price"};

    HourInputs in;
    in.hour = {hour, res.day_ahead_minutes()};
    in.da_price_eur_mwh = da->second;
    static const std::vector<BalancingEnergyBid> no_bids;
    for (const auto& q : sub_windows(in.hour, res)) {
        auto prod = data.production.find(q.start);
        if (prod == data.production.end()) return Gap{hour, "missing production for " + format_timestamp(q.start)};
        auto si = data.system_imbalance.find(q.start);
        if (si == data.system_imbalance.end())
            return Gap{hour, "missing system imbalance for " + format_timestamp(q.start)};
        auto bids = data.balancing_bids.find(q.start);
        in.production_mwh.push_back(prod->second);
        in.system_imbalance_mw.push_back(si->second);
        in.curves.push_back(build_curve(bids == data.balancing_bids.end() ? no_bids : bids->second, q));
        auto pub = data.published_prices.find(q.start);
        in.published_price_eur_mwh.push_back(pub == data.published_prices.end() ? std::nullopt
                                                                                : std::optional<double>(pub->second));
    }
    return in;
}

}  // namespace windbid
