#pragma once

// Exhaustive grid search over the bid, used to cross-check the closed-form
// strategy. Shares no code with strategy.hpp beyond the input structs.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "windbid/errors.hpp"
#include "windbid/market_model.hpp"
#include "windbid/strategy.hpp"

namespace windbid::oracle {

/// Maximises (E[da] - E[bal]) * y over y in {0, step, 2 step, ..., cap} subject to
/// (y - mean)^2 + var <= alpha. Ties go to the feasible point closest to the
/// mean. With no feasible grid point the mean (clipped to [0, cap]) is returned.
inline double brute_force_bid(const PriceExpectation& p, const ForecastMoments& f, double alpha_mwh2,
                              double beta_mw, const MarketResolution& res, double grid_step_mwh) {
    if (!(grid_step_mwh > 0.0)) throw DomainError("grid step must be > 0");
    const double cap = beta_mw * (res.day_ahead_minutes() / 60.0);
    const double spread = p.da_eur_mwh - p.bal_eur_mwh;
    const auto steps = static_cast<std::int64_t>(std::floor(cap / grid_step_mwh));

    bool found = false;
    double best_y = 0.0, best_value = 0.0, best_distance = 0.0;
    auto consider = [&](double y) {
        const double dev = y - f.mean_mwh;
        if (dev * dev + f.variance_mwh2 > alpha_mwh2) return;
        const double value = spread * y;
        const double distance = std::abs(dev);
        if (!found || value > best_value || (value == best_value && distance < best_distance)) {
            found = true;
            best_y = y;
            best_value = value;
            best_distance = distance;
        }
    };
    for (std::int64_t k = 0; k <= steps; ++k) consider(static_cast<double>(k) * grid_step_mwh);
    if (static_cast<double>(steps) * grid_step_mwh < cap) consider(cap);

    if (!found) return std::clamp(f.mean_mwh, 0.0, cap);
    return best_y;
}

}  // namespace windbid::oracle
