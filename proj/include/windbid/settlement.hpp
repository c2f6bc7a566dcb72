#pragma once

// Ex-post profit accounting across the day-ahead and balancing markets.
//
// A day-ahead bid y over a contract with n settlement periods creates an
// obligation y/n per period. Each period settles the open position
// (production - obligation) at the one-price balancing price. In price-impact
// mode that price is re-cleared after adding the producer's open position,
// converted to MW, to the historical system imbalance.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "windbid/errors.hpp"
#include "windbid/market_model.hpp"
#include "windbid/merit_order.hpp"

namespace windbid {

enum class ImpactMode { NoImpact, PriceImpact };

inline std::string_view to_string(ImpactMode m) { return m == ImpactMode::NoImpact ? "no_impact" : "price_impact"; }

inline ImpactMode parse_impact_mode(std::string_view s) {
    if (s == "no_impact") return ImpactMode::NoImpact;
    if (s == "price_impact") return ImpactMode::PriceImpact;
    throw DataError("unknown mode '" + std::string(s) + "' (expected no_impact or price_impact)");
}

struct QuarterOutcome {
    ContractWindow quarter;
    double production_mwh = 0.0;
    double obligation_mwh = 0.0;
    double historical_si_mw = 0.0;
    double projected_si_mw = 0.0;
    double balancing_price_eur_mwh = 0.0;
    double balancing_payoff_eur = 0.0;
    bool scarcity = false;
    bool zero_imbalance = false;
    /// Exchange-published price, carried for audit only; never used for settlement.
    std::optional<double> published_price_eur_mwh;

    double open_position_mwh() const { return production_mwh - obligation_mwh; }
    bool sign_flip() const { return std::signbit(historical_si_mw) != std::signbit(projected_si_mw) &&
                                    historical_si_mw != 0.0 && projected_si_mw != 0.0; }

    bool operator==(const QuarterOutcome&) const = default;
};

struct HourLedgerEntry {
    ContractWindow hour;
    ImpactMode mode = ImpactMode::NoImpact;
    double bid_mwh = 0.0;
    double da_price_eur_mwh = 0.0;
    double da_revenue_eur = 0.0;
    std::vector<QuarterOutcome> quarters;
    double total_profit_eur = 0.0;

    bool operator==(const HourLedgerEntry&) const = default;
};

/// Per-period obligation y/n. The last element absorbs rounding so the
/// left-to-right sum reproduces the bid.
inline std::vector<double> split_obligation(double bid_mwh, int n) {
    if (n < 1) throw DomainError("settlement periods per contract must be >= 1");
    if (!(bid_mwh >= 0.0)) throw DomainError("bid must be >= 0");
    std::vector<double> out(static_cast<std::size_t>(n), bid_mwh / n);
    double head = 0.0;
    for (int i = 0; i + 1 < n; ++i) head += out[static_cast<std::size_t>(i)];
    out.back() = bid_mwh - head;
    return out;
}

/// System imbalance after the producer's open position: psi + (60 / r_B) * (E - y).
inline double project_system_imbalance(double historical_si_mw, double open_position_mwh, int balancing_minutes) {
    if (balancing_minutes <= 0 || 60 % balancing_minutes != 0)
        throw DomainError("balancing resolution must divide 60 minutes");
    return historical_si_mw + (60.0 / balancing_minutes) * open_position_mwh;
}

/// Realised data for one day-ahead contract, one element per settlement period.
struct HourInputs {
    ContractWindow hour;
    double da_price_eur_mwh = 0.0;
    std::vector<double> production_mwh;
    std::vector<double> system_imbalance_mw;
    std::vector<MeritOrderCurve> curves;
    std::vector<std::optional<double>> published_price_eur_mwh;
};

inline HourLedgerEntry settle_hour(const HourInputs& in, double bid_mwh, ImpactMode mode,
                                   const MarketResolution& res) {
    const auto n = static_cast<std::size_t>(res.periods_per_contract());
    const auto label = format_timestamp(in.hour.start);
    if (in.production_mwh.size() != n || in.system_imbalance_mw.size() != n || in.curves.size() != n)
        throw DataError("hour " + label + ": expected " + std::to_string(n) +
                        " settlement periods of production, imbalance and bids");
    if (!std::isfinite(in.da_price_eur_mwh)) throw DataError("hour " + label + ": non-finite day-ahead price");

    const auto quarters = sub_windows(in.hour, res);
    const auto obligations = split_obligation(bid_mwh, res.periods_per_contract());

    HourLedgerEntry entry;
    entry.hour = in.hour;
    entry.mode = mode;
    entry.bid_mwh = bid_mwh;
    entry.da_price_eur_mwh = in.da_price_eur_mwh;
    entry.da_revenue_eur = in.da_price_eur_mwh * bid_mwh;
    entry.total_profit_eur = entry.da_revenue_eur;
    entry.quarters.reserve(n);
    for (std::size_t q = 0; q < n; ++q) {
        QuarterOutcome out;
        out.quarter = quarters[q];
        out.production_mwh = in.production_mwh[q];
        out.obligation_mwh = obligations[q];
        out.historical_si_mw = in.system_imbalance_mw[q];
        out.projected_si_mw =
            project_system_imbalance(out.historical_si_mw, out.open_position_mwh(), res.balancing_minutes());
        const double pricing_si = mode == ImpactMode::NoImpact ? out.historical_si_mw : out.projected_si_mw;
        const auto cleared = clearing_price(in.curves[q], pricing_si);
        out.balancing_price_eur_mwh = cleared.price_eur_mwh;
        out.scarcity = cleared.scarcity;
        out.zero_imbalance = cleared.zero_imbalance;
        out.balancing_payoff_eur = out.balancing_price_eur_mwh * out.open_position_mwh();
        if (q < in.published_price_eur_mwh.size()) out.published_price_eur_mwh = in.published_price_eur_mwh[q];
        entry.total_profit_eur += out.balancing_payoff_eur;
        entry.quarters.push_back(out);
    }
    return entry;
}

}  // namespace windbid
