#pragma once

// Per-settlement-period merit-order curves and one-price clearing.
//
// Activation order dominates price order: all aFRR volume is activated before
// any mFRR volume. Within a product, upward bids are taken cheapest first and
// downward bids highest-price first. The marginal activated bid sets the price.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "windbid/errors.hpp"
#include "windbid/market_model.hpp"

namespace windbid {

enum class Product { aFRR, mFRR };
enum class BidDirection { Up, Down };

inline std::string_view to_string(Product p) { return p == Product::aFRR ? "aFRR" : "mFRR"; }
inline std::string_view to_string(BidDirection d) { return d == BidDirection::Up ? "up" : "down"; }

inline Product parse_product(std::string_view s) {
    if (s == "aFRR") return Product::aFRR;
    if (s == "mFRR") return Product::mFRR;
    throw DataError("unknown balancing product '" + std::string(s) + "' (expected aFRR or mFRR)");
}

inline BidDirection parse_bid_direction(std::string_view s) {
    if (s == "up") return BidDirection::Up;
    if (s == "down") return BidDirection::Down;
    throw DataError("unknown bid direction '" + std::string(s) + "' (expected up or down)");
}

struct BalancingEnergyBid {
    Product product = Product::aFRR;
    BidDirection direction = BidDirection::Up;
    double volume_mw = 0.0;
    double price_eur_mwh = 0.0;

    bool operator==(const BalancingEnergyBid&) const = default;
};

struct CurveSegment {
    double cumulative_mw = 0.0;
    double price_eur_mwh = 0.0;
    Product product = Product::aFRR;

    bool operator==(const CurveSegment&) const = default;
};

struct MeritOrderCurve {
    ContractWindow quarter;
    std::vector<CurveSegment> up_stack;
    std::vector<CurveSegment> down_stack;

    double up_volume_mw() const { return up_stack.empty() ? 0.0 : up_stack.back().cumulative_mw; }
    double down_volume_mw() const { return down_stack.empty() ? 0.0 : down_stack.back().cumulative_mw; }

    bool operator==(const MeritOrderCurve&) const = default;
};

namespace detail {

inline std::vector<CurveSegment> build_stack(std::vector<BalancingEnergyBid> bids, bool descending) {
    // Full-key sort so the merged volumes are summed in the same order for any
    // permutation of the input.
    std::sort(bids.begin(), bids.end(), [descending](const BalancingEnergyBid& a, const BalancingEnergyBid& b) {
        if (a.product != b.product) return a.product == Product::aFRR;
        if (a.price_eur_mwh != b.price_eur_mwh)
            return descending ? a.price_eur_mwh > b.price_eur_mwh : a.price_eur_mwh < b.price_eur_mwh;
        return a.volume_mw < b.volume_mw;
    });
    std::vector<CurveSegment> stack;
    double cumulative = 0.0;
    for (const auto& bid : bids) {
        cumulative += bid.volume_mw;
        if (!stack.empty() && stack.back().product == bid.product &&
            stack.back().price_eur_mwh == bid.price_eur_mwh) {
            stack.back().cumulative_mw = cumulative;
        } else {
            stack.push_back({cumulative, bid.price_eur_mwh, bid.product});
        }
    }
    return stack;
}

}  // namespace detail

inline void validate(const BalancingEnergyBid& bid) {
    if (!(bid.volume_mw > 0.0) || !std::isfinite(bid.volume_mw))
        throw DataError("balancing bid volume must be a finite value > 0, got " + std::to_string(bid.volume_mw));
    if (!std::isfinite(bid.price_eur_mwh)) throw DataError("balancing bid price must be finite");
}

inline MeritOrderCurve build_curve(std::span<const BalancingEnergyBid> bids, const ContractWindow& quarter) {
    std::vector<BalancingEnergyBid> up, down;
    for (const auto& bid : bids) {
        validate(bid);
        (bid.direction == BidDirection::Up ? up : down).push_back(bid);
    }
    MeritOrderCurve curve;
    curve.quarter = quarter;
    curve.up_stack = detail::build_stack(std::move(up), false);
    curve.down_stack = detail::build_stack(std::move(down), true);
    return curve;
}

struct ClearingResult {
    double price_eur_mwh = 0.0;
    /// Required volume exceeded the offered volume; the deepest segment priced it.
    bool scarcity = false;
    /// System imbalance was exactly zero; priced by convention.
    bool zero_imbalance = false;
};

/// Balancing price for a system imbalance `system_imbalance_mw` (negative =
/// short system). The required volume is its opposite: positive walks the up
/// stack, negative walks the down stack. A volume exactly on a segment
/// boundary clears at the segment ending there.
///
/// Zero imbalance clears at the first up segment (else the first down segment,
/// else 0). With nothing offered in the required direction the result is a
/// scarcity outcome priced at the first segment of the opposite stack, else 0.
inline ClearingResult clearing_price(const MeritOrderCurve& curve, double system_imbalance_mw) {
    if (!std::isfinite(system_imbalance_mw)) throw DataError("system imbalance must be finite");
    auto first_price = [](const std::vector<CurveSegment>& a, const std::vector<CurveSegment>& b) {
        if (!a.empty()) return a.front().price_eur_mwh;
        if (!b.empty()) return b.front().price_eur_mwh;
        return 0.0;
    };

    const double required = -system_imbalance_mw;
    if (required == 0.0) return {first_price(curve.up_stack, curve.down_stack), false, true};

    const auto& stack = required > 0.0 ? curve.up_stack : curve.down_stack;
    const auto& other = required > 0.0 ? curve.down_stack : curve.up_stack;
    const double volume = std::abs(required);
    if (stack.empty()) return {first_price(other, other), true, false};

    auto it = std::lower_bound(stack.begin(), stack.end(), volume,
                               [](const CurveSegment& s, double v) { return s.cumulative_mw < v; });
    if (it == stack.end()) return {stack.back().price_eur_mwh, true, false};
    return {it->price_eur_mwh, false, false};
}

}  // namespace windbid
