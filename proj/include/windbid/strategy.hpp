#pragma once

// Risk-constrained day-ahead bidding under a one-price balancing scheme.
//
// Per contract the expected profit is linear in the bid y,
//     (E[price_da] - E[price_bal]) * y + const,
// and the risk certificate alpha bounds the expected squared open position,
//     E[(E - y)^2] = (y - E[E])^2 + Var(E) <= alpha.
// The optimum therefore sits on one edge of the interval
// [E[E] - delta, E[E] + delta] with delta = sqrt(alpha - Var(E)), clipped to
// [0, capacity]. Which edge depends only on the sign of the price spread.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "windbid/errors.hpp"
#include "windbid/market_model.hpp"

namespace windbid {

/// Conditional mean and variance of the energy produced in one contract window.
struct ForecastMoments {
    double mean_mwh = 0.0;
    double variance_mwh2 = 0.0;
};

/// Expected day-ahead and (contract-resolution) balancing prices.
struct PriceExpectation {
    double da_eur_mwh = 0.0;
    double bal_eur_mwh = 0.0;
};

enum class Position { Long, Short, Neutral };

inline std::string_view to_string(Position p) {
    switch (p) {
        case Position::Long: return "long";
        case Position::Short: return "short";
        case Position::Neutral: return "neutral";
    }
    return "neutral";
}

inline Position parse_position(std::string_view s) {
    if (s == "long") return Position::Long;
    if (s == "short") return Position::Short;
    if (s == "neutral") return Position::Neutral;
    throw DataError("unknown position '" + std::string(s) + "'");
}

/// Energy deliverable by the installed capacity over one day-ahead contract.
inline double capacity_mwh(double beta_mw, const MarketResolution& res) { return beta_mw * res.contract_hours(); }

inline void validate(const ForecastMoments& f, double cap_mwh) {
    if (!std::isfinite(f.mean_mwh) || !std::isfinite(f.variance_mwh2))
        throw DataError("forecast moments must be finite");
    if (f.variance_mwh2 < 0.0) throw DataError("forecast variance is negative");
    if (f.mean_mwh < 0.0 || f.mean_mwh > cap_mwh)
        throw DataError("forecast mean " + std::to_string(f.mean_mwh) + " MWh outside [0, " +
                        std::to_string(cap_mwh) + "]");
}

inline void validate(const PriceExpectation& p) {
    if (!std::isfinite(p.da_eur_mwh) || !std::isfinite(p.bal_eur_mwh))
        throw DataError("price expectations must be finite");
}

/// Either an absolute bound on E[(E - y)^2] in MWh^2, or a fraction in [0, 1]
/// interpolating between point-forecast bidding (0) and all-or-nothing (1).
class RiskCertificate {
public:
    static RiskCertificate absolute(double alpha_mwh2) {
        if (!(alpha_mwh2 >= 0.0) || !std::isfinite(alpha_mwh2))
            throw DomainError("risk certificate must be a finite value >= 0");
        return RiskCertificate(false, alpha_mwh2);
    }
    static RiskCertificate normalised(double alpha_tilde) {
        if (!(alpha_tilde >= 0.0 && alpha_tilde <= 1.0))
            throw DomainError("normalised risk certificate must lie in [0, 1]");
        return RiskCertificate(true, alpha_tilde);
    }

    bool is_normalised() const noexcept { return normalised_; }
    double value() const noexcept { return value_; }

private:
    RiskCertificate(bool normalised, double value) : normalised_(normalised), value_(value) {}
    bool normalised_;
    double value_;
};

struct DeltaResult {
    double delta_mwh = 0.0;
    /// alpha < Var(E): no bid can satisfy the constraint; delta is clamped to 0.
    bool infeasible = false;
};

inline DeltaResult delta_from_alpha(double alpha_mwh2, const ForecastMoments& f) {
    if (!(alpha_mwh2 >= 0.0)) throw DomainError("risk certificate must be >= 0");
    if (alpha_mwh2 < f.variance_mwh2) return {0.0, true};
    return {std::sqrt(alpha_mwh2 - f.variance_mwh2), false};
}

/// Allowed deviation for a normalised certificate: alpha_tilde times the
/// largest deviation either price branch can use, max(cap - mean, mean).
inline double normalized_delta(double alpha_tilde, const ForecastMoments& f, double beta_mw,
                               const MarketResolution& res) {
    if (!(alpha_tilde >= 0.0 && alpha_tilde <= 1.0))
        throw DomainError("normalised risk certificate must lie in [0, 1]");
    const double cap = capacity_mwh(beta_mw, res);
    const double all_or_nothing = std::max(cap - f.mean_mwh, f.mean_mwh);
    return alpha_tilde * all_or_nothing;
}

inline DeltaResult resolve_delta(const RiskCertificate& cert, const ForecastMoments& f, double beta_mw,
                                 const MarketResolution& res) {
    if (cert.is_normalised()) return {normalized_delta(cert.value(), f, beta_mw, res), false};
    return delta_from_alpha(cert.value(), f);
}

struct BidDecision {
    double bid_mwh = 0.0;
    Position direction = Position::Neutral;
    double delta_mwh = 0.0;
    /// The capacity (short) or zero (long) bound was active.
    bool clamped = false;
    bool infeasible = false;
};

/// Optimal bid for an allowed deviation `delta_mwh` around the forecast mean.
/// A price tie goes to the long branch.
inline BidDecision compute_optimal_bid(const PriceExpectation& p, const ForecastMoments& f, double delta_mwh,
                                       double beta_mw, const MarketResolution& res) {
    if (!(delta_mwh >= 0.0) || !std::isfinite(delta_mwh)) throw DomainError("deviation must be finite and >= 0");
    if (!(beta_mw > 0.0)) throw DomainError("installed capacity must be > 0");
    validate(p);
    const double cap = capacity_mwh(beta_mw, res);
    validate(f, cap);

    BidDecision d;
    d.delta_mwh = delta_mwh;
    if (p.da_eur_mwh > p.bal_eur_mwh) {
        // Comparing against the headroom (not mean + delta against cap) keeps
        // the all-or-nothing endpoint exactly at cap.
        d.clamped = delta_mwh >= cap - f.mean_mwh;
        d.bid_mwh = d.clamped ? cap : f.mean_mwh + delta_mwh;
        d.direction = Position::Short;
    } else {
        d.clamped = delta_mwh >= f.mean_mwh;
        d.bid_mwh = d.clamped ? 0.0 : f.mean_mwh - delta_mwh;
        d.direction = Position::Long;
    }
    if (delta_mwh == 0.0) {
        d.direction = Position::Neutral;
        d.bid_mwh = f.mean_mwh;
    }
    return d;
}

/// Certificate-to-bid in one step.
inline BidDecision decide_bid(const PriceExpectation& p, const ForecastMoments& f, const RiskCertificate& cert,
                              double beta_mw, const MarketResolution& res) {
    auto delta = resolve_delta(cert, f, beta_mw, res);
    auto d = compute_optimal_bid(p, f, delta.delta_mwh, beta_mw, res);
    d.infeasible = delta.infeasible;
    return d;
}

}  // namespace windbid
