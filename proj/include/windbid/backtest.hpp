#pragma once

// Risk-certificate sweeps over a dataset, with and without price impact.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "windbid/dataset.hpp"
#include "windbid/errors.hpp"
#include "windbid/market_model.hpp"
#include "windbid/settlement.hpp"
#include "windbid/strategy.hpp"

namespace windbid {

struct SweepConfig {
    std::vector<double> alpha_tildes{0.0, 0.25, 0.5, 0.75, 1.0};
    double beta_mw = 0.0;
    MarketResolution resolution{60, 15};
    std::vector<ImpactMode> modes{ImpactMode::NoImpact, ImpactMode::PriceImpact};
    /// Half-open [start, end) on day-ahead window starts; unset means the whole dataset.
    std::optional<Timestamp> horizon_start;
    std::optional<Timestamp> horizon_end;
    unsigned parallelism = 1;

    void validate() const {
        if (alpha_tildes.empty()) throw DomainError("at least one risk certificate is required");
        for (std::size_t i = 0; i < alpha_tildes.size(); ++i) {
            if (!(alpha_tildes[i] >= 0.0 && alpha_tildes[i] <= 1.0))
                throw DomainError("normalised risk certificates must lie in [0, 1]");
            if (i > 0 && !(alpha_tildes[i] > alpha_tildes[i - 1]))
                throw DomainError("risk certificates must be strictly increasing");
        }
        if (!(beta_mw > 0.0)) throw DomainError("installed capacity must be > 0");
        if (modes.empty()) throw DomainError("at least one evaluation mode is required");
        for (std::size_t i = 0; i < modes.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (modes[i] == modes[j]) throw DomainError("duplicate evaluation mode");
    }
};

struct Histogram {
    std::vector<double> edges;  // counts.size() + 1 entries, or empty
    std::vector<std::size_t> counts;
};

struct DistributionSummary {
    Histogram histogram;
    double mean = 0.0;
    double stddev = 0.0;
    double q05 = 0.0;
    double q95 = 0.0;
};

struct HourResult {
    HourLedgerEntry entry;
    BidDecision decision;
    PriceExpectation expectation;
};

/// One strategy (certificate) evaluated in one mode.
struct Series {
    double alpha_tilde = 0.0;
    ImpactMode mode = ImpactMode::NoImpact;
    std::vector<HourResult> hours;
    /// Hourly profit per MW installed, and its prefix sum.
    std::vector<double> normalised_profit;
    std::vector<double> cumulative;
    DistributionSummary distribution;
    double total_profit_eur = 0.0;
    std::size_t infeasible_hours = 0;
    std::size_t scarcity_quarters = 0;
    std::size_t zero_imbalance_quarters = 0;
    std::size_t sign_flip_hours = 0;
};

struct BacktestReport {
    SweepConfig config;
    std::vector<Timestamp> hours;  // settled hours, in time order
    std::vector<Gap> gaps;
    std::vector<Series> series;    // certificate-major, then mode in config order
    /// Share of settlement periods with |historical imbalance| < 100 MW.
    double share_small_imbalance = 0.0;

    const Series& find(double alpha_tilde, ImpactMode mode) const {
        for (const auto& s : series)
            if (s.alpha_tilde == alpha_tilde && s.mode == mode) return s;
        throw DomainError("no series for requested certificate and mode");
    }
};

/// Type-7 (linear interpolation) sample quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Freedman-Diaconis edges for a sample; Sturges when the IQR vanishes, a
/// single bin when every value is equal.
inline std::vector<double> freedman_diaconis_edges(std::vector<double> sample) {
    if (sample.empty()) return {};
    std::sort(sample.begin(), sample.end());
    const double lo = sample.front(), hi = sample.back();
    if (lo == hi) return {lo, hi};
    const double n = static_cast<double>(sample.size());
    const double iqr = quantile_sorted(sample, 0.75) - quantile_sorted(sample, 0.25);
    std::size_t bins = iqr > 0.0 ? static_cast<std::size_t>(std::ceil((hi - lo) / (2.0 * iqr / std::cbrt(n))))
                                 : static_cast<std::size_t>(std::ceil(std::log2(n))) + 1;
    bins = std::clamp<std::size_t>(bins, 1, 1000);
    std::vector<double> edges(bins + 1);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i < bins; ++i) edges[i] = lo + width * static_cast<double>(i);
    edges[bins] = hi;
    return edges;
}

/// Counts per bin; the last bin is closed, values outside the edges are clamped.
inline Histogram histogram(const std::vector<double>& sample, std::vector<double> edges) {
    Histogram h;
    if (edges.size() < 2) return h;
    h.counts.assign(edges.size() - 1, 0);
    for (double x : sample) {
        auto it = std::upper_bound(edges.begin(), edges.end(), x);
        auto idx = it == edges.begin() ? 0 : static_cast<std::size_t>(it - edges.begin()) - 1;
        ++h.counts[std::min(idx, h.counts.size() - 1)];
    }
    h.edges = std::move(edges);
    return h;
}

inline DistributionSummary describe(const std::vector<double>& sample, std::vector<double> edges) {
    DistributionSummary d;
    d.histogram = histogram(sample, std::move(edges));
    if (sample.empty()) return d;
    double sum = 0.0;
    for (double x : sample) sum += x;
    d.mean = sum / static_cast<double>(sample.size());
    if (sample.size() > 1) {
        double ss = 0.0;
        for (double x : sample) ss += (x - d.mean) * (x - d.mean);
        d.stddev = std::sqrt(ss / static_cast<double>(sample.size() - 1));
    }
    auto sorted = sample;
    std::sort(sorted.begin(), sorted.end());
    d.q05 = quantile_sorted(sorted, 0.05);
    d.q95 = quantile_sorted(sorted, 0.95);
    return d;
}

namespace detail {

inline void parallel_for(std::size_t count, unsigned parallelism, const auto& body) {
    const unsigned workers = std::max(1u, std::min<unsigned>(parallelism, static_cast<unsigned>(count)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < count; i = next++) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
                next = count;
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// Bids every hour with every certificate and settles it in every mode.
///
/// Decisions use the dataset's price expectations when present for the hour,
/// otherwise the realised day-ahead price and the hourly mean of the
/// merit-order prices at the historical imbalance. Hours with missing inputs
/// are dropped from all series. Output is independent of `parallelism`.
inline BacktestReport run_sweep(const SweepConfig& config, const DatasetBundle& data) {
    config.validate();
    if (!(config.resolution == data.metadata.resolution))
        throw ShapeError("dataset resolution differs from the sweep configuration");

    BacktestReport report;
    report.config = config;

    std::vector<Timestamp> candidates;
    for (auto t : data.horizon()) {
        if (config.horizon_start && t < *config.horizon_start) continue;
        if (config.horizon_end && t >= *config.horizon_end) continue;
        candidates.push_back(t);
    }

    const auto& res = config.resolution;
    const std::size_t strategies = config.alpha_tildes.size();
    const std::size_t modes = config.modes.size();
    struct Slot {
        std::optional<Gap> gap;
        std::vector<HourResult> results;  // strategies * modes
        std::size_t small_imbalance = 0;
    };
    std::vector<Slot> slots(candidates.size());

    detail::parallel_for(candidates.size(), config.parallelism, [&](std::size_t i) {
        auto assembled = assemble_hour(data, candidates[i]);
        if (auto* gap = std::get_if<Gap>(&assembled)) {
            slots[i].gap = *gap;
            return;
        }
        const auto& in = std::get<HourInputs>(assembled);
        const auto& forecast = data.forecasts.at(candidates[i]);

        std::vector<double> baseline;
        for (std::size_t q = 0; q < in.curves.size(); ++q) {
            baseline.push_back(clearing_price(in.curves[q], in.system_imbalance_mw[q]).price_eur_mwh);
            if (std::abs(in.system_imbalance_mw[q]) < 100.0) ++slots[i].small_imbalance;
        }
        PriceExpectation expectation{in.da_price_eur_mwh, resample_mean(baseline, res.periods_per_contract())};
        if (auto it = data.price_expectations.find(candidates[i]); it != data.price_expectations.end())
            expectation = it->second;

        auto& out = slots[i].results;
        out.reserve(strategies * modes);
        for (double alpha_tilde : config.alpha_tildes) {
            const double delta = normalized_delta(alpha_tilde, forecast, config.beta_mw, res);
            const auto decision = compute_optimal_bid(expectation, forecast, delta, config.beta_mw, res);
            for (auto mode : config.modes)
                out.push_back({settle_hour(in, decision.bid_mwh, mode, res), decision, expectation});
        }
    });

    report.series.reserve(strategies * modes);
    for (double alpha_tilde : config.alpha_tildes)
        for (auto mode : config.modes) {
            Series s;
            s.alpha_tilde = alpha_tilde;
            s.mode = mode;
            report.series.push_back(std::move(s));
        }

    std::size_t periods = 0, small = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        auto& slot = slots[i];
        if (slot.gap) {
            report.gaps.push_back(*slot.gap);
            continue;
        }
        report.hours.push_back(candidates[i]);
        periods += static_cast<std::size_t>(res.periods_per_contract());
        small += slot.small_imbalance;
        for (std::size_t k = 0; k < slot.results.size(); ++k) {
            auto& series = report.series[k];
            auto& result = slot.results[k];
            const double normalised = result.entry.total_profit_eur / config.beta_mw;
            series.normalised_profit.push_back(normalised);
            series.cumulative.push_back((series.cumulative.empty() ? 0.0 : series.cumulative.back()) + normalised);
            series.total_profit_eur += result.entry.total_profit_eur;
            series.infeasible_hours += result.decision.infeasible ? 1 : 0;
            bool flipped = false;
            for (const auto& q : result.entry.quarters) {
                series.scarcity_quarters += q.scarcity ? 1 : 0;
                series.zero_imbalance_quarters += q.zero_imbalance ? 1 : 0;
                flipped = flipped || q.sign_flip();
            }
            series.sign_flip_hours += flipped ? 1 : 0;
            series.hours.push_back(std::move(result));
        }
    }
    report.share_small_imbalance = periods == 0 ? 0.0 : static_cast<double>(small) / static_cast<double>(periods);

    // Modes of one certificate share histogram edges so they overlay.
    for (std::size_t a = 0; a < strategies; ++a) {
        std::vector<double> pooled;
        for (std::size_t m = 0; m < modes; ++m) {
            const auto& p = report.series[a * modes + m].normalised_profit;
            pooled.insert(pooled.end(), p.begin(), p.end());
        }
        const auto edges = freedman_diaconis_edges(pooled);
        for (std::size_t m = 0; m < modes; ++m) {
            auto& s = report.series[a * modes + m];
            s.distribution = describe(s.normalised_profit, edges);
        }
    }
    return report;
}

}  // namespace windbid
