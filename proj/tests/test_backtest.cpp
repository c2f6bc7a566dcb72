#include <gtest/gtest.h>

#include <numeric>

#include "test_support.hpp"
#include "windbid/backtest.hpp"
#include "windbid/report.hpp"
#include "windbid/synthetic.hpp"

namespace windbid {
namespace {

using testing::ts;

DatasetBundle dataset(SyntheticScenario s, std::size_t hours, std::uint64_t seed = 3) {
    s.hours = hours;
    s.seed = seed;
    return generate_synthetic(s);
}

SweepConfig config_for(const DatasetBundle& data) {
    SweepConfig c;
    c.beta_mw = data.metadata.beta_mw;
    c.resolution = data.metadata.resolution;
    return c;
}

TEST(RunSweep, PointForecastEndpoint) {
    auto data = dataset(large_producer_preset(), 72);
    auto report = run_sweep(config_for(data), data);
    for (auto mode : {ImpactMode::NoImpact, ImpactMode::PriceImpact}) {
        const auto& s = report.find(0.0, mode);
        ASSERT_EQ(s.hours.size(), 72u);
        for (const auto& h : s.hours) EXPECT_EQ(h.entry.bid_mwh, data.forecasts.at(h.entry.hour.start).mean_mwh);
    }
}

TEST(RunSweep, PerfectForecastEarnsDayAheadOnly) {
    auto s = large_producer_preset();
    s.forecast_dispersion = 0.0;
    s.quarter_dispersion = 0.0;
    auto data = dataset(s, 48);
    auto config = config_for(data);
    config.alpha_tildes = {0.0};
    auto report = run_sweep(config, data);
    double expected = 0.0;
    const auto& series = report.find(0.0, ImpactMode::NoImpact);
    for (std::size_t h = 0; h < report.hours.size(); ++h) {
        const auto hour = report.hours[h];
        for (const auto& q : series.hours[h].entry.quarters) EXPECT_NEAR(q.balancing_payoff_eur, 0.0, 1e-9);
        expected += data.da_prices.at(hour) * data.forecasts.at(hour).mean_mwh / config.beta_mw;
        EXPECT_NEAR(series.cumulative[h], expected, 1e-9 * std::abs(expected));
    }
    EXPECT_EQ(report.find(0.0, ImpactMode::PriceImpact).cumulative, series.cumulative);
}

TEST(RunSweep, DeterministicAcrossParallelism) {
    auto data = dataset(large_producer_preset(), 200);
    auto config = config_for(data);
    auto serial = summarize(run_sweep(config, data));
    config.parallelism = 7;
    auto parallel = summarize(run_sweep(config, data));
    EXPECT_EQ(serial.cumulative_csv, parallel.cumulative_csv);
    EXPECT_EQ(serial.summary.dump(), parallel.summary.dump());
    EXPECT_EQ(serial.histograms, parallel.histograms);
}

TEST(RunSweep, GapHoursDroppedFromEverySeries) {
    auto data = dataset(large_producer_preset(), 24);
    data.production.erase(ts("2024-01-01T10:15Z"));
    data.da_prices.erase(ts("2024-01-01T05:00Z"));
    auto report = run_sweep(config_for(data), data);
    ASSERT_EQ(report.gaps.size(), 2u);
    EXPECT_EQ(report.gaps[0].hour, ts("2024-01-01T05:00Z"));
    EXPECT_EQ(report.gaps[1].hour, ts("2024-01-01T10:00Z"));
    EXPECT_NE(report.gaps[1].reason.find("10:15"), std::string::npos);
    EXPECT_EQ(report.hours.size(), 22u);
    for (const auto& s : report.series) EXPECT_EQ(s.hours.size(), 22u);
}

TEST(RunSweep, HorizonRestriction) {
    auto data = dataset(large_producer_preset(), 48);
    auto config = config_for(data);
    config.horizon_start = ts("2024-01-01T06:00Z");
    config.horizon_end = ts("2024-01-01T18:00Z");
    auto report = run_sweep(config, data);
    ASSERT_EQ(report.hours.size(), 12u);
    EXPECT_EQ(report.hours.front(), ts("2024-01-01T06:00Z"));
}

TEST(RunSweep, ConfigValidation) {
    auto data = dataset(large_producer_preset(), 4);
    auto config = config_for(data);
    config.alpha_tildes = {0.5, 0.25};
    EXPECT_THROW(run_sweep(config, data), DomainError);
    config.alpha_tildes = {};
    EXPECT_THROW(run_sweep(config, data), DomainError);
    config.alpha_tildes = {0.0, 1.5};
    EXPECT_THROW(run_sweep(config, data), DomainError);
    config = config_for(data);
    config.modes = {ImpactMode::NoImpact, ImpactMode::NoImpact};
    EXPECT_THROW(run_sweep(config, data), DomainError);
    config = config_for(data);
    config.resolution = MarketResolution(60, 60);
    EXPECT_THROW(run_sweep(config, data), ShapeError);
}

TEST(RunSweep, UsesSuppliedPriceExpectations) {
    auto data = dataset(large_producer_preset(), 24);
    for (const auto& [t, _] : data.forecasts) data.price_expectations[t] = {100.0, 0.0};
    auto config = config_for(data);
    config.alpha_tildes = {1.0};
    auto report = run_sweep(config, data);
    for (const auto& h : report.find(1.0, ImpactMode::NoImpact).hours) {
        EXPECT_EQ(h.decision.direction, Position::Short);
        EXPECT_EQ(h.entry.bid_mwh, config.beta_mw);
    }
}

TEST(RunSweep, NoImpactProfitNonDecreasingPerHourWithRealisedPrices) {
    auto data = dataset(large_producer_preset(), 300);
    auto report = run_sweep(config_for(data), data);
    const auto& alphas = report.config.alpha_tildes;
    for (std::size_t h = 0; h < report.hours.size(); ++h) {
        for (std::size_t a = 1; a < alphas.size(); ++a) {
            const double lo = report.find(alphas[a - 1], ImpactMode::NoImpact).hours[h].entry.total_profit_eur;
            const double hi = report.find(alphas[a], ImpactMode::NoImpact).hours[h].entry.total_profit_eur;
            EXPECT_GE(hi, lo - 1e-9 * std::abs(lo));
        }
    }
}

TEST(RunSweep, SeriesBookkeeping) {
    auto data = dataset(stress_preset(), 200);
    auto report = run_sweep(config_for(data), data);
    std::size_t scarcity = 0;
    for (const auto& s : report.series) {
        const auto& hist = s.distribution.histogram;
        EXPECT_EQ(std::accumulate(hist.counts.begin(), hist.counts.end(), std::size_t{0}), s.hours.size());
        double running = 0.0;
        std::size_t flips = 0;
        for (std::size_t h = 0; h < s.hours.size(); ++h) {
            running += s.normalised_profit[h];
            EXPECT_DOUBLE_EQ(s.cumulative[h], running);
            bool flipped = false;
            for (const auto& q : s.hours[h].entry.quarters)
                flipped = flipped || std::signbit(q.projected_si_mw) != std::signbit(q.historical_si_mw);
            flips += flipped;
        }
        EXPECT_LE(s.sign_flip_hours, flips);
        scarcity += s.scarcity_quarters;
    }
    EXPECT_GT(scarcity, 0u);
    for (std::size_t i = 0; i + 1 < report.series.size(); i += 2)
        EXPECT_EQ(report.series[i].distribution.histogram.edges, report.series[i + 1].distribution.histogram.edges);
}

TEST(RunSweep, SmallProducerHistogramsCoincide) {
    auto data = dataset(small_producer_preset(), 1000);
    auto report = run_sweep(config_for(data), data);
    for (double a : report.config.alpha_tildes) {
        const auto& x = report.find(a, ImpactMode::NoImpact).distribution.histogram.counts;
        const auto& y = report.find(a, ImpactMode::PriceImpact).distribution.histogram.counts;
        ASSERT_EQ(x.size(), y.size());
        for (std::size_t b = 0; b < x.size(); ++b)
            EXPECT_LE(std::max(x[b], y[b]) - std::min(x[b], y[b]), 1u) << "alpha " << a << " bin " << b;
    }
}

TEST(Histogram, FreedmanDiaconisEdges) {
    EXPECT_TRUE(freedman_diaconis_edges({}).empty());
    EXPECT_EQ(freedman_diaconis_edges({3.0}), (std::vector<double>{3.0, 3.0}));
    // n = 8, IQR = 3.5 (type 7), width = 2 * 3.5 / 2 = 3.5, range 7 -> 2 bins.
    auto edges = freedman_diaconis_edges({1, 2, 3, 4, 5, 6, 7, 8});
    EXPECT_EQ(edges, (std::vector<double>{1.0, 4.5, 8.0}));
    auto h = histogram({1, 2, 3, 4, 5, 6, 7, 8}, edges);
    EXPECT_EQ(h.counts, (std::vector<std::size_t>{4, 4}));
}

TEST(Quantile, Type7) {
    std::vector<double> v{1, 2, 3, 4, 5};
    EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.05), 1.2);
    EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.95), 4.8);
    EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.5), 3.0);
}

TEST(Summarize, EmptyReport) {
    BacktestReport report;
    report.config.beta_mw = 1.0;
    for (double a : report.config.alpha_tildes)
        for (auto m : report.config.modes) {
            Series s;
            s.alpha_tilde = a;
            s.mode = m;
            report.series.push_back(s);
        }
    auto t = summarize(report);
    EXPECT_EQ(t.cumulative_csv.find('\n'), t.cumulative_csv.size() - 1);
    ASSERT_EQ(t.histograms.size(), 10u);
    EXPECT_EQ(t.histograms[0].second, "bin_lower_eur_per_mw,bin_upper_eur_per_mw,count\n");
    EXPECT_EQ(t.summary["hours"], 0);
    for (const auto& s : t.summary["series"]) EXPECT_EQ(s["total_profit_eur"], 0.0);
}

TEST(Summarize, SingleHour) {
    auto data = dataset(large_producer_preset(), 1);
    auto config = config_for(data);
    config.alpha_tildes = {0.5};
    config.modes = {ImpactMode::NoImpact};
    auto report = run_sweep(config, data);
    const auto& s = report.series.at(0);
    ASSERT_EQ(s.cumulative.size(), 1u);
    EXPECT_EQ(s.cumulative[0], s.hours[0].entry.total_profit_eur / config.beta_mw);
    EXPECT_EQ(s.distribution.histogram.counts, (std::vector<std::size_t>{1}));
    auto t = summarize(report);
    EXPECT_EQ(t.histograms[0].first, "histogram_0.5_no_impact.csv");
    EXPECT_NE(t.cumulative_csv.find("alpha_0.5_no_impact_eur_per_mw"), std::string::npos);
}

}  // namespace
}  // namespace windbid
