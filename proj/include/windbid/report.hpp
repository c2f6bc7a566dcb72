#pragma once

// Tabular views of a backtest report: cumulative profit, per-strategy
// histograms and a JSON summary. Nothing here touches the filesystem.

#include <charconv>
#include <cstdio>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "windbid/backtest.hpp"

namespace windbid {

/// Round-trip representation of a double (17 significant digits).
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Shortest representation, used for certificate labels ("0", "0.25", "1").
inline std::string format_label(double v) {
    char buf[40];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

inline std::string series_label(const Series& s) {
    return "alpha_" + format_label(s.alpha_tilde) + "_" + std::string(to_string(s.mode));
}

inline std::string histogram_file_name(const Series& s) {
    return "histogram_" + format_label(s.alpha_tilde) + "_" + std::string(to_string(s.mode)) + ".csv";
}

struct SummaryTables {
    std::string cumulative_csv;
    std::vector<std::pair<std::string, std::string>> histograms;  // file name, CSV text
    nlohmann::ordered_json summary;
};

inline nlohmann::ordered_json config_json(const SweepConfig& c) {
    nlohmann::ordered_json j;
    j["alpha_tildes"] = c.alpha_tildes;
    j["beta_mw"] = c.beta_mw;
    j["day_ahead_minutes"] = c.resolution.day_ahead_minutes();
    j["balancing_minutes"] = c.resolution.balancing_minutes();
    std::vector<std::string> modes;
    for (auto m : c.modes) modes.emplace_back(to_string(m));
    j["modes"] = modes;
    j["horizon_start"] = c.horizon_start ? format_timestamp(*c.horizon_start) : "";
    j["horizon_end"] = c.horizon_end ? format_timestamp(*c.horizon_end) : "";
    return j;
}

inline SummaryTables summarize(const BacktestReport& report) {
    SummaryTables out;

    std::string& cum = out.cumulative_csv;
    cum = "hour_utc";
    for (const auto& s : report.series) cum += "," + series_label(s) + "_eur_per_mw";
    cum += "\n";
    for (std::size_t h = 0; h < report.hours.size(); ++h) {
        cum += format_timestamp(report.hours[h]);
        for (const auto& s : report.series) cum += "," + format_number(s.cumulative[h]);
        cum += "\n";
    }

    for (const auto& s : report.series) {
        std::string csv = "bin_lower_eur_per_mw,bin_upper_eur_per_mw,count\n";
        const auto& hist = s.distribution.histogram;
        for (std::size_t b = 0; b < hist.counts.size(); ++b)
            csv += format_number(hist.edges[b]) + "," + format_number(hist.edges[b + 1]) + "," +
                   std::to_string(hist.counts[b]) + "\n";
        out.histograms.emplace_back(histogram_file_name(s), std::move(csv));
    }

    auto& j = out.summary;
    j["config"] = config_json(report.config);
    j["hours"] = report.hours.size();
    j["share_abs_imbalance_below_100mw"] = report.share_small_imbalance;
    auto gaps = nlohmann::ordered_json::array();
    for (const auto& g : report.gaps) gaps.push_back({{"hour_utc", format_timestamp(g.hour)}, {"reason", g.reason}});
    j["gaps"] = gaps;
    auto series = nlohmann::ordered_json::array();
    for (const auto& s : report.series) {
        nlohmann::ordered_json e;
        e["alpha_tilde"] = s.alpha_tilde;
        e["mode"] = to_string(s.mode);
        e["hours"] = s.hours.size();
        e["total_profit_eur"] = s.total_profit_eur;
        e["total_profit_eur_per_mw"] = s.cumulative.empty() ? 0.0 : s.cumulative.back();
        e["hourly_mean_eur_per_mw"] = s.distribution.mean;
        e["hourly_stddev_eur_per_mw"] = s.distribution.stddev;
        e["hourly_q05_eur_per_mw"] = s.distribution.q05;
        e["hourly_q95_eur_per_mw"] = s.distribution.q95;
        e["infeasible_hours"] = s.infeasible_hours;
        e["scarcity_quarters"] = s.scarcity_quarters;
        e["zero_imbalance_quarters"] = s.zero_imbalance_quarters;
        e["sign_flip_hours"] = s.sign_flip_hours;
        series.push_back(std::move(e));
    }
    j["series"] = series;
    return out;
}

}  // namespace windbid
