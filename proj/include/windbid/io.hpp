#pragma once

// File contracts.
//
// A dataset directory holds:
//   metadata.txt            key = value: beta_mw, day_ahead_minutes, balancing_minutes, timezone (UTC)
//   forecasts.csv           timestamp_utc,mean_mwh,variance_mwh2                  (day-ahead resolution)
//   da_prices.csv           timestamp_utc,price_eur_mwh                           (day-ahead resolution)
//   production.csv          timestamp_utc,energy_mwh                              (balancing resolution)
//   system_imbalance.csv    timestamp_utc,si_mw                                   (balancing resolution)
//   balancing_bids.csv      timestamp_utc,product,direction,volume_mw,price_eur_mwh
//   price_expectations.csv  timestamp_utc,da_eur_mwh,bal_eur_mwh                  (optional)
//   published_prices.csv    timestamp_utc,price_eur_mwh                           (optional, audit only)
//
// A report directory holds cumulative.csv, histogram_<alpha>_<mode>.csv,
// ledger.csv and summary.json. Numbers are written with 17 significant digits.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "windbid/backtest.hpp"
#include "windbid/dataset.hpp"
#include "windbid/errors.hpp"
#include "windbid/report.hpp"

namespace windbid::io {

namespace fs = std::filesystem;

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
}

/// A parsed CSV row with the source position of every field.
struct CsvRow {
    std::size_t line = 0;
    std::vector<std::string_view> fields;
    std::vector<std::size_t> columns;
};

/// Strict CSV reader for the fixed-header contracts: no quoting, `.` decimals.
class CsvFile {
public:
    CsvFile(std::string name, std::string text)
        : name_(std::move(name)), text_(std::make_unique<const std::string>(std::move(text))) {
        split();
    }

    static CsvFile open(const fs::path& path) { return CsvFile(path.string(), read_text(path)); }

    const std::string& name() const { return name_; }
    const std::vector<CsvRow>& rows() const { return rows_; }
    std::string_view header() const { return header_; }

    void expect_header(std::initializer_list<std::string_view> header) const {
        std::string expected;
        for (auto h : header) expected += (expected.empty() ? "" : ",") + std::string(h);
        if (header_ != expected)
            throw ParseError(name_, 1, 1, "expected header '" + expected + "', got '" + std::string(header_) + "'");
    }

    [[noreturn]] void fail(const CsvRow& row, std::size_t field, const std::string& what) const {
        throw ParseError(name_, row.line, field < row.columns.size() ? row.columns[field] : 1, what);
    }

    double number(const CsvRow& row, std::size_t field) const {
        auto text = row.fields[field];
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
            fail(row, field, "invalid number '" + std::string(text) + "'");
        if (!std::isfinite(v)) fail(row, field, "non-finite number '" + std::string(text) + "'");
        return v;
    }

    std::optional<double> optional_number(const CsvRow& row, std::size_t field) const {
        if (row.fields[field].empty()) return std::nullopt;
        return number(row, field);
    }

    Timestamp timestamp(const CsvRow& row, std::size_t field) const {
        Timestamp t;
        if (!try_parse_timestamp(row.fields[field], t))
            fail(row, field, "invalid UTC timestamp '" + std::string(row.fields[field]) + "'");
        return t;
    }

    bool flag(const CsvRow& row, std::size_t field) const {
        if (row.fields[field] == "1") return true;
        if (row.fields[field] == "0") return false;
        fail(row, field, "expected 0 or 1");
    }

    template <class F>
    auto parse_field(const CsvRow& row, std::size_t field, F&& parse) const {
        try {
            return parse(row.fields[field]);
        } catch (const DataError& e) {
            fail(row, field, e.what());
        }
    }

private:
    void split() {
        std::string_view all(*text_);
        std::size_t line_no = 0;
        std::size_t width = 0;
        while (!all.empty()) {
            auto eol = all.find('\n');
            auto line = all.substr(0, eol);
            all = eol == std::string_view::npos ? std::string_view{} : all.substr(eol + 1);
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (line_no == 1) {
                header_ = line;
                width = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
                continue;
            }
            if (line.empty()) continue;
            CsvRow row;
            row.line = line_no;
            std::size_t start = 0;
            while (true) {
                auto comma = line.find(',', start);
                row.fields.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
                row.columns.push_back(start + 1);
                if (comma == std::string_view::npos) break;
                start = comma + 1;
            }
            if (row.fields.size() != width)
                throw ParseError(name_, line_no, 1,
                                 "expected " + std::to_string(width) + " fields, got " +
                                     std::to_string(row.fields.size()));
            rows_.push_back(std::move(row));
        }
        if (line_no == 0) throw ParseError(name_, 1, 1, "empty file (missing header)");
    }

    std::string name_;
    // Rows hold views into this buffer; heap-allocated so moves keep them valid.
    std::unique_ptr<const std::string> text_;
    std::string_view header_;
    std::vector<CsvRow> rows_;
};

/// Where each dataset file lives; defaults to the fixed names inside one directory.
struct BundlePaths {
    fs::path metadata, forecasts, da_prices, production, system_imbalance, balancing_bids;
    fs::path price_expectations, published_prices;

    static BundlePaths in_directory(const fs::path& dir) {
        return {dir / "metadata.txt",      dir / "forecasts.csv",          dir / "da_prices.csv",
                dir / "production.csv",    dir / "system_imbalance.csv",   dir / "balancing_bids.csv",
                dir / "price_expectations.csv", dir / "published_prices.csv"};
    }
};

struct LoadOptions {
    /// Overrides metadata.txt when set.
    std::optional<double> beta_mw;
};

struct ValidationReport {
    std::vector<Gap> gaps;
    std::vector<std::string> anomalies;
    std::size_t hourly_rows = 0;
    std::size_t settlement_rows = 0;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["hourly_rows"] = hourly_rows;
        j["settlement_rows"] = settlement_rows;
        auto g = nlohmann::ordered_json::array();
        for (const auto& gap : gaps) g.push_back({{"hour_utc", format_timestamp(gap.hour)}, {"reason", gap.reason}});
        j["gaps"] = g;
        j["anomalies"] = anomalies;
        return j;
    }
};

struct LoadedBundle {
    DatasetBundle bundle;
    ValidationReport validation;
};

/// Parses `key = value` lines; `#` starts a comment.
inline std::map<std::string, std::string> parse_key_values(const std::string& name, const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t\r");
        auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(name, line_no, 1, "expected 'key = value'");
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

inline double parse_double_value(const std::string& key, const std::string& text) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty() || !std::isfinite(v))
        throw DataError("invalid number for '" + key + "': '" + text + "'");
    return v;
}

inline int parse_int_value(const std::string& key, const std::string& text) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw DataError("invalid integer for '" + key + "': '" + text + "'");
    return v;
}

inline DatasetMetadata load_metadata(const fs::path& path) {
    auto kv = parse_key_values(path.string(), read_text(path));
    auto require = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw DataError(path.string() + ": missing key '" + key + "'");
        return it->second;
    };
    DatasetMetadata m;
    m.beta_mw = parse_double_value("beta_mw", require("beta_mw"));
    m.resolution = MarketResolution(parse_int_value("day_ahead_minutes", require("day_ahead_minutes")),
                                    parse_int_value("balancing_minutes", require("balancing_minutes")));
    if (auto it = kv.find("timezone"); it != kv.end()) m.timezone = it->second;
    if (m.timezone != "UTC") throw DataError(path.string() + ": timezone must be UTC, got '" + m.timezone + "'");
    return m;
}

namespace detail {

/// Reads a timestamp-keyed file, rejecting duplicates and off-grid timestamps.
template <class Value, class RowFn>
std::map<Timestamp, Value> load_series(const CsvFile& file, int resolution_minutes, RowFn&& row_fn) {
    std::map<Timestamp, Value> out;
    std::vector<std::string> misaligned;
    for (const auto& row : file.rows()) {
        const auto t = file.timestamp(row, 0);
        if (t.time_since_epoch().count() % resolution_minutes != 0) {
            misaligned.push_back(format_timestamp(t));
            continue;
        }
        auto [it, inserted] = out.emplace(t, row_fn(row));
        if (!inserted)
            throw DuplicateError(file.name() + ":" + std::to_string(row.line) + ": duplicate timestamp " +
                                 format_timestamp(t));
    }
    if (!misaligned.empty()) {
        std::string list;
        for (std::size_t i = 0; i < misaligned.size() && i < 10; ++i) list += (i ? ", " : "") + misaligned[i];
        if (misaligned.size() > 10) list += ", ...";
        throw AlignmentError(file.name() + ": " + std::to_string(misaligned.size()) + " timestamp(s) not on the " +
                             std::to_string(resolution_minutes) + "-minute grid: " + list);
    }
    return out;
}

inline std::map<Timestamp, double> load_scalar_series(const fs::path& path, std::string_view column,
                                                      int resolution_minutes) {
    auto file = CsvFile::open(path);
    file.expect_header({"timestamp_utc", column});
    return load_series<double>(file, resolution_minutes, [&](const CsvRow& row) { return file.number(row, 1); });
}

}  // namespace detail

/// Loads and validates a dataset. Missing settlement periods become gaps;
/// malformed, duplicate, misaligned or invariant-violating rows are errors.
inline LoadedBundle load_bundle(const BundlePaths& paths, const LoadOptions& options = {}) {
    LoadedBundle loaded;
    auto& data = loaded.bundle;
    auto& report = loaded.validation;
    data.metadata = load_metadata(paths.metadata);
    if (options.beta_mw) data.metadata.beta_mw = *options.beta_mw;
    if (!(data.metadata.beta_mw > 0.0)) throw DataError("installed capacity must be > 0");
    const auto& res = data.metadata.resolution;
    const double cap = capacity_mwh(data.metadata.beta_mw, res);

    {
        auto file = CsvFile::open(paths.forecasts);
        file.expect_header({"timestamp_utc", "mean_mwh", "variance_mwh2"});
        data.forecasts = detail::load_series<ForecastMoments>(file, res.day_ahead_minutes(), [&](const CsvRow& row) {
            ForecastMoments f{file.number(row, 1), file.number(row, 2)};
            if (f.variance_mwh2 < 0.0) file.fail(row, 2, "variance must be >= 0");
            if (f.mean_mwh < 0.0 || f.mean_mwh > cap)
                file.fail(row, 1, "mean forecast outside [0, " + format_number(cap) + "] MWh");
            return f;
        });
    }
    data.da_prices = detail::load_scalar_series(paths.da_prices, "price_eur_mwh", res.day_ahead_minutes());
    data.production = detail::load_scalar_series(paths.production, "energy_mwh", res.balancing_minutes());
    data.system_imbalance = detail::load_scalar_series(paths.system_imbalance, "si_mw", res.balancing_minutes());

    {
        auto file = CsvFile::open(paths.balancing_bids);
        file.expect_header({"timestamp_utc", "product", "direction", "volume_mw", "price_eur_mwh"});
        std::vector<std::string> misaligned;
        for (const auto& row : file.rows()) {
            const auto t = file.timestamp(row, 0);
            if (t.time_since_epoch().count() % res.balancing_minutes() != 0) {
                misaligned.push_back(format_timestamp(t));
                continue;
            }
            BalancingEnergyBid bid;
            bid.product = file.parse_field(row, 1, [](std::string_view s) { return parse_product(s); });
            bid.direction = file.parse_field(row, 2, [](std::string_view s) { return parse_bid_direction(s); });
            bid.volume_mw = file.number(row, 3);
            bid.price_eur_mwh = file.number(row, 4);
            if (!(bid.volume_mw > 0.0))
                throw DataError(file.name() + ":" + std::to_string(row.line) + ": volume_mw must be > 0, got " +
                                std::string(row.fields[3]));
            data.balancing_bids[t].push_back(bid);
        }
        if (!misaligned.empty())
            throw AlignmentError(file.name() + ": timestamp(s) not on the settlement grid: " + misaligned.front() +
                                 (misaligned.size() > 1 ? ", ..." : ""));
    }

    if (fs::exists(paths.price_expectations)) {
        auto file = CsvFile::open(paths.price_expectations);
        file.expect_header({"timestamp_utc", "da_eur_mwh", "bal_eur_mwh"});
        data.price_expectations = detail::load_series<PriceExpectation>(
            file, res.day_ahead_minutes(),
            [&](const CsvRow& row) { return PriceExpectation{file.number(row, 1), file.number(row, 2)}; });
    }
    if (fs::exists(paths.published_prices))
        data.published_prices =
            detail::load_scalar_series(paths.published_prices, "price_eur_mwh", res.balancing_minutes());

    report.hourly_rows = data.forecasts.size();
    report.settlement_rows = data.production.size();
    for (auto hour : data.horizon()) {
        auto assembled = assemble_hour(data, hour);
        if (auto* gap = std::get_if<Gap>(&assembled)) report.gaps.push_back(*gap);
    }

    const double period_cap = data.metadata.beta_mw * res.settlement_hours();
    for (const auto& [t, e] : data.production) {
        if (e < 0.0) report.anomalies.push_back("negative production at " + format_timestamp(t));
        else if (e > period_cap * (1.0 + 1e-9))
            report.anomalies.push_back("production above installed capacity at " + format_timestamp(t));
        const Timestamp hour{std::chrono::minutes{t.time_since_epoch().count() -
                                                  t.time_since_epoch().count() % res.day_ahead_minutes()}};
        if (!data.forecasts.contains(hour) && !data.da_prices.contains(hour))
            report.anomalies.push_back("settlement period without day-ahead row at " + format_timestamp(t));
    }
    return loaded;
}

inline LoadedBundle load_bundle(const fs::path& dir, const LoadOptions& options = {}) {
    return load_bundle(BundlePaths::in_directory(dir), options);
}

/// Writes every dataset file (optional files only when non-empty).
inline void write_bundle(const DatasetBundle& data, const fs::path& dir) {
    fs::create_directories(dir);
    const auto& m = data.metadata;
    write_text(dir / "metadata.txt", "beta_mw = " + format_number(m.beta_mw) +
                                         "\nday_ahead_minutes = " + std::to_string(m.resolution.day_ahead_minutes()) +
                                         "\nbalancing_minutes = " + std::to_string(m.resolution.balancing_minutes()) +
                                         "\ntimezone = " + m.timezone + "\n");
    std::string text = "timestamp_utc,mean_mwh,variance_mwh2\n";
    for (const auto& [t, f] : data.forecasts)
        text += format_timestamp(t) + "," + format_number(f.mean_mwh) + "," + format_number(f.variance_mwh2) + "\n";
    write_text(dir / "forecasts.csv", text);

    auto scalar = [&](const std::string& file, const std::string& column, const std::map<Timestamp, double>& series) {
        std::string s = "timestamp_utc," + column + "\n";
        for (const auto& [t, v] : series) s += format_timestamp(t) + "," + format_number(v) + "\n";
        write_text(dir / file, s);
    };
    scalar("da_prices.csv", "price_eur_mwh", data.da_prices);
    scalar("production.csv", "energy_mwh", data.production);
    scalar("system_imbalance.csv", "si_mw", data.system_imbalance);
    if (!data.published_prices.empty()) scalar("published_prices.csv", "price_eur_mwh", data.published_prices);

    text = "timestamp_utc,product,direction,volume_mw,price_eur_mwh\n";
    for (const auto& [t, bids] : data.balancing_bids)
        for (const auto& b : bids)
            text += format_timestamp(t) + "," + std::string(to_string(b.product)) + "," +
                    std::string(to_string(b.direction)) + "," + format_number(b.volume_mw) + "," +
                    format_number(b.price_eur_mwh) + "\n";
    write_text(dir / "balancing_bids.csv", text);

    if (!data.price_expectations.empty()) {
        text = "timestamp_utc,da_eur_mwh,bal_eur_mwh\n";
        for (const auto& [t, p] : data.price_expectations)
            text += format_timestamp(t) + "," + format_number(p.da_eur_mwh) + "," + format_number(p.bal_eur_mwh) + "\n";
        write_text(dir / "price_expectations.csv", text);
    }
}

inline constexpr std::string_view kLedgerHeader =
    "alpha_tilde,mode,hour_utc,bid_mwh,direction,delta_mwh,clamped,infeasible,da_expectation_eur_mwh,"
    "bal_expectation_eur_mwh,da_price_eur_mwh,da_revenue_eur,total_profit_eur,quarter_utc,production_mwh,"
    "obligation_mwh,historical_si_mw,projected_si_mw,balancing_price_eur_mwh,balancing_payoff_eur,scarcity,"
    "zero_imbalance,published_price_eur_mwh";

/// One settlement period per row; hour-level fields repeat on each row.
inline std::string ledger_csv(const BacktestReport& report) {
    std::string out(kLedgerHeader);
    out += "\n";
    for (const auto& s : report.series) {
        const auto alpha = format_number(s.alpha_tilde);
        const auto mode = std::string(to_string(s.mode));
        for (const auto& r : s.hours) {
            const auto& e = r.entry;
            const auto& d = r.decision;
            std::string head = alpha + "," + mode + "," + format_timestamp(e.hour.start) + "," +
                               format_number(e.bid_mwh) + "," + std::string(to_string(d.direction)) + "," +
                               format_number(d.delta_mwh) + "," + (d.clamped ? "1" : "0") + "," +
                               (d.infeasible ? "1" : "0") + "," + format_number(r.expectation.da_eur_mwh) + "," +
                               format_number(r.expectation.bal_eur_mwh) + "," + format_number(e.da_price_eur_mwh) +
                               "," + format_number(e.da_revenue_eur) + "," + format_number(e.total_profit_eur);
            for (const auto& q : e.quarters) {
                out += head + "," + format_timestamp(q.quarter.start) + "," + format_number(q.production_mwh) + "," +
                       format_number(q.obligation_mwh) + "," + format_number(q.historical_si_mw) + "," +
                       format_number(q.projected_si_mw) + "," + format_number(q.balancing_price_eur_mwh) + "," +
                       format_number(q.balancing_payoff_eur) + "," + (q.scarcity ? "1" : "0") + "," +
                       (q.zero_imbalance ? "1" : "0") + "," +
                       (q.published_price_eur_mwh ? format_number(*q.published_price_eur_mwh) : "") + "\n";
            }
        }
    }
    return out;
}

struct LedgerRecord {
    double alpha_tilde = 0.0;
    HourResult result;
};

/// Inverse of ledger_csv. Settlement-period resolution is taken from the
/// spacing of quarter timestamps within each hour (hour length otherwise).
inline std::vector<LedgerRecord> read_ledger(const CsvFile& file, int day_ahead_minutes = 60) {
    if (file.header() != kLedgerHeader) throw ParseError(file.name(), 1, 1, "unexpected ledger header");
    std::vector<LedgerRecord> out;
    const auto& rows = file.rows();
    for (const auto& row : rows) {
        const double alpha = file.number(row, 0);
        const auto mode = file.parse_field(row, 1, [](std::string_view s) { return parse_impact_mode(s); });
        const auto hour = file.timestamp(row, 2);
        const bool new_hour = out.empty() || out.back().alpha_tilde != alpha || out.back().result.entry.mode != mode ||
                              out.back().result.entry.hour.start != hour;
        if (new_hour) {
            LedgerRecord rec;
            rec.alpha_tilde = alpha;
            auto& e = rec.result.entry;
            auto& d = rec.result.decision;
            e.hour = {hour, day_ahead_minutes};
            e.mode = mode;
            e.bid_mwh = file.number(row, 3);
            d.bid_mwh = e.bid_mwh;
            d.direction = file.parse_field(row, 4, [](std::string_view s) { return parse_position(s); });
            d.delta_mwh = file.number(row, 5);
            d.clamped = file.flag(row, 6);
            d.infeasible = file.flag(row, 7);
            rec.result.expectation = {file.number(row, 8), file.number(row, 9)};
            e.da_price_eur_mwh = file.number(row, 10);
            e.da_revenue_eur = file.number(row, 11);
            e.total_profit_eur = file.number(row, 12);
            out.push_back(std::move(rec));
        }
        QuarterOutcome q;
        q.quarter = {file.timestamp(row, 13), day_ahead_minutes};
        q.production_mwh = file.number(row, 14);
        q.obligation_mwh = file.number(row, 15);
        q.historical_si_mw = file.number(row, 16);
        q.projected_si_mw = file.number(row, 17);
        q.balancing_price_eur_mwh = file.number(row, 18);
        q.balancing_payoff_eur = file.number(row, 19);
        q.scarcity = file.flag(row, 20);
        q.zero_imbalance = file.flag(row, 21);
        q.published_price_eur_mwh = file.optional_number(row, 22);
        out.back().result.entry.quarters.push_back(q);
    }
    for (auto& rec : out) {
        auto& quarters = rec.result.entry.quarters;
        const int width = quarters.size() > 1 ? day_ahead_minutes / static_cast<int>(quarters.size()) : day_ahead_minutes;
        for (auto& q : quarters) q.quarter.resolution_minutes = width;
    }
    return out;
}

/// Writes the report files. `run_config` is echoed into summary.json under "run".
inline void write_report(const BacktestReport& report, const fs::path& out_dir,
                         const nlohmann::ordered_json& run_config = nlohmann::ordered_json::object()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) throw Error("cannot create output directory " + out_dir.string());
    auto tables = summarize(report);
    write_text(out_dir / "cumulative.csv", tables.cumulative_csv);
    for (const auto& [name, csv] : tables.histograms) write_text(out_dir / name, csv);
    write_text(out_dir / "ledger.csv", ledger_csv(report));
    tables.summary["run"] = run_config;
    write_text(out_dir / "summary.json", tables.summary.dump(2) + "\n");
}

}  // namespace windbid::io
