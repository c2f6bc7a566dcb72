#pragma once

// `windbid` command-line front end. Exit codes: 0 success, 1 internal error,
// 2 invalid input.
//
//   windbid bid       --forecasts F --da-expectation F --bal-expectation F --alpha-tilde A --beta-mw B
//   windbid backtest  --data-dir D --out-dir O [--config C] [overrides]
//   windbid price     --bids-file F --si MW [--quarter T]
//   windbid generate  --preset small|large|stress --seed S --hours H --out-dir O
//
// The backtest config file is `key = value` text with keys data_dir, beta_mw,
// alpha_tildes, modes, threads, horizon_start, horizon_end. Flags win over the
// file; WINDBID_DATA_DIR supplies the data directory when neither sets it.

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "windbid/backtest.hpp"
#include "windbid/errors.hpp"
#include "windbid/io.hpp"
#include "windbid/merit_order.hpp"
#include "windbid/report.hpp"
#include "windbid/strategy.hpp"
#include "windbid/synthetic.hpp"

namespace windbid::cli {

namespace detail {

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto b = item.find_first_not_of(" \t");
        auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

inline std::vector<double> parse_alpha_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(io::parse_double_value("alpha_tildes", item));
    return out;
}

inline std::vector<ImpactMode> parse_mode_list(const std::string& text) {
    std::vector<ImpactMode> out;
    for (const auto& item : split_list(text)) out.push_back(parse_impact_mode(item));
    return out;
}

/// Hourly price series from a `timestamp_utc,price_eur_mwh` file. Rows on a
/// finer grid are averaged per contract (all n periods required).
inline std::map<Timestamp, double> load_hourly_prices(const std::string& path, const MarketResolution& res) {
    auto file = io::CsvFile::open(path);
    file.expect_header({"timestamp_utc", "price_eur_mwh"});
    const auto rows = io::detail::load_series<double>(file, res.balancing_minutes(),
                                                      [&](const io::CsvRow& row) { return file.number(row, 1); });
    const bool hourly = std::all_of(rows.begin(), rows.end(), [&](const auto& kv) {
        return kv.first.time_since_epoch().count() % res.day_ahead_minutes() == 0;
    });
    if (hourly) return rows;

    std::map<Timestamp, std::vector<double>> grouped;
    for (const auto& [t, v] : rows) {
        const auto m = t.time_since_epoch().count();
        grouped[Timestamp{std::chrono::minutes{m - m % res.day_ahead_minutes()}}].push_back(v);
    }
    std::map<Timestamp, double> out;
    for (const auto& [hour, values] : grouped) {
        if (values.size() != static_cast<std::size_t>(res.periods_per_contract()))
            throw ShapeError(path + ": hour " + format_timestamp(hour) + " has " + std::to_string(values.size()) +
                             " of " + std::to_string(res.periods_per_contract()) + " settlement prices");
        out[hour] = resample_mean(values, res.periods_per_contract());
    }
    return out;
}

inline int cmd_bid(const std::string& forecasts_path, const std::string& da_path, const std::string& bal_path,
                   std::optional<double> alpha_tilde, std::optional<double> alpha_mwh2, double beta_mw,
                   const MarketResolution& res, const std::string& out_path, std::ostream& out) {
    if (alpha_tilde.has_value() == alpha_mwh2.has_value())
        throw DomainError("exactly one of --alpha-tilde and --alpha-mwh2 is required");
    const auto cert = alpha_tilde ? RiskCertificate::normalised(*alpha_tilde) : RiskCertificate::absolute(*alpha_mwh2);
    if (!(beta_mw > 0.0)) throw DomainError("--beta-mw must be > 0");
    const double cap = capacity_mwh(beta_mw, res);

    auto file = io::CsvFile::open(forecasts_path);
    file.expect_header({"timestamp_utc", "mean_mwh", "variance_mwh2"});
    const auto forecasts = io::detail::load_series<ForecastMoments>(
        file, res.day_ahead_minutes(), [&](const io::CsvRow& row) {
            ForecastMoments f{file.number(row, 1), file.number(row, 2)};
            if (f.variance_mwh2 < 0.0) file.fail(row, 2, "variance must be >= 0");
            if (f.mean_mwh < 0.0 || f.mean_mwh > cap)
                file.fail(row, 1, "mean forecast outside [0, " + format_number(cap) + "] MWh");
            return f;
        });
    const auto da = load_hourly_prices(da_path, res);
    const auto bal = load_hourly_prices(bal_path, res);

    std::set<Timestamp> all;
    for (const auto* m : {&da, &bal}) for (const auto& [t, _] : *m) all.insert(t);
    for (const auto& [t, _] : forecasts) all.insert(t);
    if (all.empty()) throw DataError("no hours to bid");

    std::string csv =
        "timestamp_utc,mean_mwh,variance_mwh2,da_expectation_eur_mwh,bal_expectation_eur_mwh,bid_mwh,direction,"
        "delta_mwh,clamped,infeasible\n";
    const std::chrono::minutes step{res.day_ahead_minutes()};
    for (auto t = *all.begin(); t <= *all.rbegin(); t += step) {
        auto f = forecasts.find(t);
        auto d = da.find(t);
        auto b = bal.find(t);
        if (f == forecasts.end()) throw DataError("missing hour " + format_timestamp(t) + " in " + forecasts_path);
        if (d == da.end()) throw DataError("missing hour " + format_timestamp(t) + " in " + da_path);
        if (b == bal.end()) throw DataError("missing hour " + format_timestamp(t) + " in " + bal_path);
        const PriceExpectation p{d->second, b->second};
        const auto decision = decide_bid(p, f->second, cert, beta_mw, res);
        csv += format_timestamp(t) + "," + format_number(f->second.mean_mwh) + "," +
               format_number(f->second.variance_mwh2) + "," + format_number(p.da_eur_mwh) + "," +
               format_number(p.bal_eur_mwh) + "," + format_number(decision.bid_mwh) + "," +
               std::string(to_string(decision.direction)) + "," + format_number(decision.delta_mwh) + "," +
               (decision.clamped ? "1" : "0") + "," + (decision.infeasible ? "1" : "0") + "\n";
    }
    if (out_path.empty()) out << csv;
    else io::write_text(out_path, csv);
    return 0;
}

struct BacktestFlags {
    std::string data_dir, config_path, out_dir;
    std::optional<double> beta_mw;
    std::string alpha_tildes, modes, horizon_start, horizon_end;
    std::optional<unsigned> threads;
};

inline int cmd_backtest(const BacktestFlags& flags, std::ostream& out) {
    std::map<std::string, std::string> file_values;
    if (!flags.config_path.empty())
        file_values = io::parse_key_values(flags.config_path, io::read_text(flags.config_path));
    auto pick = [&](const std::string& flag, const std::string& key) -> std::string {
        if (!flag.empty()) return flag;
        auto it = file_values.find(key);
        return it == file_values.end() ? std::string{} : it->second;
    };
    static const std::set<std::string> known{"data_dir",      "beta_mw",     "alpha_tildes", "modes",
                                             "threads",       "horizon_start", "horizon_end"};
    for (const auto& [k, _] : file_values)
        if (!known.contains(k)) throw DataError(flags.config_path + ": unknown key '" + k + "'");

    std::string data_dir = pick(flags.data_dir, "data_dir");
    if (data_dir.empty())
        if (const char* env = std::getenv("WINDBID_DATA_DIR")) data_dir = env;
    if (data_dir.empty()) throw DataError("no data directory (use --data-dir, data_dir or WINDBID_DATA_DIR)");
    if (flags.out_dir.empty()) throw DataError("--out-dir is required");

    io::LoadOptions options;
    if (flags.beta_mw) options.beta_mw = flags.beta_mw;
    else if (auto v = pick("", "beta_mw"); !v.empty()) options.beta_mw = io::parse_double_value("beta_mw", v);
    const auto loaded = io::load_bundle(std::filesystem::path(data_dir), options);

    SweepConfig config;
    config.beta_mw = loaded.bundle.metadata.beta_mw;
    config.resolution = loaded.bundle.metadata.resolution;
    if (auto v = pick(flags.alpha_tildes, "alpha_tildes"); !v.empty()) config.alpha_tildes = parse_alpha_list(v);
    if (auto v = pick(flags.modes, "modes"); !v.empty()) config.modes = parse_mode_list(v);
    if (auto v = pick(flags.horizon_start, "horizon_start"); !v.empty()) config.horizon_start = parse_timestamp(v);
    if (auto v = pick(flags.horizon_end, "horizon_end"); !v.empty()) config.horizon_end = parse_timestamp(v);
    if (flags.threads) config.parallelism = *flags.threads;
    else if (auto v = pick("", "threads"); !v.empty())
        config.parallelism = static_cast<unsigned>(std::max(1, io::parse_int_value("threads", v)));

    const auto report = run_sweep(config, loaded.bundle);
    if (report.hours.empty()) throw DataError("empty horizon: no complete hours to settle");

    // Output location and thread count do not affect results and are not echoed.
    nlohmann::ordered_json run;
    run["data_dir"] = data_dir;
    run["config_file"] = flags.config_path;
    run["sweep"] = config_json(config);
    io::write_report(report, flags.out_dir, run);
    io::write_text(std::filesystem::path(flags.out_dir) / "validation.json", loaded.validation.to_json().dump(2) + "\n");

    out << "settled " << report.hours.size() << " hours (" << report.gaps.size() << " gaps) into " << flags.out_dir
        << "\n";
    return 0;
}

inline int cmd_price(const std::string& bids_path, double si_mw, const std::string& quarter, std::ostream& out) {
    auto file = io::CsvFile::open(bids_path);
    file.expect_header({"timestamp_utc", "product", "direction", "volume_mw", "price_eur_mwh"});
    std::optional<Timestamp> wanted;
    if (!quarter.empty()) wanted = parse_timestamp(quarter);
    std::set<Timestamp> seen;
    std::vector<BalancingEnergyBid> bids;
    for (const auto& row : file.rows()) {
        const auto t = file.timestamp(row, 0);
        if (wanted && t != *wanted) continue;
        seen.insert(t);
        BalancingEnergyBid bid;
        bid.product = file.parse_field(row, 1, [](std::string_view s) { return parse_product(s); });
        bid.direction = file.parse_field(row, 2, [](std::string_view s) { return parse_bid_direction(s); });
        bid.volume_mw = file.number(row, 3);
        bid.price_eur_mwh = file.number(row, 4);
        if (!(bid.volume_mw > 0.0))
            throw DataError(bids_path + ":" + std::to_string(row.line) + ": volume_mw must be > 0");
        bids.push_back(bid);
    }
    if (seen.size() > 1) throw DataError(bids_path + " holds several settlement periods; select one with --quarter");
    const Timestamp start = seen.empty() ? (wanted ? *wanted : Timestamp{}) : *seen.begin();
    const auto curve = build_curve(bids, {start, 15});
    const auto result = clearing_price(curve, si_mw);
    out << "price_eur_mwh,scarcity,zero_imbalance\n"
        << format_number(result.price_eur_mwh) << "," << (result.scarcity ? 1 : 0) << ","
        << (result.zero_imbalance ? 1 : 0) << "\n";
    return 0;
}

inline int cmd_generate(const std::string& preset, std::uint64_t seed, std::size_t hours, int balancing_minutes,
                        bool uniform_quarters, const std::string& out_dir, std::ostream& out) {
    auto scenario = preset_by_name(preset);
    scenario.seed = seed;
    scenario.hours = hours;
    scenario.resolution = MarketResolution(60, balancing_minutes);
    scenario.uniform_quarters = uniform_quarters;
    io::write_bundle(generate_synthetic(scenario), out_dir);
    out << "wrote " << hours << " hours (" << preset << ", seed " << seed << ") to " << out_dir << "\n";
    return 0;
}

}  // namespace detail

/// Runs one command. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Risk-constrained day-ahead bidding and balancing-market backtests for wind producers", "windbid"};
    app.require_subcommand(1);

    auto* bid = app.add_subcommand("bid", "Optimal day-ahead bids for one day of hourly inputs");
    std::string forecasts, da_exp, bal_exp, bid_out;
    std::optional<double> alpha_tilde, alpha_mwh2;
    double beta_mw = 0.0;
    int da_minutes = 60, bal_minutes = 15;
    bid->add_option("--forecasts", forecasts, "timestamp_utc,mean_mwh,variance_mwh2")->required();
    bid->add_option("--da-expectation", da_exp, "timestamp_utc,price_eur_mwh (hourly)")->required();
    bid->add_option("--bal-expectation", bal_exp, "timestamp_utc,price_eur_mwh (hourly or settlement periods)")
        ->required();
    bid->add_option("--alpha-tilde", alpha_tilde, "normalised risk certificate in [0, 1]");
    bid->add_option("--alpha-mwh2", alpha_mwh2, "absolute risk certificate, MWh^2");
    bid->add_option("--beta-mw", beta_mw, "installed capacity, MW")->required();
    bid->add_option("--day-ahead-minutes", da_minutes)->capture_default_str();
    bid->add_option("--balancing-minutes", bal_minutes)->capture_default_str();
    bid->add_option("--out", bid_out, "output file (default stdout)");

    auto* backtest = app.add_subcommand("backtest", "Sweep risk certificates over a dataset");
    detail::BacktestFlags bt;
    backtest->add_option("--data-dir", bt.data_dir);
    backtest->add_option("--config", bt.config_path);
    backtest->add_option("--out-dir", bt.out_dir)->required();
    backtest->add_option("--beta-mw", bt.beta_mw);
    backtest->add_option("--alpha-tildes", bt.alpha_tildes, "comma-separated, strictly increasing");
    backtest->add_option("--modes", bt.modes, "comma-separated subset of no_impact,price_impact");
    backtest->add_option("--horizon-start", bt.horizon_start);
    backtest->add_option("--horizon-end", bt.horizon_end);
    backtest->add_option("--threads", bt.threads);

    auto* price = app.add_subcommand("price", "Clear one settlement period against a bid ladder");
    std::string bids_file, quarter;
    double si = 0.0;
    price->add_option("--bids-file", bids_file)->required();
    price->add_option("--si", si, "system imbalance, MW (negative = short)")->required();
    price->add_option("--quarter", quarter, "settlement period start (UTC)");

    auto* generate = app.add_subcommand("generate", "Write a synthetic dataset");
    std::string preset = "large", gen_out;
    std::uint64_t seed = 1;
    std::size_t hours = 1000;
    int gen_bal_minutes = 15;
    bool uniform = false;
    generate->add_option("--preset", preset)->check(CLI::IsMember({"small", "large", "stress"}));
    generate->add_option("--seed", seed);
    generate->add_option("--hours", hours);
    generate->add_option("--balancing-minutes", gen_bal_minutes);
    generate->add_flag("--uniform-quarters", uniform);
    generate->add_option("--out-dir", gen_out)->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*bid)
            return detail::cmd_bid(forecasts, da_exp, bal_exp, alpha_tilde, alpha_mwh2, beta_mw,
                                   MarketResolution(da_minutes, bal_minutes), bid_out, out);
        if (*backtest) return detail::cmd_backtest(bt, out);
        if (*price) return detail::cmd_price(bids_file, si, quarter, out);
        if (*generate) return detail::cmd_generate(preset, seed, hours, gen_bal_minutes, uniform, gen_out, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace windbid::cli
