#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "windbid/windbid.hpp"

namespace windbid::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() / ("windbid_" + tag + "_" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline Timestamp ts(const char* text) { return parse_timestamp(text); }

/// Single-segment ladders: one aFRR up and one aFRR down bid at the same price,
/// so the period clears at `price` for any imbalance below `depth_mw`.
inline std::vector<BalancingEnergyBid> flat_ladder(double price, double depth_mw = 1000.0) {
    return {{Product::aFRR, BidDirection::Up, depth_mw, price}, {Product::aFRR, BidDirection::Down, depth_mw, price}};
}

inline std::string read_file(const std::filesystem::path& p) { return io::read_text(p); }

}  // namespace windbid::testing
