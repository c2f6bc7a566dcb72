#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "test_support.hpp"
#include "windbid/merit_order.hpp"

namespace windbid {
namespace {

const ContractWindow kQuarter{testing::ts("2024-01-01T10:00Z"), 15};

MeritOrderCurve two_product_curve() {
    std::vector<BalancingEnergyBid> bids{{Product::aFRR, BidDirection::Up, 100, 60},
                                         {Product::mFRR, BidDirection::Up, 200, 50},
                                         {Product::aFRR, BidDirection::Down, 200, 10}};
    return build_curve(bids, kQuarter);
}

TEST(BuildCurve, AfrrActivatesBeforeCheaperMfrr) {
    auto curve = two_product_curve();
    ASSERT_EQ(curve.up_stack.size(), 2u);
    EXPECT_EQ(curve.up_stack[0], (CurveSegment{100, 60, Product::aFRR}));
    EXPECT_EQ(curve.up_stack[1], (CurveSegment{300, 50, Product::mFRR}));
}

TEST(BuildCurve, SortsByPriceWithinProduct) {
    std::vector<BalancingEnergyBid> bids{{Product::aFRR, BidDirection::Up, 50, 40},
                                         {Product::aFRR, BidDirection::Up, 50, 30}};
    auto curve = build_curve(bids, kQuarter);
    ASSERT_EQ(curve.up_stack.size(), 2u);
    EXPECT_EQ(curve.up_stack[0], (CurveSegment{50, 30, Product::aFRR}));
    EXPECT_EQ(curve.up_stack[1], (CurveSegment{100, 40, Product::aFRR}));
}

TEST(BuildCurve, EmptyBids) {
    auto curve = build_curve({}, kQuarter);
    EXPECT_TRUE(curve.up_stack.empty());
    EXPECT_TRUE(curve.down_stack.empty());
}

TEST(BuildCurve, MergesEqualPricesAndOrdersDownStackDescending) {
    std::vector<BalancingEnergyBid> bids{{Product::aFRR, BidDirection::Down, 30, 5},
                                         {Product::aFRR, BidDirection::Down, 20, 5},
                                         {Product::aFRR, BidDirection::Down, 10, 12},
                                         {Product::mFRR, BidDirection::Down, 40, 30}};
    auto curve = build_curve(bids, kQuarter);
    ASSERT_EQ(curve.down_stack.size(), 3u);
    EXPECT_EQ(curve.down_stack[0], (CurveSegment{10, 12, Product::aFRR}));
    EXPECT_EQ(curve.down_stack[1], (CurveSegment{60, 5, Product::aFRR}));
    EXPECT_EQ(curve.down_stack[2], (CurveSegment{100, 30, Product::mFRR}));
}

TEST(BuildCurve, RejectsNonPositiveVolume) {
    std::vector<BalancingEnergyBid> bids{{Product::aFRR, BidDirection::Up, 0.0, 40}};
    EXPECT_THROW(build_curve(bids, kQuarter), DataError);
    bids[0].volume_mw = -5;
    EXPECT_THROW(build_curve(bids, kQuarter), DataError);
}

TEST(ClearingPrice, WalksUpAndDownStacks) {
    auto curve = two_product_curve();
    EXPECT_EQ(clearing_price(curve, -50).price_eur_mwh, 60.0);
    EXPECT_EQ(clearing_price(curve, -250).price_eur_mwh, 50.0);
    EXPECT_EQ(clearing_price(curve, 80).price_eur_mwh, 10.0);
    auto scarce = clearing_price(curve, -400);
    EXPECT_EQ(scarce.price_eur_mwh, 50.0);
    EXPECT_TRUE(scarce.scarcity);
    EXPECT_FALSE(clearing_price(curve, -250).scarcity);
}

TEST(ClearingPrice, BoundaryBelongsToSegmentEndingThere) {
    auto curve = two_product_curve();
    EXPECT_EQ(clearing_price(curve, -100).price_eur_mwh, 60.0);
    EXPECT_EQ(clearing_price(curve, -100.0000001).price_eur_mwh, 50.0);
    EXPECT_EQ(clearing_price(curve, -300).price_eur_mwh, 50.0);
    EXPECT_FALSE(clearing_price(curve, -300).scarcity);
}

TEST(ClearingPrice, ZeroImbalanceConvention) {
    auto curve = two_product_curve();
    auto r = clearing_price(curve, 0.0);
    EXPECT_EQ(r.price_eur_mwh, 60.0);
    EXPECT_TRUE(r.zero_imbalance);

    std::vector<BalancingEnergyBid> down_only{{Product::aFRR, BidDirection::Down, 10, -7}};
    EXPECT_EQ(clearing_price(build_curve(down_only, kQuarter), 0.0).price_eur_mwh, -7.0);
    EXPECT_EQ(clearing_price(build_curve({}, kQuarter), 0.0).price_eur_mwh, 0.0);
}

TEST(ClearingPrice, EmptyDirectionIsScarcity) {
    std::vector<BalancingEnergyBid> down_only{{Product::aFRR, BidDirection::Down, 10, -7}};
    auto r = clearing_price(build_curve(down_only, kQuarter), -20);
    EXPECT_TRUE(r.scarcity);
    EXPECT_EQ(r.price_eur_mwh, -7.0);
    EXPECT_THROW(clearing_price(build_curve(down_only, kQuarter), NAN), DataError);
}

std::vector<BalancingEnergyBid> random_bids(std::mt19937_64& rng, int count) {
    std::uniform_real_distribution<double> vol(0.5, 80.0), price(-200.0, 400.0);
    std::vector<BalancingEnergyBid> bids;
    for (int i = 0; i < count; ++i) {
        // Coarse prices so equal-price merging is exercised.
        bids.push_back({rng() % 2 ? Product::aFRR : Product::mFRR, rng() % 2 ? BidDirection::Up : BidDirection::Down,
                        vol(rng), std::round(price(rng) / 10.0) * 10.0});
    }
    return bids;
}

void expect_invariants(const std::vector<CurveSegment>& stack, bool descending) {
    for (std::size_t i = 1; i < stack.size(); ++i) {
        EXPECT_GT(stack[i].cumulative_mw, stack[i - 1].cumulative_mw);
        EXPECT_FALSE(stack[i - 1].product == Product::mFRR && stack[i].product == Product::aFRR);
        if (stack[i].product == stack[i - 1].product) {
            if (descending) EXPECT_LT(stack[i].price_eur_mwh, stack[i - 1].price_eur_mwh);
            else EXPECT_GT(stack[i].price_eur_mwh, stack[i - 1].price_eur_mwh);
        }
    }
}

TEST(MeritOrderProperties, InvariantsConservationAndDeterminism) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 300; ++trial) {
        auto bids = random_bids(rng, 1 + static_cast<int>(rng() % 40));
        auto curve = build_curve(bids, kQuarter);
        expect_invariants(curve.up_stack, false);
        expect_invariants(curve.down_stack, true);

        double up = 0.0, down = 0.0;
        for (const auto& b : bids) (b.direction == BidDirection::Up ? up : down) += b.volume_mw;
        EXPECT_NEAR(curve.up_volume_mw(), up, 1e-9 * std::max(1.0, up));
        EXPECT_NEAR(curve.down_volume_mw(), down, 1e-9 * std::max(1.0, down));

        auto shuffled = bids;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        EXPECT_EQ(build_curve(shuffled, kQuarter), curve);
    }
}

TEST(MeritOrderProperties, PriceMonotoneWithinProductBlock) {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 1000; ++trial) {
        auto curve = build_curve(random_bids(rng, 2 + static_cast<int>(rng() % 30)), kQuarter);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (const bool up : {true, false}) {
            const auto& stack = up ? curve.up_stack : curve.down_stack;
            if (stack.empty()) continue;
            std::vector<double> volumes;
            for (int k = 0; k < 20; ++k) volumes.push_back(u(rng) * stack.back().cumulative_mw);
            std::sort(volumes.begin(), volumes.end());
            for (std::size_t k = 1; k < volumes.size(); ++k) {
                if (volumes[k - 1] <= 0.0) continue;
                const double si_a = up ? -volumes[k - 1] : volumes[k - 1];
                const double si_b = up ? -volumes[k] : volumes[k];
                auto seg = [&](double v) {
                    return std::lower_bound(stack.begin(), stack.end(), v,
                                            [](const CurveSegment& s, double x) { return s.cumulative_mw < x; })
                        ->product;
                };
                if (seg(volumes[k - 1]) != seg(volumes[k])) continue;
                const double pa = clearing_price(curve, si_a).price_eur_mwh;
                const double pb = clearing_price(curve, si_b).price_eur_mwh;
                if (up) EXPECT_LE(pa, pb);
                else EXPECT_GE(pa, pb);
            }
        }
    }
}

}  // namespace
}  // namespace windbid
