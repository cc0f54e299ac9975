#include <gtest/gtest.h>

#include <random>

#include "antman/costmodel.hpp"
#include "antman/operators.hpp"
#include "antman/verify.hpp"

using namespace antman;

TEST(CostOf, WorkedExampleThousandByFourHundred) {
    EXPECT_EQ(cost_of(CompressionConfig::dense(1000, 400)).params, 400000);
    EXPECT_EQ(cost_of(CompressionConfig::lgp_shuffle(1000, 400, 10)).params, 40000);
    // 40K from the blocks plus a 400 x 400 mix.
    EXPECT_EQ(cost_of(CompressionConfig::lgp_dense(1000, 400, 10)).params, 200000);
    // 1000*400/(4*10) + 400*400/(4*4) + 400*400/(4*10)
    const auto lr = cost_of(CompressionConfig::lowrank_lgp(1000, 400, 4, 10, 10));
    EXPECT_EQ(lr.params, 24000);
    EXPECT_EQ(lr.madds, lr.params);
    EXPECT_EQ(lr.reduction, Rational(400000, 24000));
}

TEST(CostOf, FlagsReductionBelowOne) {
    // r = 1 SVD stores m*n + n*n, which is larger than the dense matrix.
    const auto c = cost_of(CompressionConfig::svd(4, 4, 1));
    EXPECT_EQ(c.params, 32);
    EXPECT_TRUE(c.below_one);
    EXPECT_FALSE(cost_of(CompressionConfig::dense(4, 4)).below_one);
}

TEST(CostOf, InvalidConfigThrows) {
    EXPECT_THROW(cost_of(CompressionConfig::lgp_shuffle(10, 4, 3)), ConfigError);
}

TEST(ClosedForm, SquareSvdIsHalfRank) {
    for (std::size_t r : {1u, 2u, 4u, 5u, 8u}) {
        EXPECT_EQ(reduction_closed_form(CompressionConfig::svd(40, 40, r)), Rational(r, 2));
    }
}

TEST(ClosedForm, SquareLowRankLgp) {
    for (std::size_t r : {1u, 2u, 4u}) {
        for (std::size_t g : {1u, 2u, 5u, 10u}) {
            const auto cfg = CompressionConfig::lowrank_lgp(400, 400, r, g, g);
            const Rational expected(static_cast<std::int64_t>(r * r * g), static_cast<std::int64_t>(2 * r + g));
            EXPECT_EQ(reduction_closed_form(cfg), expected) << cfg.describe();
        }
    }
}

TEST(ClosedForm, DenseIsOne) { EXPECT_EQ(reduction_closed_form(CompressionConfig::dense(7, 3)), Rational(1)); }

TEST(ClosedForm, AgreesWithCostOfOnSmallSweep) {
    std::size_t checked = 0;
    for (std::size_t m = 1; m <= 36; ++m) {
        for (std::size_t n = 1; n <= 36; ++n) {
            for (const auto& entry : plan(m, n, Rational(1), {OperatorKind::Dense, OperatorKind::SVD,
                                                              OperatorKind::LGPShuffle, OperatorKind::LGPDense,
                                                              OperatorKind::LowRankLGP})) {
                ASSERT_EQ(reduction_closed_form(entry.config), entry.cost.reduction) << entry.config.describe();
                ++checked;
            }
        }
    }
    EXPECT_GT(checked, 1000u);
}

TEST(ClosedForm, MixSideOverrideUsesItsOwnWidth) {
    const auto cfg = CompressionConfig::lgp_dense(4, 8, 2, MixSide::Before);
    EXPECT_EQ(cost_of(cfg).params, 4 * 8 / 2 + 64);
    EXPECT_EQ(reduction_closed_form(cfg), cost_of(cfg).reduction);
}

TEST(CostOf, ParamsMatchInitializedOperators) {
    std::mt19937_64 rng(77);
    for (auto kind : {OperatorKind::Dense, OperatorKind::SVD, OperatorKind::LGPShuffle, OperatorKind::LGPDense,
                      OperatorKind::LowRankLGP}) {
        for (int trial = 0; trial < 40; ++trial) {
            const auto cfg = random_config(kind, 64, rng);
            EXPECT_EQ(static_cast<std::int64_t>(init_weights(cfg, 1).param_count()), cost_of(cfg).params)
                << cfg.describe();
        }
    }
}

TEST(CostOf, LgpShuffleParamsStrictlyDecreaseWithGroups) {
    const auto gs = divisors(std::gcd<std::size_t>(6000, 1500));
    for (std::size_t k = 1; k < gs.size(); ++k) {
        EXPECT_LT(cost_of(CompressionConfig::lgp_shuffle(6000, 1500, gs[k])).params,
                  cost_of(CompressionConfig::lgp_shuffle(6000, 1500, gs[k - 1])).params);
    }
}

TEST(CostOf, LowRankReductionAtLeastRSquaredOverThree) {
    for (std::size_t r : {2u, 4u, 5u, 10u, 20u}) {
        const auto cfg = CompressionConfig::lowrank_lgp(400, 400, r, r, r);
        ASSERT_FALSE(check(cfg)) << cfg.describe();
        EXPECT_GE(cost_of(cfg).reduction, Rational(static_cast<std::int64_t>(r * r), 3));
    }
}

TEST(Divisors, Basic) {
    EXPECT_EQ(divisors(12), (std::vector<std::size_t>{1, 2, 3, 4, 6, 12}));
    EXPECT_EQ(divisors(7), (std::vector<std::size_t>{1, 7}));
    EXPECT_EQ(divisors(1), (std::vector<std::size_t>{1}));
}

TEST(Plan, LstmGateShapeIncludesTenGroups) {
    const std::size_t m = 6000, n = 1500;
    const auto entries = plan(m, n, Rational(10), {OperatorKind::LGPShuffle});
    // Brute force over every integer g rather than the planner's divisor list.
    std::vector<std::size_t> expected;
    for (std::size_t g = 1; g <= n; ++g)
        if (m % g == 0 && n % g == 0 && Rational(static_cast<std::int64_t>(g)) >= Rational(10)) expected.push_back(g);
    std::vector<std::size_t> got;
    for (const auto& e : entries) got.push_back(*e.config.g);
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, expected);
    EXPECT_NE(std::find(got.begin(), got.end(), 10u), got.end());
}

TEST(Plan, UnitTargetIncludesDense) {
    const auto entries = plan(8, 8, Rational(1), {OperatorKind::Dense, OperatorKind::LGPShuffle});
    EXPECT_TRUE(std::any_of(entries.begin(), entries.end(),
                            [](const PlanEntry& e) { return e.config.kind == OperatorKind::Dense; }));
}

TEST(Plan, PrimeDimensionOnlyAdmitsFullGrouping) {
    const auto entries = plan(7, 7, Rational(2), {OperatorKind::LGPShuffle});
    ASSERT_EQ(entries.size(), 1u);
    EXPECT_EQ(*entries[0].config.g, 7u);
    EXPECT_EQ(entries[0].cost.reduction, Rational(7));
}

TEST(Plan, EmptyWhenUnreachable) {
    EXPECT_TRUE(plan(7, 7, Rational(8), {OperatorKind::LGPShuffle}).empty());
}

TEST(Plan, SortedByParamsThenFactorCount) {
    const auto entries = plan(48, 48, Rational(1), {OperatorKind::Dense, OperatorKind::SVD, OperatorKind::LGPShuffle,
                                                    OperatorKind::LGPDense, OperatorKind::LowRankLGP});
    ASSERT_GT(entries.size(), 10u);
    for (std::size_t k = 1; k < entries.size(); ++k) {
        const auto& a = entries[k - 1];
        const auto& b = entries[k];
        ASSERT_LE(a.cost.params, b.cost.params);
        if (a.cost.params == b.cost.params) ASSERT_LE(a.config.factor_count(), b.config.factor_count());
    }
    const auto again = plan(48, 48, Rational(1), {OperatorKind::Dense, OperatorKind::SVD, OperatorKind::LGPShuffle,
                                                  OperatorKind::LGPDense, OperatorKind::LowRankLGP});
    ASSERT_EQ(again.size(), entries.size());
    for (std::size_t k = 0; k < entries.size(); ++k) EXPECT_EQ(again[k].config, entries[k].config);
}

TEST(Plan, RejectsBadArguments) {
    EXPECT_THROW(plan(0, 4, Rational(1), {OperatorKind::Dense}), ConfigError);
    EXPECT_THROW(plan(4, 4, Rational(1, 2), {OperatorKind::Dense}), ConfigError);
}

TEST(Rationals, ParseAndFormat) {
    EXPECT_EQ(parse_rational("10"), Rational(10));
    EXPECT_EQ(parse_rational("8/3"), Rational(8, 3));
    EXPECT_EQ(parse_rational("2.5"), Rational(5, 2));
    EXPECT_EQ(to_string(Rational(8, 3)), "8/3");
    EXPECT_EQ(to_string(Rational(10)), "10");
    EXPECT_THROW(parse_rational("abc"), ConfigError);
    EXPECT_THROW(parse_rational("1/0"), ConfigError);
}
