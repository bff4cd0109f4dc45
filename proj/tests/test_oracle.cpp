#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "rmaj/oracle.hpp"

using namespace rmaj;

TEST(Oracle, Examples) {
    std::vector<int> a{1, 2, 1};
    auto r = oracle_majorities<int>(a, Tau{1, 2}, 1, 3);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0], (OracleEntry<int>{1, 1, 2}));

    std::vector<int> b{1, 1, 2, 2, 3};
    auto r2 = oracle_majorities<int>(b, Tau{1, 3}, 1, 5);
    ASSERT_EQ(r2.size(), 2u);
    EXPECT_EQ(r2[0].value, 1);
    EXPECT_EQ(r2[1].value, 2);

    for (uint64_t i = 1; i <= 5; ++i) {
        auto single = oracle_majorities<int>(b, Tau{99, 100}, i, i);
        ASSERT_EQ(single.size(), 1u);
        EXPECT_EQ(single[0].first, i);
    }
    EXPECT_THROW(oracle_majorities<int>(b, Tau{1, 2}, 0, 2), range_error);
    EXPECT_THROW(oracle_majorities<int>(b, Tau{1, 2}, 3, 6), range_error);
}

TEST(Oracle, SelfConsistency) {
    std::mt19937_64 rng(6);
    std::vector<uint32_t> a(300);
    for (auto& x : a) x = std::uniform_int_distribution<uint32_t>(0, 5)(rng);
    DenseOracle dense(a, 6);
    for (Tau tau : {Tau{1, 2}, Tau{1, 3}, Tau{1, 7}, Tau{3, 10}}) {
        for (int t = 0; t < 500; ++t) {
            uint64_t i = std::uniform_int_distribution<uint64_t>(1, 300)(rng);
            uint64_t j = std::uniform_int_distribution<uint64_t>(i, 300)(rng);
            auto r = oracle_majorities<uint32_t>(a, tau, i, j);
            ASSERT_EQ(r, dense.majorities(tau, i, j));
            uint64_t sum = 0;
            for (size_t e = 0; e < r.size(); ++e) {
                sum += r[e].count;
                if (e) {
                    ASSERT_LT(r[e - 1].first, r[e].first);
                }
            }
            ASSERT_LE(sum, j - i + 1);
            ASSERT_LE(r.size(), tau.max_answers());
        }
    }
}

TEST(OracleLocate, SmallArraysHaveUniqueMatches) {
    uint64_t ranges = 0;
    for (uint64_t i = 1; i <= 8; ++i)
        for (uint64_t j = i; j <= 8; ++j) {
            EXPECT_NO_THROW(oracle_locate(8, i, j));
            ++ranges;
        }
    EXPECT_EQ(ranges, 36u);
}
