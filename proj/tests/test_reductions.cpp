#include <gtest/gtest.h>

#include <map>
#include <random>
#include <vector>

#include "rmaj/encoding.hpp"
#include "rmaj/oracle.hpp"
#include "rmaj/reductions.hpp"

using namespace rmaj;

namespace {

auto oracle_decide(const std::vector<uint32_t>& a, Tau tau) {
    return [&a, tau](uint64_t x, uint64_t y) { return !oracle_majorities<uint32_t>(a, tau, x, y).empty(); };
}

bool intersects(const std::vector<uint32_t>& s, const std::vector<uint32_t>& t) {
    for (auto x : s)
        if (std::find(t.begin(), t.end(), x) != t.end()) return true;
    return false;
}

}  // namespace

TEST(Gadget, Examples) {
    uint32_t next = 3;
    auto g = gadget(2, 1, next);
    EXPECT_EQ(g.size(), 8u);
    EXPECT_EQ((std::vector<uint32_t>(g.begin(), g.begin() + 6)), (std::vector<uint32_t>{2, 2, 2, 2, 1, 1}));
    EXPECT_GT(g[6], 2u);
    EXPECT_GT(g[7], g[6]);
    EXPECT_EQ(gadget(3, 2, next).size(), 24u);
    EXPECT_THROW(gadget(1, 1, next), validation_error);
    EXPECT_THROW(gadget(3, 4, next), validation_error);
}

TEST(Gadget, DensityOfOtherSymbolsIsExactlyOneOverK) {
    for (unsigned k = 2; k <= 6; ++k)
        for (unsigned i = 1; i <= k; ++i) {
            uint32_t next = k + 1;
            auto g = gadget(k, i, next);
            ASSERT_EQ(g.size(), k * gadget_repeat(k));
            for (unsigned j = 1; j <= k; ++j)
                if (j != i) {
                    ASSERT_EQ(density(g, 1, g.size(), j), Fraction(1, k));
                }
            ASSERT_EQ(std::count(g.begin(), g.end(), i), static_cast<long>(k));
        }
}

TEST(BadString, Shape) {
    auto bs = bad_array(2, {{1, 2}});
    EXPECT_EQ(bs.symbols.size(), 18u);
    std::mt19937_64 rng(1);
    auto b3 = bad_array(3, random_permutations(3, 10, rng));
    EXPECT_EQ(b3.symbols.size(), 102u);
    for (const auto& l : b3.landmark_l) EXPECT_EQ(l.size(), 3u);
    for (const auto& r : b3.landmark_r) EXPECT_EQ(r.size(), 3u);
    // dummies occur once
    std::map<uint32_t, int> seen;
    for (auto s : b3.symbols) ++seen[s];
    for (auto [s, c] : seen)
        if (s > 3) {
            EXPECT_EQ(c, 1);
        }
    // rightmost occurrence is subscript 1
    for (unsigned i = 1; i <= 3; ++i) {
        EXPECT_EQ(b3.symbols[b3.landmark_l[i - 1][0] - 1], i);
        EXPECT_GT(b3.landmark_l[i - 1][0], b3.landmark_l[i - 1][1]);
    }
    EXPECT_THROW(bad_array(3, {{1, 1, 2}}), validation_error);
    EXPECT_THROW(bad_array(2, {{1, 2, 3}}), validation_error);
}

TEST(BadString, QueryDensities) {
    for (unsigned k = 2; k <= 4; ++k) {
        std::mt19937_64 rng(k);
        auto bs = bad_array(k, random_permutations(k, 6, rng));
        const uint64_t kp = gadget_repeat(k);
        for (unsigned i = 1; i <= k; ++i)
            for (uint64_t j = 1; j <= bs.m; ++j)
                for (unsigned x = 1; x <= k; ++x) {
                    uint64_t c = x + (i - 1) * kp + (j - 1);
                    uint64_t lo = bs.landmark_l[i - 1][x - 1], hi = bs.landmark_r[j - 1][x - 1];
                    ASSERT_EQ(hi - lo + 1, k * c + 2);
                    ASSERT_LT(Fraction(c, k * c + 2), Fraction(1, k));
                    ASSERT_GE(Fraction(c + 1, k * c + 2), Fraction(1, k));
                    // up to the position of alpha_i in pi_j the range holds c
                    // copies of alpha_i, then one more
                    auto pos = std::find(bs.perms[j - 1].begin(), bs.perms[j - 1].end(), i) - bs.perms[j - 1].begin();
                    if (static_cast<unsigned>(pos) + 1 > x) {
                        ASSERT_EQ(density(bs.symbols, lo, hi, i), Fraction(c, k * c + 2));
                    }
                    if (static_cast<unsigned>(pos) + 1 == x) {
                        ASSERT_EQ(density(bs.symbols, lo, hi, i), Fraction(c + 1, k * c + 2));
                    }
                }
    }
}

TEST(BadString, RecoveryWithOracle) {
    auto bs = bad_array(2, {{1, 2}});
    auto rec = recover(bs, oracle_decide(bs.symbols, bs.tau()));
    ASSERT_TRUE(rec.ok);
    EXPECT_EQ(rec.perms, (std::vector<std::vector<uint32_t>>{{1, 2}}));
    for (unsigned k = 2; k <= 4; ++k) {
        std::mt19937_64 rng(100 + k);
        auto b = bad_array(k, random_permutations(k, 50, rng));
        auto r = recover(b, oracle_decide(b.symbols, b.tau()));
        ASSERT_TRUE(r.ok);
        EXPECT_EQ(r.perms, b.perms);
        EXPECT_LE(r.queries, uint64_t(k) * k * 50);
    }
}

TEST(BadString, RecoveryWithEncoding) {
    for (unsigned k = 2; k <= 4; ++k) {
        std::mt19937_64 rng(200 + k);
        auto b = bad_array(k, random_permutations(k, 100, rng));
        for (Backend be : {Backend::per_candidate, Backend::grouped}) {
            BuildOptions opt;
            opt.backend = be;
            auto enc = MajorityEncoding::build(b.symbols, b.tau(), opt);
            auto r = recover(b, [&](uint64_t x, uint64_t y) { return enc.query_decision(x, y); });
            ASSERT_TRUE(r.ok);
            EXPECT_EQ(r.perms, b.perms);
            EXPECT_LE(r.queries, uint64_t(k) * k * 100);
        }
    }
    std::mt19937_64 rng(9);
    auto b = bad_array(4, random_permutations(4, 50, rng));
    auto enc = MajorityEncoding::build(b.symbols, b.tau());
    auto r = recover(b, [&](uint64_t x, uint64_t y) { return enc.query_decision(x, y); });
    EXPECT_NEAR(r.recovered_bits, 50 * std::log2(24.0), 1e-9);
}

TEST(BadString, BrokenDecideIsReported) {
    auto bs = bad_array(3, {{2, 3, 1}});
    auto rec = recover(bs, [](uint64_t, uint64_t) { return false; });
    EXPECT_FALSE(rec.ok);
    EXPECT_EQ(rec.failed_symbol, 1u);
    EXPECT_EQ(rec.failed_perm, 1u);
}

TEST(Density, Examples) {
    std::vector<uint32_t> a{1, 2, 1, 3};
    EXPECT_EQ(density(a, 1, 4, 9), Fraction(0, 1));
    EXPECT_EQ(density(a, 1, 4, 1), Fraction(1, 2));
    EXPECT_THROW(density(a, 0, 2, 1), range_error);
    EXPECT_THROW(density(a, 2, 5, 1), range_error);
}

TEST(SetIntersection, Construction) {
    auto inst = si_build({{1}, {2}}, 2);
    EXPECT_EQ(inst.array.size(), 4u * 2 * 2);
    // B_1 = 2,1 and B_2 = 1,2
    EXPECT_EQ(inst.array[0], 2u);
    EXPECT_EQ(inst.array[1], 1u);
    auto [x, y] = inst.query_map(1, 2);
    EXPECT_EQ(inst.array[x - 1], 1u);
    EXPECT_EQ(inst.array[y - 1], 2u);
    EXPECT_THROW(si_build({{3}}, 2), validation_error);

    auto with_empty = si_build({{}, {1, 2}}, 2);
    EXPECT_THROW(with_empty.query_map(1, 2), validation_error);
    EXPECT_EQ(with_empty.array[0], 1u);
    EXPECT_EQ(with_empty.array[1], 2u);

    std::mt19937_64 rng(3);
    std::vector<std::vector<uint32_t>> sets(6);
    for (auto& s : sets)
        for (uint32_t e = 1; e <= 8; ++e)
            if (rng() % 3 == 0) s.push_back(e);
    auto r = si_build(sets, 8);
    for (uint64_t i = 0; i < 6; ++i) {
        std::vector<uint32_t> b(r.array.begin() + (r.left_start[i] - 1), r.array.begin() + (r.left_start[i] - 1) + 8);
        std::sort(b.begin(), b.end());
        for (uint32_t e = 1; e <= 8; ++e) ASSERT_EQ(b[e - 1], e);
    }
}

TEST(SetIntersection, OccurrenceIdentity) {
    std::mt19937_64 rng(5);
    for (uint64_t X : {4, 8, 16}) {
        std::vector<std::vector<uint32_t>> sets(8);
        for (auto& s : sets) {
            for (uint32_t e = 1; e <= X; ++e)
                if (rng() % 4 == 0) s.push_back(e);
            if (s.empty()) s.push_back(1 + rng() % X);
        }
        auto inst = si_build(sets, X);
        for (uint64_t i = 1; i <= 8; ++i)
            for (uint64_t j = 1; j <= 8; ++j) {
                auto [x, y] = inst.query_map(i, j);
                uint64_t t = inst.middle_copies(i, j);
                uint64_t si = inst.sets[i - 1].size(), sj = inst.sets[j - 1].size();
                ASSERT_EQ(y - x + 1, si + sj + X * (2 * t + 2));
                // ceil(t + 1 + (si + sj) / 2X) = t + 2
                ASSERT_EQ(t + 1 + (si + sj + 2 * X - 1) / (2 * X), t + 2);
                for (uint32_t e = 1; e <= X; ++e) {
                    uint64_t f = std::count(inst.array.begin() + (x - 1), inst.array.begin() + y, e);
                    bool in_i = std::count(sets[i - 1].begin(), sets[i - 1].end(), e);
                    bool in_j = std::count(sets[j - 1].begin(), sets[j - 1].end(), e);
                    ASSERT_EQ(f, t + in_i + in_j);
                }
            }
    }
}

TEST(SetIntersection, QueriesMatchDirectIntersection) {
    auto same = si_build({{1}, {1}}, 2);
    auto enc_same = MajorityEncoding::build(same.array, same.tau());
    EXPECT_TRUE(si_query(same, 1, 2, [&](uint64_t x, uint64_t y) { return enc_same.query_decision(x, y); }));
    auto apart = si_build({{1}, {2}}, 2);
    auto enc_apart = MajorityEncoding::build(apart.array, apart.tau());
    EXPECT_FALSE(si_query(apart, 1, 2, [&](uint64_t x, uint64_t y) { return enc_apart.query_decision(x, y); }));

    std::mt19937_64 rng(7);
    for (uint64_t X : {4, 8, 16}) {
        for (int round = 0; round < 4; ++round) {
            std::vector<std::vector<uint32_t>> sets(8);
            for (auto& s : sets) {
                for (uint32_t e = 1; e <= X; ++e)
                    if (rng() % 5 == 0) s.push_back(e);
                if (s.empty()) s.push_back(1 + rng() % X);
            }
            auto inst = si_build(sets, X);
            auto enc = MajorityEncoding::build(inst.array, inst.tau());
            auto dec = [&](uint64_t x, uint64_t y) { return enc.query_decision(x, y); };
            for (uint64_t i = 1; i <= 8; ++i)
                for (uint64_t j = i + 1; j <= 8; ++j) {
                    ASSERT_EQ(si_query(inst, i, j, dec), intersects(sets[i - 1], sets[j - 1]));
                    ASSERT_EQ(si_query(inst, i, j, oracle_decide(inst.array, inst.tau())),
                              intersects(sets[i - 1], sets[j - 1]));
                }
        }
    }
}
