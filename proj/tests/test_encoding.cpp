#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "rmaj/encoding.hpp"
#include "rmaj/oracle.hpp"

using namespace rmaj;

namespace {

std::vector<uint32_t> random_array(std::mt19937_64& rng, uint64_t n, uint32_t sigma) {
    std::vector<uint32_t> a(n);
    std::uniform_int_distribution<uint32_t> d(0, sigma - 1);
    for (auto& x : a) x = d(rng);
    return a;
}

// Skewed data so that deep levels see repeated candidates.
std::vector<uint32_t> skewed_array(std::mt19937_64& rng, uint64_t n, uint32_t sigma) {
    std::vector<uint32_t> a(n);
    std::geometric_distribution<uint32_t> d(0.35);
    for (auto& x : a) x = std::min(d(rng), sigma - 1);
    return a;
}

std::set<uint32_t> elements_at(const std::vector<uint32_t>& a, const std::vector<uint64_t>& pos) {
    std::set<uint32_t> s;
    for (auto p : pos) s.insert(a[p - 1]);
    return s;
}

// Checks every answer of the encoding on [i, j] against the oracle.
void expect_matches(const MajorityEncoding& enc, const std::vector<uint32_t>& a, Tau tau, uint64_t i, uint64_t j) {
    auto want = oracle_majorities<uint32_t>(a, tau, i, j);
    QueryStats st;
    auto got = enc.query_positions(i, j, &st);
    ASSERT_EQ(got.size(), want.size()) << "[" << i << "," << j << "] tau " << tau.str();
    ASSERT_TRUE(std::is_sorted(got.begin(), got.end()));
    std::set<uint32_t> expect;
    for (const auto& e : want) expect.insert(e.value);
    for (auto p : got) {
        ASSERT_GE(p, i);
        ASSERT_LE(p, j);
    }
    ASSERT_EQ(elements_at(a, got), expect) << "[" << i << "," << j << "]";
    ASSERT_EQ(enc.query_decision(i, j), !want.empty());
    ASSERT_EQ(enc.query_count(i, j), want.size());
    if (!st.micro) {
        ASSERT_LE(st.verified, enc.build_tau().candidate_bound() + st.pointers_followed);
    }
}

void check_random_queries(const MajorityEncoding& enc, const std::vector<uint32_t>& a, Tau tau, std::mt19937_64& rng,
                          int count) {
    const uint64_t n = a.size();
    for (int t = 0; t < count; ++t) {
        uint64_t len = std::min<uint64_t>(n, uint64_t(1) << std::uniform_int_distribution<int>(0, 20)(rng) % 64);
        len = std::uniform_int_distribution<uint64_t>(1, std::max<uint64_t>(1, std::min(n, len)))(rng);
        uint64_t i = std::uniform_int_distribution<uint64_t>(1, n - len + 1)(rng);
        expect_matches(enc, a, tau, i, i + len - 1);
        if (testing::Test::HasFatalFailure()) return;
    }
}

void check_all_ranges(const MajorityEncoding& enc, const std::vector<uint32_t>& a, Tau tau) {
    for (uint64_t i = 1; i <= a.size(); ++i)
        for (uint64_t j = i; j <= a.size(); ++j) {
            expect_matches(enc, a, tau, i, j);
            if (testing::Test::HasFatalFailure()) return;
        }
}

}  // namespace

TEST(Encoding, Examples) {
    std::vector<int> a{1, 2, 1};
    auto enc = MajorityEncoding::build(a, Tau{1, 2});
    EXPECT_EQ(enc.query_positions(1, 3), (std::vector<uint64_t>{1}));
    EXPECT_TRUE(enc.query_decision(1, 3));
    EXPECT_EQ(enc.query_count(1, 3), 1u);

    std::vector<int> b{1, 1, 2, 2, 3};
    auto enc2 = MajorityEncoding::build(b, Tau{1, 3});
    auto pos = enc2.query_positions(1, 5);
    ASSERT_EQ(pos.size(), 2u);
    EXPECT_EQ(b[pos[0] - 1], 1);
    EXPECT_EQ(b[pos[1] - 1], 2);
    EXPECT_EQ(enc2.query_count(1, 5), 2u);

    EXPECT_THROW(enc2.query_positions(0, 2), range_error);
    EXPECT_THROW(enc2.query_positions(3, 2), range_error);
    EXPECT_THROW(enc2.query_positions(1, 6), range_error);
    EXPECT_THROW(MajorityEncoding::build(std::vector<int>{}, Tau{1, 2}), validation_error);
    EXPECT_THROW(MajorityEncoding::build(b, Tau{0, 2}), validation_error);
    EXPECT_THROW(MajorityEncoding::build(b, Tau{2, 2}), validation_error);
}

TEST(Encoding, UnaryDirectory) {
    std::vector<uint64_t> counts{2, 6, 4};
    EXPECT_EQ(unary_directory(counts).str(), "1001000000100001");
    EXPECT_EQ(unary_directory(std::vector<uint64_t>{}).str(), "1");
}

TEST(Encoding, ConstantArrayStoresOnlyAtTheTop) {
    std::vector<uint32_t> a(32, 7);
    BuildOptions opt;
    opt.z = 0;
    auto enc = MajorityEncoding::build(a, Tau{1, 2}, opt);
    const auto& g = enc.geometry();
    EXPECT_EQ(enc.first_level(), 0u);
    EXPECT_EQ(enc.stored_total(g.top_level()), g.quadruples(g.top_level()));
    EXPECT_EQ(enc.pointer_total(g.top_level()), 0u);
    for (unsigned k = 0; k < g.top_level(); ++k) {
        EXPECT_EQ(enc.stored_total(k), 0u);
        EXPECT_EQ(enc.pointer_total(k), g.quadruples(k));
    }
    for (uint64_t i = 1; i <= 32; ++i)
        for (uint64_t j = i; j <= 32; ++j) {
            ASSERT_TRUE(enc.query_decision(i, j));
            ASSERT_EQ(enc.query_positions(i, j), (std::vector<uint64_t>{i}));
        }
    EXPECT_EQ(enc.candidate_frequency(g.top_level(), 0, 0, 1, 32), 32u);
}

TEST(Encoding, AllDistinctStoresNothingAboveLevelOne) {
    std::vector<uint32_t> a(64);
    std::iota(a.begin(), a.end(), 0);
    BuildOptions opt;
    opt.z = 0;
    auto enc = MajorityEncoding::build(a, Tau{1, 2}, opt);
    for (unsigned k = 2; k <= enc.geometry().top_level(); ++k) {
        EXPECT_EQ(enc.stored_total(k), 0u);
        EXPECT_EQ(enc.pointer_total(k), 0u);
    }
    for (uint64_t i = 1; i + 2 <= 64; ++i) EXPECT_FALSE(enc.query_decision(i, i + 2));
    for (uint64_t i = 1; i <= 64; ++i) EXPECT_EQ(enc.query_positions(i, i), (std::vector<uint64_t>{i}));
}

TEST(Encoding, MatchesOracleOnRandomArrays) {
    std::mt19937_64 rng(21);
    const Tau taus[] = {{1, 2}, {1, 3}, {1, 5}, {1, 8}, {2, 7}, {1, 64}};
    for (int round = 0; round < 48; ++round) {
        uint64_t n = std::uniform_int_distribution<uint64_t>(1, 700)(rng);
        uint32_t sigma = std::array<uint32_t, 4>{2, 5, 40, 1000}[round % 4];
        Tau tau = taus[round % 6];
        auto a = round % 2 ? skewed_array(rng, n, sigma) : random_array(rng, n, sigma);
        BuildOptions opt;
        opt.backend = round % 3 == 0 ? Backend::grouped : Backend::per_candidate;
        if (round % 5 == 1) opt.z = 0;
        auto enc = MajorityEncoding::build(a, tau, opt);
        check_random_queries(enc, a, tau, rng, 300);
        if (HasFatalFailure()) return;
    }
}

TEST(Encoding, MatchesOracleOnEveryRangeOfSmallArrays) {
    std::mt19937_64 rng(4);
    for (int round = 0; round < 40; ++round) {
        uint64_t n = std::uniform_int_distribution<uint64_t>(1, 40)(rng);
        auto a = random_array(rng, n, round % 2 ? 2 : 4);
        Tau tau = round % 3 ? Tau{1, 2} : Tau{1, 3};
        BuildOptions opt;
        opt.z = round % 4 == 0 ? 4 : 0;
        opt.backend = round % 2 ? Backend::grouped : Backend::per_candidate;
        auto enc = MajorityEncoding::build(a, tau, opt);
        check_all_ranges(enc, a, tau);
        if (HasFatalFailure()) return;
    }
}

TEST(Encoding, ThresholdAboveHalfUsesTheHalfStructure) {
    std::mt19937_64 rng(9);
    auto a = random_array(rng, 200, 3);
    Tau tau{3, 4};
    auto enc = MajorityEncoding::build(a, tau);
    EXPECT_EQ(enc.build_tau(), (Tau{1, 2}));
    EXPECT_EQ(enc.tau(), tau);
    check_random_queries(enc, a, tau, rng, 2000);
}

TEST(Encoding, SingleChargeAndCandidateBound) {
    std::mt19937_64 rng(17);
    for (int round = 0; round < 20; ++round) {
        uint64_t n = std::uniform_int_distribution<uint64_t>(8, 500)(rng);
        auto a = round % 2 ? skewed_array(rng, n, 6) : random_array(rng, n, 3);
        Tau tau = round % 3 ? Tau{1, 2} : Tau{1, 4};
        BuildTrace trace;
        BuildOptions opt;
        opt.z = 0;
        opt.trace = &trace;
        auto enc = MajorityEncoding::build(a, tau, opt);
        auto [ranks, sigma] = rank_reduce<uint32_t>(a);
        for (uint64_t x = 0; x < n; ++x) ASSERT_LE(trace.sponsor_levels[x].size(), 1u) << "position " << x;
        for (const auto& q : trace.quadruples) {
            ASSERT_LE(q.candidates.size(), tau.candidate_bound());
            ASSERT_EQ(q.stored.size() + q.pointers.size(), q.candidates.size());
            auto levels = level_table(n);
            auto d = quadruple_list(levels[q.k])[q.offset];
            ASSERT_EQ(candidates<uint32_t>(ranks, d, tau), q.candidates);
        }
    }
}

TEST(Encoding, DirectoriesAndPointersAreConsistent) {
    std::mt19937_64 rng(23);
    for (int round = 0; round < 20; ++round) {
        uint64_t n = std::uniform_int_distribution<uint64_t>(8, 3000)(rng);
        auto a = skewed_array(rng, n, 12);
        Tau tau = round % 2 ? Tau{1, 2} : Tau{1, 6};
        BuildOptions opt;
        opt.backend = round % 3 ? Backend::per_candidate : Backend::grouped;
        auto enc = MajorityEncoding::build(a, tau, opt);
        const auto& g = enc.geometry();
        for (unsigned k = enc.first_level(); k <= g.top_level(); ++k) {
            uint64_t stored = 0, ptrs = 0;
            for (uint64_t l = 0; l < g.quadruples(k); ++l) {
                stored += enc.stored_count(k, l);
                ptrs += enc.pointer_count(k, l);
                for (const auto& t : enc.pointers(k, l)) {
                    ASSERT_GT(t.k, k);
                    ASSERT_LT(t.slot, enc.stored_count(t.k, t.offset));
                    ASSERT_TRUE(g.extent_contains_range(t.k, t.offset, g.range_start(k, l), g.range_length(k)));
                }
            }
            ASSERT_EQ(stored, enc.stored_total(k));
            ASSERT_EQ(ptrs, enc.pointer_total(k));
            if (enc.backend() == Backend::per_candidate) {
                ASSERT_EQ(enc.vector_bits(k), stored * g.extent_length(k));
            }
        }
    }
}

TEST(Encoding, BackendsAgree) {
    std::mt19937_64 rng(31);
    for (int round = 0; round < 12; ++round) {
        uint64_t n = std::uniform_int_distribution<uint64_t>(1, 2000)(rng);
        auto a = round % 2 ? skewed_array(rng, n, 30) : random_array(rng, n, 4);
        Tau tau = std::array<Tau, 3>{Tau{1, 2}, Tau{1, 7}, Tau{1, 40}}[round % 3];
        BuildOptions pc, gr;
        pc.backend = Backend::per_candidate;
        gr.backend = Backend::grouped;
        auto e1 = MajorityEncoding::build(a, tau, pc);
        auto e2 = MajorityEncoding::build(a, tau, gr);
        for (int t = 0; t < 500; ++t) {
            uint64_t i = std::uniform_int_distribution<uint64_t>(1, n)(rng);
            uint64_t j = std::uniform_int_distribution<uint64_t>(i, n)(rng);
            ASSERT_EQ(elements_at(a, e1.query_positions(i, j)), elements_at(a, e2.query_positions(i, j)));
        }
    }
}

TEST(Encoding, GroupedBackendIsChosenForSmallTau) {
    std::vector<uint32_t> a(64, 1);
    EXPECT_EQ(MajorityEncoding::build(a, Tau{1, 64}).backend(), Backend::grouped);
    EXPECT_EQ(MajorityEncoding::build(a, Tau{1, 8}).backend(), Backend::per_candidate);
}

TEST(Encoding, CandidateFrequencyMatchesScan) {
    std::mt19937_64 rng(41);
    for (Backend backend : {Backend::per_candidate, Backend::grouped}) {
        auto a = skewed_array(rng, 1500, 10);
        BuildOptions opt;
        opt.backend = backend;
        opt.z = 0;
        auto enc = MajorityEncoding::build(a, Tau{1, 4}, opt);
        BuildTrace trace;
        opt.trace = &trace;
        MajorityEncoding::build(a, Tau{1, 4}, opt);
        auto [ranks, sigma] = rank_reduce<uint32_t>(a);
        const auto& g = enc.geometry();
        for (const auto& q : trace.quadruples) {
            for (size_t c = 0; c < q.stored.size(); ++c) {
                uint64_t ext = g.extent_start(q.k, q.offset), elen = g.extent_length(q.k);
                for (int t = 0; t < 5; ++t) {
                    uint64_t off = std::uniform_int_distribution<uint64_t>(0, elen - 1)(rng);
                    uint64_t s = g.position_at(ext, off);
                    if (s >= a.size()) continue;
                    uint64_t maxlen = std::min(elen - off, a.size() - s);
                    uint64_t len = std::uniform_int_distribution<uint64_t>(1, maxlen)(rng);
                    uint64_t expect = 0;
                    for (uint64_t x = s; x < s + len; ++x) expect += ranks[x] == q.stored[c];
                    ASSERT_EQ(enc.candidate_frequency(q.k, q.offset, c, s + 1, s + len), expect);
                }
            }
            EXPECT_THROW(enc.candidate_frequency(q.k, q.offset, q.stored.size(), 1, 1), addressing_error);
        }
    }
}

TEST(Encoding, WorkBound) {
    std::mt19937_64 rng(5);
    auto a = skewed_array(rng, 4096, 50);
    for (Tau tau : {Tau{1, 2}, Tau{1, 16}}) {
        auto enc = MajorityEncoding::build(a, tau);
        const uint64_t bound = tau.candidate_bound();
        const uint64_t levels = enc.geometry().top_level() + 1 - enc.first_level();
        for (int t = 0; t < 3000; ++t) {
            uint64_t i = std::uniform_int_distribution<uint64_t>(1, 4096)(rng);
            uint64_t j = std::uniform_int_distribution<uint64_t>(i, 4096)(rng);
            QueryStats st;
            enc.query_positions(i, j, &st);
            if (st.micro) continue;
            ASSERT_LE(st.verified, bound + st.pointers_followed);
            ASSERT_LE(st.pointers_followed, levels * bound);
        }
    }
}

TEST(Encoding, SpaceReportAddsUp) {
    std::mt19937_64 rng(2);
    auto a = random_array(rng, 5000, 100);
    auto enc = MajorityEncoding::build(a, Tau{1, 8});
    auto r = enc.space_report();
    EXPECT_EQ(r.total, r.candidate_bits + r.directories + r.pointers + r.micro + r.backend + r.header);
    EXPECT_EQ(r.total, 8 * enc.serialize().size());
    EXPECT_DOUBLE_EQ(r.bits_per_element, double(r.total) / 5000);
}

TEST(Micro, ScanBranch) {
    std::vector<uint32_t> a{1, 1, 2};
    BuildOptions opt;
    opt.branch = MicroBranch::scan;
    opt.z = 4;
    auto enc = MajorityEncoding::build(a, Tau{1, 2}, opt);
    EXPECT_EQ(enc.micro_level(), 0);
    EXPECT_EQ(enc.micro_query(1, 3), (std::vector<uint64_t>{1}));
    for (uint64_t i = 1; i <= 3; ++i) EXPECT_EQ(enc.micro_query(i, i), (std::vector<uint64_t>{i}));

    std::mt19937_64 rng(8);
    for (int round = 0; round < 30; ++round) {
        uint64_t n = std::uniform_int_distribution<uint64_t>(1, 300)(rng);
        auto b = random_array(rng, n, 1 + round % 7);
        Tau tau = round % 2 ? Tau{1, 2} : Tau{1, 3};
        opt.z = std::array<uint64_t, 4>{4, 8, 16, 64}[round % 4];
        auto e = MajorityEncoding::build(b, tau, opt);
        check_random_queries(e, b, tau, rng, 400);
        if (HasFatalFailure()) return;
    }
}

TEST(Micro, EncodedBranch) {
    std::mt19937_64 rng(10);
    for (int round = 0; round < 24; ++round) {
        uint64_t n = std::uniform_int_distribution<uint64_t>(1, 200)(rng);
        auto b = random_array(rng, n, 1 + round % 5);
        Tau tau = round % 2 ? Tau{1, 2} : Tau{1, 3};
        BuildOptions opt;
        opt.branch = MicroBranch::encoded;
        opt.z = std::array<uint64_t, 3>{4, 8, 16}[round % 3];
        opt.strict_lookup = round % 4 == 0;
        auto e = MajorityEncoding::build(b, tau, opt);
        EXPECT_EQ(e.branch(), MicroBranch::encoded);
        check_all_ranges(e, b, tau);
        if (HasFatalFailure()) return;
    }
}

TEST(Micro, OutsideRegimeIsRejected) {
    std::vector<uint32_t> a(64, 3);
    BuildOptions opt;
    opt.branch = MicroBranch::scan;
    opt.z = 4;
    auto enc = MajorityEncoding::build(a, Tau{1, 2}, opt);
    EXPECT_THROW(enc.micro_query(1, 64), addressing_error);
    EXPECT_NO_THROW(enc.micro_query(2, 3));
}

TEST(Serialization, RoundTrip) {
    std::mt19937_64 rng(12);
    for (int round = 0; round < 16; ++round) {
        uint64_t n = std::uniform_int_distribution<uint64_t>(1, 3000)(rng);
        auto a = round % 2 ? skewed_array(rng, n, 20) : random_array(rng, n, 300);
        Tau tau = std::array<Tau, 4>{Tau{1, 2}, Tau{1, 9}, Tau{1, 100}, Tau{5, 6}}[round % 4];
        BuildOptions opt;
        if (round % 4 == 1) opt.branch = MicroBranch::encoded, opt.z = 8;
        auto enc = MajorityEncoding::build(a, tau, opt);
        std::string bytes = enc.serialize();
        auto back = MajorityEncoding::deserialize(bytes);
        ASSERT_EQ(back.serialize(), bytes);
        for (int t = 0; t < 200; ++t) {
            uint64_t i = std::uniform_int_distribution<uint64_t>(1, n)(rng);
            uint64_t j = std::uniform_int_distribution<uint64_t>(i, n)(rng);
            ASSERT_EQ(back.query_positions(i, j), enc.query_positions(i, j));
        }
    }
}

TEST(Serialization, RejectsDamagedContainers) {
    std::vector<uint32_t> a{1, 2, 1, 1, 3, 1, 2, 2, 2};
    auto bytes = MajorityEncoding::build(a, Tau{1, 3}).serialize();
    auto bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(MajorityEncoding::deserialize(bad), format_error);
    bad = bytes;
    bad[4] = 9;
    EXPECT_THROW(MajorityEncoding::deserialize(bad), format_error);
    EXPECT_THROW(MajorityEncoding::deserialize(bytes.substr(0, bytes.size() - 3)), format_error);
    EXPECT_THROW(MajorityEncoding::deserialize(bytes + "x"), format_error);
    bad = bytes;
    for (int b = 0; b < 8; ++b) bad[6 + b] = 0;  // n = 0
    EXPECT_THROW(MajorityEncoding::deserialize(bad), format_error);
    EXPECT_THROW(MajorityEncoding::deserialize(""), format_error);
}
