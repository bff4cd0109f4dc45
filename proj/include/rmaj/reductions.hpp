#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "tau.hpp"

// Adversarial inputs driven through decision queries only.
//
// Bad string: symbols alpha_1..alpha_k are the ids 1..k, dummies are
// increasing ids above k, each used once. The array is the padding
// L = G(k,k) ... G(k,1) followed by m permutations of the alphas.
//
// Set intersection: elements of [X] are the ids 1..X, dummies are ids above
// X. The array is B_1 C B_2 ... C B_n C C B_1^r C ... C B_n^r, where B_i
// lists the non-members of S_i and then its members, each ascending, and C
// is X fresh dummies.

namespace rmaj {

inline uint64_t gadget_repeat(uint64_t k) { return k * k - k + 2; }

// G(k, i): alpha_j^{k'} for every j != i, then (alpha_i beta^{k-2})^{k-1},
// then alpha_i beta^k. Dummies are drawn from next_dummy upwards.
inline std::vector<uint32_t> gadget(unsigned k, unsigned i, uint32_t& next_dummy) {
    if (k < 2) throw validation_error("gadget needs k >= 2");
    if (i < 1 || i > k) throw validation_error("gadget index outside [1, k]");
    if (next_dummy <= k) next_dummy = k + 1;
    std::vector<uint32_t> g;
    const uint64_t kp = gadget_repeat(k);
    for (unsigned j = 1; j <= k; ++j)
        if (j != i) g.insert(g.end(), kp, j);
    for (unsigned r = 0; r + 1 < k; ++r) {
        g.push_back(i);
        for (unsigned b = 0; b + 2 < k; ++b) g.push_back(next_dummy++);
    }
    g.push_back(i);
    for (unsigned b = 0; b < k; ++b) g.push_back(next_dummy++);
    return g;
}

struct BadString {
    unsigned k = 2;
    uint64_t m = 0;
    std::vector<uint32_t> symbols;
    // landmark_l[i-1][x-1]: 1-based position of the x-th occurrence of
    // alpha_i in G(k,i), counted from the right.
    std::vector<std::vector<uint64_t>> landmark_l;
    // landmark_r[j-1][x-1]: 1-based position of the x-th symbol of pi_j.
    std::vector<std::vector<uint64_t>> landmark_r;
    std::vector<std::vector<uint32_t>> perms;

    Tau tau() const { return Tau{1, k}; }
    uint64_t padding_length() const { return uint64_t(k) * k * gadget_repeat(k); }
};

inline BadString bad_array(unsigned k, const std::vector<std::vector<uint32_t>>& perms) {
    if (k < 2) throw validation_error("bad string needs k >= 2");
    BadString bs;
    bs.k = k;
    bs.m = perms.size();
    bs.perms = perms;
    bs.landmark_l.assign(k, {});
    uint32_t next_dummy = k + 1;
    for (unsigned i = k; i >= 1; --i) {
        auto g = gadget(k, i, next_dummy);
        const uint64_t base = bs.symbols.size();
        for (uint64_t t = g.size(); t-- > 0;)
            if (g[t] == i) bs.landmark_l[i - 1].push_back(base + t + 1);
        bs.symbols.insert(bs.symbols.end(), g.begin(), g.end());
    }
    for (const auto& p : perms) {
        std::vector<uint32_t> sorted(p);
        std::sort(sorted.begin(), sorted.end());
        std::vector<uint32_t> ident(k);
        std::iota(ident.begin(), ident.end(), 1);
        if (sorted != ident) throw validation_error("not a permutation of the k alphas");
        std::vector<uint64_t> r;
        for (auto s : p) {
            bs.symbols.push_back(s);
            r.push_back(bs.symbols.size());
        }
        bs.landmark_r.push_back(std::move(r));
    }
    return bs;
}

template <typename Rng>
std::vector<std::vector<uint32_t>> random_permutations(unsigned k, uint64_t m, Rng& rng) {
    std::vector<std::vector<uint32_t>> out(m, std::vector<uint32_t>(k));
    for (auto& p : out) {
        std::iota(p.begin(), p.end(), 1);
        std::shuffle(p.begin(), p.end(), rng);
    }
    return out;
}

struct Recovery {
    std::vector<std::vector<uint32_t>> perms;
    uint64_t queries = 0;
    double recovered_bits = 0;  // m lg(k!)
    bool ok = true;
    // On failure: the alpha and permutation that could not be placed, and
    // the last range asked.
    unsigned failed_symbol = 0;
    uint64_t failed_perm = 0;
    std::pair<uint64_t, uint64_t> failed_range{0, 0};
};

// Places every alpha_i in every pi_j by asking [l_{i,x}, r_{j,x}] for
// x = 1, 2, ... and stopping at the first yes. decide(x, y) answers the
// (1/k)-majority decision query on the 1-based range [x, y].
template <typename Decide>
Recovery recover(const BadString& bs, Decide&& decide) {
    Recovery rec;
    const unsigned k = bs.k;
    rec.perms.assign(bs.m, std::vector<uint32_t>(k, 0));
    for (uint64_t j = 1; j <= bs.m; ++j) {
        for (unsigned i = 1; i <= k; ++i) {
            bool placed = false;
            std::pair<uint64_t, uint64_t> last{0, 0};
            for (unsigned x = 1; x <= k && !placed; ++x) {
                last = {bs.landmark_l[i - 1][x - 1], bs.landmark_r[j - 1][x - 1]};
                ++rec.queries;
                if (decide(last.first, last.second)) {
                    auto& slot = rec.perms[j - 1][x - 1];
                    if (slot != 0) break;
                    slot = i;
                    placed = true;
                }
            }
            if (!placed) {
                rec.ok = false;
                rec.failed_symbol = i;
                rec.failed_perm = j;
                rec.failed_range = last;
                return rec;
            }
        }
    }
    rec.recovered_bits = double(bs.m) * std::lgamma(double(k) + 1) / std::log(2.0);
    return rec;
}

// f(x, y, alpha) / (y - x + 1) over the 1-based range [x, y].
inline Fraction density(std::span<const uint32_t> a, uint64_t x, uint64_t y, uint32_t alpha) {
    if (x < 1 || x > y || y > a.size()) throw range_error("density range out of bounds");
    uint64_t f = 0;
    for (uint64_t p = x; p <= y; ++p) f += a[p - 1] == alpha;
    return Fraction(f, y - x + 1);
}

struct SetIntersectionInstance {
    uint64_t universe = 0;  // X
    std::vector<std::vector<uint32_t>> sets;
    std::vector<uint32_t> array;
    std::vector<uint64_t> left_start;  // 1-based position of B_i
    std::vector<uint64_t> right_start;  // 1-based position of B_i^r

    uint64_t set_count() const { return sets.size(); }
    Tau tau() const { return Tau::make(1, 2 * universe); }

    // Copies of B between B_i and B_j^r.
    uint64_t middle_copies(uint64_t i, uint64_t j) const { return set_count() - i + j - 1; }

    // From the first member of S_i in B_i to the last member of S_j in B_j^r.
    std::pair<uint64_t, uint64_t> query_map(uint64_t i, uint64_t j) const {
        if (i < 1 || j < 1 || i > set_count() || j > set_count()) throw range_error("set index out of range");
        if (sets[i - 1].empty() || sets[j - 1].empty()) throw validation_error("query on an empty set");
        uint64_t first = left_start[i - 1] + universe - sets[i - 1].size();
        uint64_t last = right_start[j - 1] + sets[j - 1].size() - 1;
        return {first, last};
    }
};

// sets[i] lists elements of [1, X]; duplicates are ignored.
inline SetIntersectionInstance si_build(std::vector<std::vector<uint32_t>> sets, uint64_t universe) {
    if (universe < 1) throw validation_error("universe must be nonempty");
    if (sets.empty()) throw validation_error("need at least one set");
    SetIntersectionInstance inst;
    inst.universe = universe;
    std::vector<std::vector<uint32_t>> blocks;
    for (auto& s : sets) {
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        std::vector<uint8_t> member(universe + 1, 0);
        for (auto e : s) {
            if (e < 1 || e > universe) throw validation_error("set element outside [1, X]");
            member[e] = 1;
        }
        std::vector<uint32_t> b;
        for (uint32_t e = 1; e <= universe; ++e)
            if (!member[e]) b.push_back(e);
        for (uint32_t e = 1; e <= universe; ++e)
            if (member[e]) b.push_back(e);
        blocks.push_back(std::move(b));
    }
    inst.sets = std::move(sets);
    uint32_t next_dummy = static_cast<uint32_t>(universe) + 1;
    auto& a = inst.array;
    auto put_c = [&]() {
        for (uint64_t t = 0; t < universe; ++t) a.push_back(next_dummy++);
    };
    const uint64_t n = blocks.size();
    for (uint64_t i = 0; i < n; ++i) {
        if (i) put_c();
        inst.left_start.push_back(a.size() + 1);
        a.insert(a.end(), blocks[i].begin(), blocks[i].end());
    }
    put_c();
    put_c();
    for (uint64_t i = 0; i < n; ++i) {
        if (i) put_c();
        inst.right_start.push_back(a.size() + 1);
        a.insert(a.end(), blocks[i].rbegin(), blocks[i].rend());
    }
    return inst;
}

// decide(x, y) answers the 1/(2X)-majority decision query on [x, y].
template <typename Decide>
bool si_query(const SetIntersectionInstance& inst, uint64_t i, uint64_t j, Decide&& decide) {
    auto [x, y] = inst.query_map(i, j);
    return decide(x, y);
}

}  // namespace rmaj
