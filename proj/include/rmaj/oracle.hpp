#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "decomposition.hpp"
#include "errors.hpp"
#include "tau.hpp"

// Brute-force references. Nothing here shares code paths with the encoding.

namespace rmaj {

template <typename T>
struct OracleEntry {
    T value{};
    uint64_t first = 0;  // 1-based position of the first occurrence in [i, j]
    uint64_t count = 0;

    friend bool operator==(const OracleEntry&, const OracleEntry&) = default;
};

template <typename T>
using OracleAnswer = std::vector<OracleEntry<T>>;

// All tau-majorities of a[i..j] by a counting scan, sorted by first position.
template <typename T>
OracleAnswer<T> oracle_majorities(std::span<const T> a, Tau tau, uint64_t i, uint64_t j) {
    if (i < 1 || i > j || j > a.size()) throw range_error("query range out of bounds");
    std::unordered_map<T, OracleEntry<T>> seen;
    std::vector<T> order;
    for (uint64_t p = i; p <= j; ++p) {
        auto [it, fresh] = seen.try_emplace(a[p - 1], OracleEntry<T>{a[p - 1], p, 0});
        if (fresh) order.push_back(a[p - 1]);
        ++it->second.count;
    }
    OracleAnswer<T> out;
    for (const auto& v : order)
        if (tau.is_majority(seen[v].count, j - i + 1)) out.push_back(seen[v]);
    return out;
}

// The same scan over values already reduced to [0, sigma), with reusable
// dense counters. Used where millions of reference answers are needed.
class DenseOracle {
   public:
    DenseOracle(std::span<const uint32_t> ranks, uint64_t sigma) : a_(ranks), count_(sigma, 0), first_(sigma, 0) {}

    OracleAnswer<uint32_t> majorities(Tau tau, uint64_t i, uint64_t j) {
        if (i < 1 || i > j || j > a_.size()) throw range_error("query range out of bounds");
        touched_.clear();
        for (uint64_t p = i; p <= j; ++p) {
            uint32_t v = a_[p - 1];
            if (count_[v]++ == 0) {
                first_[v] = p;
                touched_.push_back(v);
            }
        }
        OracleAnswer<uint32_t> out;
        for (auto v : touched_) {
            if (tau.is_majority(count_[v], j - i + 1)) out.push_back({v, first_[v], count_[v]});
            count_[v] = 0;
        }
        return out;
    }

   private:
    std::span<const uint32_t> a_;
    std::vector<uint64_t> count_;
    std::vector<uint64_t> first_;
    std::vector<uint32_t> touched_;
};

// Exhaustive search for the quadruple associated with [i, j]. A quadruple
// at level k matches when
//   - [i, j] contains a whole level-k block and, below the top level, no
//     whole level-(k+1) block (the unique tree level of the range);
//   - one of its two middle blocks lies inside [i, j];
//   - [i, j] lies inside the union of its four blocks;
//   - at the top level, a range holding a whole level-(k+1) block is given
//     to the non-wrapping quadruple.
// Throws std::logic_error unless exactly one quadruple matches.
inline QueryLocation oracle_locate(uint64_t n, uint64_t i, uint64_t j) {
    if (i < 1 || i > j || j > n) throw range_error("query range out of bounds");
    const uint64_t pad = std::max<uint64_t>(4, std::bit_ceil(n));
    const unsigned top = static_cast<unsigned>(std::bit_width(pad) - 1) - 2;

    auto holds_whole_block = [&](uint64_t size) {
        for (uint64_t b = 1; b * size <= pad; ++b) {
            uint64_t lo = (b - 1) * size + 1, hi = b * size;
            if (i <= lo && hi <= j) return true;
        }
        return false;
    };
    auto block_inside = [&](uint64_t id, uint64_t size) {  // 1-based block id
        uint64_t lo = (id - 1) * size + 1, hi = id * size;
        return i <= lo && hi <= j;
    };

    std::vector<QueryLocation> matches;
    for (unsigned k = 0; k <= top; ++k) {
        const uint64_t size = uint64_t(1) << k;
        const uint64_t nk = pad / size;
        const bool tree_level = holds_whole_block(size) && (k == top || !holds_whole_block(2 * size));
        if (!tree_level) continue;
        const bool spans_higher = holds_whole_block(2 * size);
        for (uint64_t l = 0; l < nk / 2; ++l) {
            uint64_t ids[4];
            for (uint64_t t = 0; t < 4; ++t) ids[t] = (2 * l + t) % nk + 1;
            bool middle = block_inside(ids[1], size) || block_inside(ids[2], size);
            bool covered = true;
            for (uint64_t p = i; p <= j && covered; ++p) {
                uint64_t blk = (p - 1) / size + 1;
                covered = blk == ids[0] || blk == ids[1] || blk == ids[2] || blk == ids[3];
            }
            bool wrap = l + 1 == nk / 2;
            if (k == top && spans_higher && wrap) continue;
            if (middle && covered) matches.push_back({k, l});
        }
    }
    if (matches.size() != 1)
        throw std::logic_error("range [" + std::to_string(i) + "," + std::to_string(j) + "] has " +
                               std::to_string(matches.size()) + " associated quadruples");
    return matches.front();
}

}  // namespace rmaj
