#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "bitvec.hpp"
#include "tau.hpp"

// Quadruple decomposition. The array is padded virtually to n_pad, the next
// power of two (at least 4). Level k splits [1, n_pad] into n_pad / 2^k
// blocks; quadruple l at level k is the four blocks 2l .. 2l+3 (0-based, mod
// the block count), so neighbouring quadruples overlap by two blocks and the
// last one wraps around to the front. Its extent adds one block on each side.
//
// Internally positions are 0-based and ranges are circular windows over
// [0, n_pad).

namespace rmaj {

struct LevelInfo {
    unsigned k = 0;
    uint64_t block_size = 1;
    uint64_t n_k = 4;

    uint64_t padded_length() const { return block_size * n_k; }
    uint64_t quadruple_count() const { return n_k / 2; }
};

// A circular run of positions starting at 0-based `start`.
struct Window {
    uint64_t start = 0;
    uint64_t length = 0;
};

struct Quadruple {
    unsigned k = 0;
    uint64_t offset = 0;
    std::array<uint64_t, 4> blocks{};  // 1-based block ids, B_{2l+1} .. B_{2l+4}
    Window range;
    Window middle;
    Window extent;
};

struct QueryLocation {
    unsigned k = 0;
    uint64_t offset = 0;

    friend bool operator==(const QueryLocation&, const QueryLocation&) = default;
};

class Geometry {
   public:
    Geometry() = default;
    explicit Geometry(uint64_t n) : n_(n) {
        if (n < 1) throw validation_error("array length must be at least 1");
        n_pad_ = std::max<uint64_t>(4, std::bit_ceil(n));
        lg_pad_ = detail::floor_log2(n_pad_);
    }

    uint64_t n() const { return n_; }
    uint64_t n_pad() const { return n_pad_; }
    unsigned lg_pad() const { return lg_pad_; }
    unsigned top_level() const { return lg_pad_ - 2; }

    static uint64_t block_size(unsigned k) { return uint64_t(1) << k; }
    uint64_t blocks(unsigned k) const { return n_pad_ >> k; }
    uint64_t quadruples(unsigned k) const { return blocks(k) / 2; }
    bool wraps(unsigned k, uint64_t l) const { return l + 1 == quadruples(k); }

    uint64_t range_start(unsigned k, uint64_t l) const { return (2 * l * block_size(k)) % n_pad_; }
    uint64_t extent_start(unsigned k, uint64_t l) const {
        return ((2 * l + blocks(k) - 1) % blocks(k)) * block_size(k);
    }
    uint64_t range_length(unsigned k) const { return 4 * block_size(k); }
    uint64_t extent_length(unsigned k) const { return 6 * block_size(k); }

    uint64_t offset_in(uint64_t window_start, uint64_t x) const { return (x + n_pad_ - window_start) % n_pad_; }
    uint64_t position_at(uint64_t window_start, uint64_t off) const { return (window_start + off) % n_pad_; }

    // The run [s, s+len) read left to right from its first occurrence in the
    // window stays inside the window.
    bool window_fits(uint64_t window_start, uint64_t window_len, uint64_t s, uint64_t len) const {
        return offset_in(window_start, s) + len <= window_len;
    }

    bool extent_contains_range(unsigned k, uint64_t l, uint64_t s, uint64_t len) const {
        return window_fits(extent_start(k, l), extent_length(k), s, len);
    }

    // Level and quadruple associated with the 1-based range [i, j]: k is the
    // largest level at which [i, j] contains a whole block (capped at the top
    // level), and the quadruple is the one whose middle holds that block.
    QueryLocation locate(uint64_t i, uint64_t j) const {
        uint64_t s = i - 1, e = j;
        unsigned k0 = detail::floor_log2(e - s);
        uint64_t b0 = uint64_t(1) << k0;
        uint64_t aligned = (s + b0 - 1) >> k0 << k0;
        unsigned k = aligned + b0 <= e ? k0 : k0 - 1;
        if (k > top_level()) return {top_level(), 0};
        uint64_t b = (s + block_size(k) - 1) >> k;  // first whole block
        uint64_t q = quadruples(k);
        uint64_t l = (b & 1) ? (b - 1) / 2 : (b / 2 + q - 1) % q;
        return {k, l};
    }

   private:
    uint64_t n_ = 1;
    uint64_t n_pad_ = 4;
    unsigned lg_pad_ = 2;
};

inline std::vector<LevelInfo> level_table(uint64_t n) {
    Geometry g(n);
    std::vector<LevelInfo> out;
    for (unsigned k = 0; k <= g.top_level(); ++k) out.push_back({k, Geometry::block_size(k), g.blocks(k)});
    return out;
}

inline std::vector<Quadruple> quadruple_list(const LevelInfo& level) {
    if (level.n_k < 4) throw validation_error("a level needs at least four blocks");
    std::vector<Quadruple> out;
    const uint64_t B = level.block_size, nk = level.n_k, pad = level.padded_length();
    for (uint64_t l = 0; l < nk / 2; ++l) {
        Quadruple d;
        d.k = level.k;
        d.offset = l;
        for (uint64_t t = 0; t < 4; ++t) d.blocks[t] = (2 * l + t) % nk + 1;
        d.range = {(2 * l * B) % pad, 4 * B};
        d.middle = {((2 * l + 1) * B) % pad, 2 * B};
        d.extent = {((2 * l + nk - 1) % nk) * B, 6 * B};
        out.push_back(d);
    }
    return out;
}

inline QueryLocation locate(uint64_t n, uint64_t i, uint64_t j) {
    if (i < 1 || i > j || j > n) throw range_error("query range out of bounds");
    return Geometry(n).locate(i, j);
}

// inner's range lies within outer's extent. Both come from the decomposition
// of an array padded to n_pad.
inline bool extent_contains(const Quadruple& outer, const Quadruple& inner, uint64_t n_pad) {
    uint64_t off = (inner.range.start + n_pad - outer.extent.start) % n_pad;
    return off + inner.range.length <= outer.extent.length;
}

// Elements occurring at least tau * 2^k times in the quadruple's range,
// ordered by first occurrence when the range is read block by block.
template <typename T>
std::vector<T> candidates(std::span<const T> a, const Quadruple& d, Tau tau) {
    const uint64_t n = a.size();
    const uint64_t pad = std::max<uint64_t>(4, std::bit_ceil(n));
    const uint64_t B = uint64_t(1) << d.k;
    std::unordered_map<T, uint64_t> count;
    std::vector<T> order;
    for (uint64_t t = 0; t < d.range.length; ++t) {
        uint64_t x = (d.range.start + t) % pad;
        if (x >= n) continue;
        if (count[a[x]]++ == 0) order.push_back(a[x]);
    }
    std::vector<T> out;
    for (const auto& v : order)
        if (tau.is_majority(count[v], B)) out.push_back(v);
    return out;
}

}  // namespace rmaj
