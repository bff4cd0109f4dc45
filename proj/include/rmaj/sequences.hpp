#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bitvec.hpp"

namespace rmaj {

// Balanced wavelet tree over symbols in [1, sigma], stored level by level:
// level d holds bit d (from the top) of every symbol, with the sequence
// stably ordered by the d higher bits so each tree node is a contiguous run.
class WaveletSequence {
   public:
    WaveletSequence() = default;

    static WaveletSequence build(std::span<const uint32_t> s, uint64_t sigma) {
        if (sigma < 1) throw validation_error("alphabet size must be at least 1");
        WaveletSequence ws;
        ws.n_ = s.size();
        ws.sigma_ = sigma;
        ws.depth_ = std::max(1u, detail::ceil_log2(sigma));
        std::vector<uint32_t> cur(s.begin(), s.end());
        for (auto& c : cur) {
            if (c < 1 || c > sigma) throw validation_error("symbol outside [1, sigma]");
            --c;
        }
        for (unsigned d = 0; d < ws.depth_; ++d) {
            unsigned shift = ws.depth_ - 1 - d;
            PlainBits bits(cur.size());
            for (size_t i = 0; i < cur.size(); ++i) bits.set0(i, (cur[i] >> shift) & 1);
            ws.levels_.emplace_back(std::move(bits));
            std::stable_sort(cur.begin(), cur.end(),
                             [shift](uint32_t a, uint32_t b) { return (a >> shift) < (b >> shift); });
        }
        return ws;
    }

    uint64_t size() const { return n_; }
    uint64_t sigma() const { return sigma_; }

    uint32_t access(uint64_t i) const {
        if (i < 1 || i > n_) throw range_error("sequence position out of range");
        uint64_t b = 0, e = n_, p = i - 1;
        uint32_t code = 0;
        for (unsigned d = 0; d < depth_; ++d) {
            const auto& v = levels_[d];
            uint64_t ob = v.rank_prefix(b);
            uint64_t zeros = (e - b) - (v.rank_prefix(e) - ob);
            bool bit = v.bits().get0(b + p);
            code = (code << 1) | bit;
            if (bit) {
                p = v.rank_prefix(b + p) - ob;
                b += zeros;
            } else {
                p = (b + p - v.rank_prefix(b + p)) - (b - ob);
                e = b + zeros;
            }
        }
        return code + 1;
    }

    uint64_t rank(uint32_t alpha, uint64_t i) const {
        check_symbol(alpha);
        if (i > n_) throw range_error("rank argument out of range");
        return rank_unchecked(alpha, i);
    }

    uint64_t rank_unchecked(uint32_t alpha, uint64_t i) const {
        uint64_t b = 0, e = n_, p = i;
        uint32_t code = alpha - 1;
        for (unsigned d = 0; d < depth_ && p > 0; ++d) {
            const auto& v = levels_[d];
            uint64_t ob = v.rank_prefix(b);
            uint64_t zeros = (e - b) - (v.rank_prefix(e) - ob);
            if ((code >> (depth_ - 1 - d)) & 1) {
                p = v.rank_prefix(b + p) - ob;
                b += zeros;
            } else {
                p = (b + p - v.rank_prefix(b + p)) - (b - ob);
                e = b + zeros;
            }
        }
        return p;
    }

    std::optional<uint64_t> select(uint32_t alpha, uint64_t j) const {
        check_symbol(alpha);
        if (j < 1) return std::nullopt;
        uint32_t code = alpha - 1;
        std::vector<uint64_t> starts(depth_);
        uint64_t b = 0, e = n_;
        for (unsigned d = 0; d < depth_; ++d) {
            starts[d] = b;
            const auto& v = levels_[d];
            uint64_t ob = v.rank_prefix(b);
            uint64_t zeros = (e - b) - (v.rank_prefix(e) - ob);
            if ((code >> (depth_ - 1 - d)) & 1)
                b += zeros;
            else
                e = b + zeros;
        }
        if (j > e - b) return std::nullopt;
        uint64_t p = j - 1;  // offset within the current node
        for (unsigned d = depth_; d-- > 0;) {
            const auto& v = levels_[d];
            uint64_t nb = starts[d];
            if ((code >> (depth_ - 1 - d)) & 1)
                p = v.select_unchecked(v.rank_prefix(nb) + p + 1) - nb;
            else
                p = v.select0_unchecked((nb - v.rank_prefix(nb)) + p + 1) - nb;
        }
        return p + 1;
    }

    // rank of every symbol at prefix i in one traversal of the live nodes.
    std::vector<uint64_t> batch_rank(uint64_t i) const {
        if (i > n_) throw range_error("rank argument out of range");
        std::vector<uint64_t> out(sigma_, 0);
        batch_rank_into(i, out);
        return out;
    }

    void batch_rank_into(uint64_t i, std::span<uint64_t> out) const {
        struct Node {
            uint64_t b, e, p;
            uint32_t code;
            unsigned d;
        };
        std::vector<Node> stack;
        if (i > 0) stack.push_back({0, n_, i, 0, 0});
        while (!stack.empty()) {
            Node nd = stack.back();
            stack.pop_back();
            if (nd.d == depth_) {
                out[nd.code] = nd.p;
                continue;
            }
            const auto& v = levels_[nd.d];
            uint64_t ob = v.rank_prefix(nd.b);
            uint64_t zeros = (nd.e - nd.b) - (v.rank_prefix(nd.e) - ob);
            uint64_t p1 = v.rank_prefix(nd.b + nd.p) - ob;
            uint64_t p0 = nd.p - p1;
            if (p0 > 0) stack.push_back({nd.b, nd.b + zeros, p0, nd.code << 1, nd.d + 1});
            if (p1 > 0) stack.push_back({nd.b + zeros, nd.e, p1, (nd.code << 1) | 1, nd.d + 1});
        }
    }

    SpaceBits space_bits() const {
        SpaceBits s;
        s.header = 64 * 4;
        for (const auto& v : levels_) s += v.space_bits();
        return s;
    }

    void write(WordWriter& out) const {
        out.put(n_);
        out.put(sigma_);
        out.put(depth_);
        out.put(levels_.size());
        for (const auto& v : levels_) v.write(out);
    }

    static WaveletSequence read(WordReader& in) {
        WaveletSequence ws;
        ws.n_ = in.get();
        ws.sigma_ = in.get();
        ws.depth_ = static_cast<unsigned>(in.get());
        uint64_t count = in.get();
        if (ws.sigma_ < 1 || ws.depth_ != std::max(1u, detail::ceil_log2(ws.sigma_)) || count != ws.depth_)
            throw format_error("inconsistent wavelet header");
        for (uint64_t d = 0; d < count; ++d) {
            ws.levels_.push_back(RankSelectBitVector::read(in));
            if (ws.levels_.back().size() != ws.n_) throw format_error("wavelet level length mismatch");
        }
        return ws;
    }

   private:
    void check_symbol(uint32_t alpha) const {
        if (alpha < 1 || alpha > sigma_) throw range_error("symbol outside [1, sigma]");
    }

    uint64_t n_ = 0;
    uint64_t sigma_ = 1;
    unsigned depth_ = 1;
    std::vector<RankSelectBitVector> levels_;
};

// Two-level sequence: symbols are split into groups of group_size, S' holds
// the group id of each symbol and the per-group subsequences S_z (symbols
// renumbered within their group) are concatenated into one wavelet tree.
class GroupedSequence {
   public:
    GroupedSequence() = default;

    static uint64_t default_group_size(uint64_t n) { return std::max<uint64_t>(1, detail::ceil_log2(n)); }

    // group_size 0 means ceil(lg |S|).
    static GroupedSequence build(std::span<const uint32_t> s, uint64_t sigma, uint64_t group_size = 0) {
        if (sigma < 1) throw validation_error("alphabet size must be at least 1");
        GroupedSequence gs;
        gs.n_ = s.size();
        gs.sigma_ = sigma;
        gs.group_size_ = group_size == 0 ? default_group_size(s.size()) : group_size;
        uint64_t groups = gs.group_of(sigma);
        std::vector<uint32_t> ids(s.size());
        std::vector<std::vector<uint32_t>> parts(groups);
        for (size_t i = 0; i < s.size(); ++i) {
            if (s[i] < 1 || s[i] > sigma) throw validation_error("symbol outside [1, sigma]");
            uint64_t z = gs.group_of(s[i]);
            ids[i] = static_cast<uint32_t>(z);
            parts[z - 1].push_back(static_cast<uint32_t>(s[i] - (z - 1) * gs.group_size_));
        }
        gs.offsets_.assign(groups + 1, 0);
        std::vector<uint32_t> concat;
        concat.reserve(s.size());
        for (uint64_t z = 0; z < groups; ++z) {
            gs.offsets_[z + 1] = gs.offsets_[z] + parts[z].size();
            concat.insert(concat.end(), parts[z].begin(), parts[z].end());
        }
        gs.groups_ = WaveletSequence::build(ids, groups);
        gs.local_ = WaveletSequence::build(concat, gs.local_sigma());
        return gs;
    }

    uint64_t size() const { return n_; }
    uint64_t sigma() const { return sigma_; }
    uint64_t group_size() const { return group_size_; }
    uint64_t group_count() const { return offsets_.size() - 1; }
    uint64_t group_of(uint64_t symbol) const { return (symbol + group_size_ - 1) / group_size_; }
    const WaveletSequence& group_ids() const { return groups_; }
    const WaveletSequence& subsequences() const { return local_; }
    uint64_t group_offset(uint64_t z) const { return offsets_.at(z - 1); }

    uint32_t access(uint64_t i) const {
        uint32_t z = groups_.access(i);
        uint64_t r = groups_.rank_unchecked(z, i);
        uint32_t local = local_.access(offsets_[z - 1] + r);
        return static_cast<uint32_t>((z - 1) * group_size_ + local);
    }

    uint64_t rank(uint32_t y, uint64_t i) const {
        check_symbol(y);
        if (i > n_) throw range_error("rank argument out of range");
        uint64_t z = group_of(y);
        uint32_t u = local_symbol(y);
        uint64_t off = offsets_[z - 1];
        uint64_t r = groups_.rank_unchecked(static_cast<uint32_t>(z), i);
        return local_.rank_unchecked(u, off + r) - local_.rank_unchecked(u, off);
    }

    std::optional<uint64_t> select(uint32_t y, uint64_t j) const {
        check_symbol(y);
        uint64_t z = group_of(y);
        uint32_t u = local_symbol(y);
        uint64_t off = offsets_[z - 1];
        auto hit = local_.select(u, local_.rank_unchecked(u, off) + j);
        if (!hit || *hit > offsets_[z]) return std::nullopt;
        return groups_.select(static_cast<uint32_t>(z), *hit - off);
    }

    // Occurrences of every y in S[i..j]: one batch rank on S' at each end,
    // then one rank pair per symbol inside its group's subsequence.
    std::vector<uint64_t> multi_freq(std::span<const uint32_t> ys, uint64_t i, uint64_t j) const {
        if (i < 1 || i > j || j > n_) throw range_error("frequency range out of bounds");
        for (auto y : ys) check_symbol(y);
        std::vector<uint64_t> out(ys.size(), 0);
        if (ys.empty()) return out;
        std::vector<uint64_t> lo(group_count(), 0), hi(group_count(), 0);
        groups_.batch_rank_into(i - 1, lo);
        groups_.batch_rank_into(j, hi);
        for (size_t t = 0; t < ys.size(); ++t) {
            uint64_t z = group_of(ys[t]);
            if (hi[z - 1] == lo[z - 1]) continue;
            uint32_t u = local_symbol(ys[t]);
            uint64_t off = offsets_[z - 1];
            out[t] = local_.rank_unchecked(u, off + hi[z - 1]) - local_.rank_unchecked(u, off + lo[z - 1]);
        }
        return out;
    }

    SpaceBits space_bits() const {
        SpaceBits s;
        s.header = 64 * (4 + offsets_.size());
        s += groups_.space_bits();
        s += local_.space_bits();
        return s;
    }

    void write(WordWriter& out) const {
        out.put(n_);
        out.put(sigma_);
        out.put(group_size_);
        out.put_ints(offsets_);
        groups_.write(out);
        local_.write(out);
    }

    static GroupedSequence read(WordReader& in) {
        GroupedSequence gs;
        gs.n_ = in.get();
        gs.sigma_ = in.get();
        gs.group_size_ = in.get();
        gs.offsets_ = in.get_ints<uint64_t>();
        if (gs.group_size_ == 0 || gs.sigma_ == 0 || gs.offsets_.size() != gs.group_of(gs.sigma_) + 1 ||
            gs.offsets_.front() != 0 || gs.offsets_.back() != gs.n_)
            throw format_error("inconsistent grouped sequence header");
        gs.groups_ = WaveletSequence::read(in);
        gs.local_ = WaveletSequence::read(in);
        if (gs.groups_.size() != gs.n_ || gs.local_.size() != gs.n_ || gs.groups_.sigma() != gs.group_count() ||
            gs.local_.sigma() != gs.local_sigma())
            throw format_error("grouped sequence component mismatch");
        return gs;
    }

   private:
    uint64_t local_sigma() const { return std::min(group_size_, sigma_); }
    uint32_t local_symbol(uint64_t y) const { return static_cast<uint32_t>(y - (group_of(y) - 1) * group_size_); }
    void check_symbol(uint64_t y) const {
        if (y < 1 || y > sigma_) throw range_error("symbol outside [1, sigma]");
    }

    uint64_t n_ = 0;
    uint64_t sigma_ = 1;
    uint64_t group_size_ = 1;
    std::vector<uint64_t> offsets_{0, 0};
    WaveletSequence groups_;
    WaveletSequence local_;
};

}  // namespace rmaj
