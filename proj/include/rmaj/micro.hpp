#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bitvec.hpp"
#include "config.hpp"
#include "decomposition.hpp"
#include "errors.hpp"
#include "tau.hpp"

// Storage for queries whose quadruple spans at most Z positions. Every
// level up to the micro level is dropped from the main structure; the
// quadruples of the micro level are kept as small arrays instead. Array l
// covers positions [2lB, 2lB + 4B) of A, cut at n, with B = 2^micro_level.

namespace rmaj {

enum class MicroBranch : uint8_t { none = 0, scan = 1, encoded = 2 };

struct MicroAnswer {
    std::vector<uint64_t> positions;  // 0-based, ascending
    uint64_t verified = 0;
};

namespace micro_code {

// Values renamed 1, 2, ... by first occurrence.
inline std::vector<uint32_t> local_ids(std::span<const uint32_t> vals) {
    std::vector<uint32_t> seen, out(vals.size());
    for (size_t x = 0; x < vals.size(); ++x) {
        auto it = std::find(seen.begin(), seen.end(), vals[x]);
        out[x] = static_cast<uint32_t>(it - seen.begin()) + 1;
        if (it == seen.end()) seen.push_back(vals[x]);
    }
    return out;
}

// The top-down structure without pointers, over a virtual array of length m
// (a power of two >= 4) whose first vals.size() cells are filled. Per level,
// top first: the unary count directory, then one raw extent bitmap per
// stored candidate.
inline void encode(std::span<const uint32_t> vals, uint64_t m, Tau tau, PlainBits& out) {
    Geometry g(m);
    const uint64_t len = vals.size();
    auto ids = local_ids(vals);
    std::vector<uint8_t> active(len, 1);
    std::vector<uint64_t> count(len + 1, 0);
    std::vector<uint8_t> inactive_seen(len + 1, 0);
    for (int k = static_cast<int>(g.top_level()); k >= 0; --k) {
        const uint64_t B = Geometry::block_size(k), quads = g.quadruples(k);
        std::vector<std::vector<uint32_t>> stored(quads);
        std::vector<uint8_t> retire(len + 1, 0);
        for (uint64_t l = 0; l < quads; ++l) {
            std::vector<uint32_t> order;
            uint64_t start = g.range_start(k, l);
            for (uint64_t t = 0; t < 4 * B; ++t) {
                uint64_t x = (start + t) % m;
                if (x >= len) continue;
                if (count[ids[x]]++ == 0) order.push_back(ids[x]);
                if (!active[x]) inactive_seen[ids[x]] = 1;
            }
            for (auto y : order) {
                if (tau.is_majority(count[y], B) && !inactive_seen[y]) stored[l].push_back(y);
                count[y] = 0;
                inactive_seen[y] = 0;
            }
        }
        for (uint64_t l = 0; l < quads; ++l) {
            out.push_back(true);
            for (size_t c = 0; c < stored[l].size(); ++c) out.push_back(false);
        }
        out.push_back(true);
        for (uint64_t l = 0; l < quads; ++l) {
            uint64_t ext = g.extent_start(k, l);
            for (auto y : stored[l]) {
                for (uint64_t t = 0; t < 6 * B; ++t) {
                    uint64_t x = (ext + t) % m;
                    out.push_back(x < len && ids[x] == y);
                }
            }
            uint64_t start = g.range_start(k, l);
            for (uint64_t t = 0; t < 4 * B; ++t) {
                uint64_t x = (start + t) % m;
                if (x < len && std::find(stored[l].begin(), stored[l].end(), ids[x]) != stored[l].end())
                    retire[x] = 1;
            }
        }
        for (uint64_t x = 0; x < len; ++x)
            if (retire[x]) active[x] = 0;
    }
}

// Answers for every local range [a, b] of one encoding, indexed a * m + b.
struct Table {
    uint64_t m = 0;
    std::vector<std::vector<uint8_t>> answers;

    const std::vector<uint8_t>& at(uint64_t a, uint64_t b) const { return answers[a * m + b]; }
};

// Decodes by the slow path: a vector can count its element in [a, b] when
// its extent covers the range, and every majority has such a vector at the
// located level or above.
inline Table decode(const PlainBits& bits, uint64_t m, Tau tau) {
    Geometry g(m);
    struct Stored {
        unsigned k;
        uint64_t start;
        uint64_t bitpos;
    };
    std::vector<Stored> vecs;
    uint64_t p = 0;
    auto next = [&]() {
        if (p >= bits.size()) throw format_error("truncated micro encoding");
        return bits.get0(p++);
    };
    for (int k = static_cast<int>(g.top_level()); k >= 0; --k) {
        const uint64_t quads = g.quadruples(k), ext = g.extent_length(k);
        std::vector<uint64_t> counts(quads, 0);
        for (uint64_t l = 0; l < quads; ++l) {
            if (!next()) throw format_error("malformed micro directory");
            while (p < bits.size() && !bits.get0(p)) {
                ++counts[l];
                ++p;
            }
        }
        if (!next()) throw format_error("malformed micro directory");
        for (uint64_t l = 0; l < quads; ++l)
            for (uint64_t c = 0; c < counts[l]; ++c) {
                vecs.push_back({static_cast<unsigned>(k), g.extent_start(k, l), p});
                p += ext;
            }
        if (p > bits.size()) throw format_error("truncated micro encoding");
    }
    if (p != bits.size()) throw format_error("trailing bits in micro encoding");

    Table t;
    t.m = m;
    t.answers.resize(m * m);
    for (uint64_t a = 0; a < m; ++a)
        for (uint64_t b = a; b < m; ++b) {
            const uint64_t len = b - a + 1;
            unsigned k0 = g.locate(a + 1, b + 1).k;
            auto& ans = t.answers[a * m + b];
            for (const auto& v : vecs) {
                if (v.k < k0 || !g.window_fits(v.start, g.extent_length(v.k), a, len)) continue;
                uint64_t off = g.offset_in(v.start, a), cnt = 0, first = 0;
                for (uint64_t u = 0; u < len; ++u)
                    if (bits.get0(v.bitpos + off + u) && cnt++ == 0) first = a + u;
                if (cnt && tau.is_majority(cnt, len)) ans.push_back(static_cast<uint8_t>(first));
            }
            std::sort(ans.begin(), ans.end());
            ans.erase(std::unique(ans.begin(), ans.end()), ans.end());
        }
    return t;
}

// Restricted growth strings of length len, or none when there are more
// than `cap` of them.
inline std::vector<std::vector<uint32_t>> all_patterns(uint64_t len, uint64_t cap) {
    std::vector<std::vector<uint32_t>> out;
    std::vector<uint32_t> cur;
    bool overflow = false;
    auto rec = [&](auto&& self, uint32_t maxv) -> void {
        if (overflow) return;
        if (cur.size() == len) {
            if (out.size() >= cap) {
                overflow = true;
                return;
            }
            out.push_back(cur);
            return;
        }
        for (uint32_t v = 1; v <= maxv + 1; ++v) {
            cur.push_back(v);
            self(self, std::max(maxv, v));
            cur.pop_back();
        }
    };
    rec(rec, 0);
    if (overflow) out.clear();
    return out;
}

}  // namespace micro_code

class MicroStore {
   public:
    MicroStore() : lock_(std::make_unique<std::mutex>()) {}

    static MicroStore build(std::span<const uint32_t> ranks, uint64_t n_pad, int level, MicroBranch branch,
                            Tau build_tau, Tau query_tau, bool strict) {
        MicroStore ms;
        ms.n_ = ranks.size();
        ms.n_pad_ = n_pad;
        ms.level_ = level;
        ms.branch_ = level < 0 ? MicroBranch::none : branch;
        ms.build_tau_ = build_tau;
        ms.query_tau_ = query_tau;
        ms.strict_ = strict;
        if (ms.branch_ == MicroBranch::none) return ms;
        const uint64_t B = uint64_t(1) << level, stride = 4 * B;
        const uint64_t arrays = (ms.n_ + 2 * B - 1) / (2 * B);
        auto slice = [&](uint64_t l) {
            uint64_t lo = 2 * l * B, hi = std::min(lo + stride, ms.n_);
            return ranks.subspan(lo, hi - lo);
        };
        if (ms.branch_ == MicroBranch::scan) {
            uint32_t widest = 1;
            std::vector<std::vector<uint32_t>> ids(arrays);
            for (uint64_t l = 0; l < arrays; ++l) {
                ids[l] = micro_code::local_ids(slice(l));
                for (auto v : ids[l]) widest = std::max(widest, v);
            }
            ms.values_ = PackedInts(arrays * stride, static_cast<unsigned>(std::bit_width(widest)));
            for (uint64_t l = 0; l < arrays; ++l)
                for (size_t x = 0; x < ids[l].size(); ++x) ms.values_.set(l * stride + x, ids[l][x]);
        } else {
            std::vector<uint64_t> starts{0};
            for (uint64_t l = 0; l < arrays; ++l) {
                micro_code::encode(slice(l), stride, build_tau, ms.codes_);
                starts.push_back(ms.codes_.size());
            }
            ms.starts_ = PackedInts(starts.size(), std::max(1, static_cast<int>(std::bit_width(ms.codes_.size()))));
            for (size_t t = 0; t < starts.size(); ++t) ms.starts_.set(t, starts[t]);
            if (strict) ms.precompute(ranks);
        }
        return ms;
    }

    int level() const { return level_; }
    MicroBranch branch() const { return branch_; }
    bool covers(unsigned k) const { return static_cast<int>(k) <= level_; }
    uint64_t array_count() const {
        if (branch_ == MicroBranch::none) return 0;
        return branch_ == MicroBranch::scan ? values_.size() / stride() : starts_.size() - 1;
    }
    uint64_t stride() const { return uint64_t(4) << level_; }
    uint64_t code_bits(uint64_t l) const { return starts_.get(l + 1) - starts_.get(l); }
    uint64_t memo_size() const {
        std::lock_guard<std::mutex> g(*lock_);
        return memo_.size();
    }

    // The micro array holding [s, e] (0-based), given the quadruple the
    // range was located at.
    uint64_t array_for(const Geometry& g, QueryLocation loc, uint64_t s) const {
        if (static_cast<int>(loc.k) == level_ && !g.wraps(loc.k, loc.offset)) return loc.offset;
        return s / (uint64_t(2) << level_);
    }

    MicroAnswer query(const Geometry& g, QueryLocation loc, uint64_t s, uint64_t e) const {
        if (!covers(loc.k) || branch_ == MicroBranch::none) throw addressing_error("range is not in the micro regime");
        uint64_t l = array_for(g, loc, s);
        uint64_t base = l * (uint64_t(2) << level_);
        if (l >= array_count() || e - base >= stride()) throw addressing_error("range leaves its micro array");
        return branch_ == MicroBranch::scan ? scan(l, s - base, e - base, base) : lookup(l, s - base, e - base, base);
    }

    SpaceBits space_bits() const {
        SpaceBits sb;
        sb.header = 64 * 4;
        if (branch_ == MicroBranch::scan) sb.leading = values_.serialized_bits();
        if (branch_ == MicroBranch::encoded) {
            sb.leading = codes_.serialized_bits();
            sb.directory = starts_.serialized_bits();
        }
        return sb;
    }

    // Words written before the first payload bit (ids or codes) of a branch.
    static uint64_t payload_word(MicroBranch b) {
        if (b == MicroBranch::scan) return 8;
        if (b == MicroBranch::encoded) return 6;
        throw addressing_error("micro store has no payload");
    }

    void write(WordWriter& out) const {
        out.put(n_);
        out.put(n_pad_);
        out.put(static_cast<uint64_t>(static_cast<int64_t>(level_)));
        out.put(static_cast<uint64_t>(branch_));
        if (branch_ == MicroBranch::scan) values_.write(out);
        if (branch_ == MicroBranch::encoded) {
            codes_.write(out);
            starts_.write(out);
        }
    }

    static MicroStore read(WordReader& in, Tau build_tau, Tau query_tau, bool strict) {
        MicroStore ms;
        ms.n_ = in.get();
        ms.n_pad_ = in.get();
        ms.level_ = static_cast<int>(static_cast<int64_t>(in.get()));
        uint64_t br = in.get();
        if (br > 2 || ms.level_ < -1 || ms.level_ > 62) throw format_error("bad micro store header");
        ms.branch_ = static_cast<MicroBranch>(br);
        ms.build_tau_ = build_tau;
        ms.query_tau_ = query_tau;
        ms.strict_ = strict;
        if ((ms.branch_ == MicroBranch::none) != (ms.level_ < 0)) throw format_error("bad micro store header");
        if (ms.branch_ == MicroBranch::none) return ms;
        const uint64_t arrays = (ms.n_ + (uint64_t(2) << ms.level_) - 1) / (uint64_t(2) << ms.level_);
        if (ms.branch_ == MicroBranch::scan) {
            ms.values_ = PackedInts::read(in);
            if (ms.values_.size() != arrays * ms.stride()) throw format_error("micro array size mismatch");
        } else {
            ms.codes_ = PlainBits::read(in);
            ms.starts_ = PackedInts::read(in);
            if (ms.starts_.size() != arrays + 1 || ms.starts_.get(0) != 0 || ms.starts_.get(arrays) != ms.codes_.size())
                throw format_error("micro encoding directory mismatch");
            for (uint64_t l = 0; l < arrays; ++l)
                if (ms.starts_.get(l + 1) < ms.starts_.get(l)) throw format_error("micro encoding directory mismatch");
            if (strict) ms.precompute({});
        }
        return ms;
    }

    bool operator==(const MicroStore& o) const {
        return n_ == o.n_ && n_pad_ == o.n_pad_ && level_ == o.level_ && branch_ == o.branch_ && values_ == o.values_ &&
               codes_ == o.codes_ && starts_ == o.starts_;
    }

   private:
    MicroAnswer scan(uint64_t l, uint64_t a, uint64_t b, uint64_t base) const {
        MicroAnswer ans;
        std::vector<uint32_t> count(uint64_t(1) << values_.width(), 0);
        std::vector<uint64_t> first(count.size(), 0), order;
        for (uint64_t x = a; x <= b; ++x) {
            auto v = values_.get(l * stride() + x);
            if (count[v]++ == 0) {
                first[v] = x;
                order.push_back(v);
            }
        }
        ans.verified = order.size();
        for (auto v : order)
            if (query_tau_.is_majority(count[v], b - a + 1)) ans.positions.push_back(base + first[v]);
        return ans;
    }

    PlainBits code_of(uint64_t l) const {
        uint64_t lo = starts_.get(l), len = starts_.get(l + 1) - lo;
        PlainBits b;
        for (uint64_t t = 0; t < len; t += 64) {
            unsigned w = static_cast<unsigned>(std::min<uint64_t>(64, len - t));
            b.append_bits(codes_.get_bits(lo + t, w), w);
        }
        return b;
    }

    static std::string key_of(const PlainBits& b) {
        std::string key(reinterpret_cast<const char*>(b.words().data()), b.words().size() * 8);
        key += std::to_string(b.size());
        return key;
    }

    MicroAnswer lookup(uint64_t l, uint64_t a, uint64_t b, uint64_t base) const {
        PlainBits code = code_of(l);
        std::string key = key_of(code);
        std::shared_ptr<const micro_code::Table> table;
        {
            std::lock_guard<std::mutex> g(*lock_);
            auto it = memo_.find(key);
            if (it != memo_.end()) table = it->second;
        }
        if (!table) {
            if (strict_) throw std::logic_error("micro encoding missing from the precomputed table");
            table = std::make_shared<const micro_code::Table>(micro_code::decode(code, stride(), query_tau_));
            std::lock_guard<std::mutex> g(*lock_);
            memo_.emplace(key, table);
        }
        MicroAnswer ans;
        for (auto x : table->at(a, b)) ans.positions.push_back(base + x);
        ans.verified = ans.positions.size();
        return ans;
    }

    void remember(const PlainBits& code) {
        std::string key = key_of(code);
        if (memo_.count(key)) return;
        memo_.emplace(key, std::make_shared<const micro_code::Table>(micro_code::decode(code, stride(), query_tau_)));
    }

    // Strict mode fills the table before any query: every possible small
    // array when one encoding is short enough, else every encoding present.
    void precompute(std::span<const uint32_t>) {
        std::lock_guard<std::mutex> g(*lock_);
        const double tau_bits = std::log2(double(build_tau_.q) / build_tau_.p);
        const bool universal =
            config::kMicroEncodingConstant * double(stride()) * tau_bits <= config::kUniversalTableBits;
        std::vector<uint64_t> lengths;
        for (uint64_t l = 0; l < array_count(); ++l) {
            uint64_t len = std::min(stride(), n_ - l * (uint64_t(2) << level_));
            if (std::find(lengths.begin(), lengths.end(), len) == lengths.end()) lengths.push_back(len);
        }
        bool done = universal;
        for (auto len : lengths) {
            if (!done) break;
            auto pats = micro_code::all_patterns(len, uint64_t(1) << config::kUniversalTableBits);
            if (pats.empty()) {
                done = false;
                break;
            }
            for (const auto& p : pats) {
                PlainBits code;
                micro_code::encode(p, stride(), build_tau_, code);
                remember(code);
            }
        }
        for (uint64_t l = 0; l < array_count(); ++l) remember(code_of(l));
    }

    uint64_t n_ = 0;
    uint64_t n_pad_ = 4;
    int level_ = -1;
    MicroBranch branch_ = MicroBranch::none;
    Tau build_tau_;
    Tau query_tau_;
    bool strict_ = false;
    PackedInts values_;
    PlainBits codes_;
    PackedInts starts_;
    std::unique_ptr<std::mutex> lock_;
    mutable std::unordered_map<std::string, std::shared_ptr<const micro_code::Table>> memo_;
};

}  // namespace rmaj
