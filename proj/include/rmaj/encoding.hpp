#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bitvec.hpp"
#include "config.hpp"
#include "decomposition.hpp"
#include "errors.hpp"
#include "micro.hpp"
#include "sequences.hpp"
#include "serialize.hpp"
#include "tau.hpp"

// The range tau-majority encoding. Levels above the micro level keep, per
// quadruple, one extent bitmap for each candidate still active in it and a
// pointer for each candidate already covered by a higher level. The array
// itself is not kept; answers are positions.

namespace rmaj {

enum class Backend : uint8_t { per_candidate = 0, grouped = 1 };

inline const char* backend_name(Backend b) { return b == Backend::grouped ? "grouped" : "per_candidate"; }
inline const char* branch_name(MicroBranch b) {
    return b == MicroBranch::scan ? "scan" : b == MicroBranch::encoded ? "encoded" : "none";
}

// A stored vector: level, quadruple and slot among the quadruple's stored
// candidates.
struct PointerTarget {
    unsigned k = 0;
    uint64_t offset = 0;
    uint64_t slot = 0;

    friend bool operator==(const PointerTarget&, const PointerTarget&) = default;
};

struct TraceQuadruple {
    unsigned k = 0;
    uint64_t offset = 0;
    std::vector<uint32_t> candidates;  // rank ids, first-occurrence order
    std::vector<uint32_t> stored;
    std::vector<PointerTarget> pointers;
};

// Build-time record for tests. sponsor_levels[x] lists the levels at which
// position x (0-based) sponsored a stored vector.
struct BuildTrace {
    std::vector<TraceQuadruple> quadruples;
    std::vector<std::vector<unsigned>> sponsor_levels;
};

struct BuildOptions {
    std::optional<Backend> backend;
    std::optional<MicroBranch> branch;
    std::optional<uint64_t> z;
    bool strict_lookup = false;
    BuildTrace* trace = nullptr;
};

struct QueryStats {
    uint64_t verified = 0;
    uint64_t pointers_followed = 0;
    bool micro = false;
};

struct SpaceReport {
    uint64_t candidate_bits = 0;
    uint64_t directories = 0;
    uint64_t pointers = 0;
    uint64_t micro = 0;
    uint64_t backend = 0;
    uint64_t header = 0;
    uint64_t total = 0;
    double bits_per_element = 0;
};

// Per-quadruple counts in unary: a one opens each quadruple, followed by
// one zero per item, and a final one closes the level.
inline PlainBits unary_directory(std::span<const uint64_t> counts) {
    PlainBits b;
    for (auto c : counts) {
        b.push_back(true);
        for (uint64_t t = 0; t < c; ++t) b.push_back(false);
    }
    b.push_back(true);
    return b;
}

// Dense ranks of the values, in value order, and the alphabet size.
template <typename T>
std::pair<std::vector<uint32_t>, uint64_t> rank_reduce(std::span<const T> a) {
    std::vector<T> sorted(a.begin(), a.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<uint32_t> r(a.size());
    for (size_t x = 0; x < a.size(); ++x)
        r[x] = static_cast<uint32_t>(std::lower_bound(sorted.begin(), sorted.end(), a[x]) - sorted.begin());
    return {std::move(r), sorted.size()};
}

class MajorityEncoding {
   public:
    static constexpr char kMagic[4] = {'R', 'M', 'A', 'J'};

    MajorityEncoding() = default;

    template <typename T>
    static MajorityEncoding build(std::span<const T> a, Tau tau, const BuildOptions& opt = {}) {
        if (a.empty()) throw validation_error("array must not be empty");
        auto [ranks, sigma] = rank_reduce(a);
        return build_ranks(ranks, sigma, tau, opt);
    }

    template <typename T>
    static MajorityEncoding build(const std::vector<T>& a, Tau tau, const BuildOptions& opt = {}) {
        return build(std::span<const T>(a), tau, opt);
    }

    // ranks[x] in [0, sigma).
    static MajorityEncoding build_ranks(std::span<const uint32_t> ranks, uint64_t sigma, Tau tau,
                                        const BuildOptions& opt = {}) {
        if (ranks.empty()) throw validation_error("array must not be empty");
        tau = Tau::make(tau.p, tau.q);
        MajorityEncoding enc;
        enc.n_ = ranks.size();
        enc.tau_ = tau;
        enc.geo_ = Geometry(enc.n_);
        const Tau bt = tau.for_build();
        const unsigned lg = enc.geo_.lg_pad();
        enc.backend_ = opt.backend.value_or(u128(bt.q) > u128(bt.p) * lg * lg ? Backend::grouped : Backend::per_candidate);
        enc.branch_ =
            opt.branch.value_or(u128(bt.q) * bt.q >= u128(bt.p) * bt.p * lg ? MicroBranch::scan : MicroBranch::encoded);
        if (enc.branch_ == MicroBranch::none) throw validation_error("micro branch must be scan or encoded");
        if (opt.z)
            enc.z_ = *opt.z;
        else if (enc.branch_ == MicroBranch::scan)
            enc.z_ = bt.q / bt.p;
        else
            enc.z_ = default_encoded_z(lg, bt);
        enc.strict_ = opt.strict_lookup;
        enc.derive_layout();
        if (enc.branch_ == MicroBranch::encoded && enc.micro_level_ >= 0 && (uint64_t(4) << enc.micro_level_) > 256)
            throw validation_error("encoded micro arrays are limited to 256 positions");
        enc.micro_ = MicroStore::build(ranks, enc.geo_.n_pad(), enc.micro_level_, enc.branch_, bt, tau, enc.strict_);
        enc.build_levels(ranks, sigma, opt.trace);
        return enc;
    }

    static uint64_t default_encoded_z(unsigned lg_pad, Tau bt) {
        double c = config::kMicroEncodingConstant;
        if (c <= 0) return 0;
        return static_cast<uint64_t>(std::floor(lg_pad / (2 * c * std::log2(double(bt.q) / bt.p))));
    }

    uint64_t size() const { return n_; }
    Tau tau() const { return tau_; }
    Tau build_tau() const { return tau_.for_build(); }
    Backend backend() const { return backend_; }
    MicroBranch branch() const { return branch_; }
    uint64_t z() const { return z_; }
    int micro_level() const { return micro_level_; }
    unsigned first_level() const { return static_cast<unsigned>(micro_level_ + 1); }
    const Geometry& geometry() const { return geo_; }
    const MicroStore& micro() const { return micro_; }
    bool stores_level(unsigned k) const { return k >= first_level() && k <= geo_.top_level(); }

    // Stored vectors and pointers of one quadruple.
    uint64_t stored_count(unsigned k, uint64_t l) const { return span_of(level(k).dir, l).second; }
    uint64_t pointer_count(unsigned k, uint64_t l) const { return span_of(level(k).ptr_dir, l).second; }
    uint64_t stored_total(unsigned k) const { return level(k).dir.zeros(); }
    uint64_t pointer_total(unsigned k) const { return level(k).ptr_dir.zeros(); }
    const RankSelectBitVector& directory(unsigned k) const { return level(k).dir; }
    const RankSelectBitVector& pointer_directory(unsigned k) const { return level(k).ptr_dir; }
    uint64_t vector_bits(unsigned k) const { return level(k).vectors.size(); }

    std::vector<PointerTarget> pointers(unsigned k, uint64_t l) const {
        auto [first, count] = span_of(level(k).ptr_dir, l);
        std::vector<PointerTarget> out;
        for (uint64_t t = 0; t < count; ++t) out.push_back(decode_pointer(k, l, first + t));
        return out;
    }

    std::vector<uint64_t> query_positions(uint64_t i, uint64_t j, QueryStats* stats = nullptr) const {
        std::vector<uint64_t> out;
        answer(i, j, false, out, stats);
        return out;
    }

    bool query_decision(uint64_t i, uint64_t j, QueryStats* stats = nullptr) const {
        std::vector<uint64_t> out;
        answer(i, j, true, out, stats);
        return !out.empty();
    }

    uint64_t query_count(uint64_t i, uint64_t j, QueryStats* stats = nullptr) const {
        return query_positions(i, j, stats).size();
    }

    // Occurrences in [i, j] of the element behind one stored slot of
    // quadruple l at level k. [i, j] must lie inside the quadruple's extent.
    uint64_t candidate_frequency(unsigned k, uint64_t l, uint64_t slot, uint64_t i, uint64_t j) const {
        check_range(i, j);
        if (!stores_level(k) || l >= geo_.quadruples(k)) throw addressing_error("no such stored quadruple");
        if (slot >= stored_count(k, l)) throw addressing_error("candidate slot holds no vector");
        if (!geo_.window_fits(geo_.extent_start(k, l), geo_.extent_length(k), i - 1, j - i + 1))
            throw addressing_error("range lies outside the quadruple's extent");
        return frequency({k, l, slot}, i - 1, j - i + 1).first;
    }

    std::vector<uint64_t> micro_query(uint64_t i, uint64_t j, QueryStats* stats = nullptr) const {
        check_range(i, j);
        auto loc = geo_.locate(i, j);
        if (!micro_.covers(loc.k)) throw addressing_error("range is not in the micro regime");
        auto ans = micro_.query(geo_, loc, i - 1, j - 1);
        if (stats) {
            stats->micro = true;
            stats->verified = ans.verified;
        }
        for (auto& p : ans.positions) ++p;
        return ans.positions;
    }

    SpaceReport space_report() const {
        SpaceReport r;
        auto sections = build_sections();
        r.header = 8 * header_bytes(sections.size());
        for (const auto& s : sections) {
            uint64_t bits = 64 * s.words.size();
            switch (s.id >> 8) {
                case kDir:
                case kPtrDir: r.directories += bits; break;
                case kVectors: r.candidate_bits += bits; break;
                case kPointers: r.pointers += bits; break;
                case kMarks:
                case kSymbols: r.backend += bits; break;
                case kMicro: r.micro += bits; break;
            }
        }
        r.total = r.candidate_bits + r.directories + r.pointers + r.micro + r.backend + r.header;
        r.bits_per_element = double(r.total) / double(n_);
        return r;
    }

    // Container: magic, version u16, n u64, tau p u32 and q u32, backend u8,
    // micro branch u8, Z u64, section count u32, then per section (id u32,
    // bit length u64, byte offset u64), then the sections as little-endian
    // 64-bit words.
    std::string serialize() const {
        auto sections = build_sections();
        std::string out(kMagic, 4);
        le::put_u16(out, config::kFormatVersion);
        le::put_u64(out, n_);
        le::put_u32(out, tau_.p);
        le::put_u32(out, tau_.q);
        out.push_back(static_cast<char>(backend_));
        out.push_back(static_cast<char>(branch_));
        le::put_u64(out, z_);
        le::put_u32(out, static_cast<uint32_t>(sections.size()));
        uint64_t offset = header_bytes(sections.size());
        for (const auto& s : sections) {
            le::put_u32(out, s.id);
            le::put_u64(out, 64 * s.words.size());
            le::put_u64(out, offset);
            offset += 8 * s.words.size();
        }
        for (const auto& s : sections)
            for (auto w : s.words) le::put_u64(out, w);
        return out;
    }

    static MajorityEncoding deserialize(std::string_view in, bool strict_lookup = false) {
        if (in.size() < 4 || in.substr(0, 4) != std::string_view(kMagic, 4)) throw format_error("bad magic");
        size_t pos = 4;
        if (le::get_uint(in, pos, 2) != config::kFormatVersion) throw format_error("unsupported format version");
        MajorityEncoding enc;
        enc.n_ = le::get_uint(in, pos, 8);
        if (enc.n_ == 0) throw format_error("container holds an empty array");
        uint64_t p = le::get_uint(in, pos, 4), q = le::get_uint(in, pos, 4);
        if (p == 0 || p >= q) throw format_error("bad tau in container");
        enc.tau_ = Tau::make(p, q);
        uint64_t backend = le::get_uint(in, pos, 1), branch = le::get_uint(in, pos, 1);
        if (backend > 1 || branch < 1 || branch > 2) throw format_error("bad backend or micro branch tag");
        enc.backend_ = static_cast<Backend>(backend);
        enc.branch_ = static_cast<MicroBranch>(branch);
        enc.z_ = le::get_uint(in, pos, 8);
        enc.strict_ = strict_lookup;
        enc.geo_ = Geometry(enc.n_);
        enc.derive_layout();
        uint64_t count = le::get_uint(in, pos, 4);
        if (count != enc.expected_sections().size()) throw format_error("unexpected section count");
        std::map<uint32_t, std::vector<uint64_t>> payload;
        uint64_t expect_offset = header_bytes(count);
        for (uint64_t s = 0; s < count; ++s) {
            uint32_t id = static_cast<uint32_t>(le::get_uint(in, pos, 4));
            uint64_t bits = le::get_uint(in, pos, 8), offset = le::get_uint(in, pos, 8);
            if (bits % 64 || offset != expect_offset || offset + bits / 8 > in.size())
                throw format_error("bad section table entry");
            std::vector<uint64_t> words(bits / 64);
            size_t wp = offset;
            for (auto& w : words) w = le::get_uint(in, wp, 8);
            if (!payload.emplace(id, std::move(words)).second) throw format_error("duplicate section");
            expect_offset = offset + bits / 8;
        }
        if (expect_offset != in.size()) throw format_error("trailing bytes after the last section");
        for (auto id : enc.expected_sections())
            if (!payload.count(id)) throw format_error("missing section " + std::to_string(id));
        enc.load_sections(payload);
        return enc;
    }

   private:
    enum SectionKind : uint32_t { kDir = 1, kVectors = 2, kPtrDir = 3, kPointers = 4, kMarks = 5, kSymbols = 6, kMicro = 7 };

    struct Level {
        unsigned k = 0;
        RankSelectBitVector dir;      // stored vectors per quadruple, unary
        RankSelectBitVector ptr_dir;  // pointers per quadruple, unary
        PlainBits pointers;
        SparseSelectVector vectors;  // per-candidate backend
        SparseSelectVector marks;    // grouped backend
        GroupedSequence symbols;     // grouped backend, slot + 1 per mark
    };

    struct Section {
        uint32_t id;
        std::vector<uint64_t> words;
    };

    static uint64_t header_bytes(uint64_t sections) { return 4 + 2 + 8 + 4 + 4 + 1 + 1 + 8 + 4 + 20 * sections; }

    void derive_layout() {
        micro_level_ = -1;
        for (unsigned k = 0; k <= geo_.top_level(); ++k)
            if ((uint64_t(4) << k) <= z_) micro_level_ = static_cast<int>(k);
        const Tau bt = build_tau();
        level_bits_ = std::max(1u, detail::ceil_log2(geo_.lg_pad()));
        slot_bits_ = std::max(1u, detail::ceil_log2(bt.candidate_bound()));
        pointer_width_ = level_bits_ + 2 + slot_bits_;
    }

    const Level& level(unsigned k) const {
        if (!stores_level(k)) throw addressing_error("level " + std::to_string(k) + " is not stored");
        return levels_[k - first_level()];
    }

    // (items before quadruple l, items of quadruple l) in a unary directory.
    static std::pair<uint64_t, uint64_t> span_of(const RankSelectBitVector& dir, uint64_t l) {
        uint64_t a = dir.select_unchecked(l + 1), b = dir.select_unchecked(l + 2);
        return {a - l, b - a - 1};
    }

    void check_range(uint64_t i, uint64_t j) const {
        if (i < 1 || i > j || j > n_) throw range_error("query range out of bounds");
    }

    PointerTarget decode_pointer(unsigned k, uint64_t l, uint64_t index) const {
        const auto& bits = level(k).pointers;
        uint64_t at = index * pointer_width_;
        PointerTarget t;
        t.k = static_cast<unsigned>(bits.get_bits(at, level_bits_));
        uint64_t sel = bits.get_bits(at + level_bits_, 2);
        t.slot = bits.get_bits(at + level_bits_ + 2, slot_bits_);
        if (!stores_level(t.k) || t.k <= k) throw format_error("pointer to an unstored level");
        uint64_t quads = geo_.quadruples(t.k);
        uint64_t anchor = (geo_.range_start(k, l) >> t.k) / 2;
        t.offset = (anchor + sel + quads - 1) % quads;
        return t;
    }

    void encode_pointer(PlainBits& bits, unsigned k, uint64_t l, const PointerTarget& t) const {
        uint64_t quads = geo_.quadruples(t.k);
        uint64_t anchor = (geo_.range_start(k, l) >> t.k) / 2;
        uint64_t sel = (t.offset + quads + 1 - anchor) % quads;
        if (sel > 2) throw std::logic_error("pointer target is not adjacent to the pointing quadruple");
        bits.append_bits(t.k, level_bits_);
        bits.append_bits(sel, 2);
        bits.append_bits(t.slot, slot_bits_);
    }

    // Count of the target's element in [s, s + len) (0-based) and the first
    // position holding it there. The range must fit the target's extent.
    std::pair<uint64_t, uint64_t> frequency(const PointerTarget& t, uint64_t s, uint64_t len) const {
        const Level& L = level(t.k);
        const uint64_t ext = geo_.extent_length(t.k), ext_start = geo_.extent_start(t.k, t.offset);
        const uint64_t off = geo_.offset_in(ext_start, s);
        if (backend_ == Backend::per_candidate) {
            uint64_t v = span_of(L.dir, t.offset).first + t.slot;
            uint64_t base = v * ext + off;
            uint64_t r1 = L.vectors.rank_prefix(base), r2 = L.vectors.rank_prefix(base + len);
            if (r1 == r2) return {0, 0};
            return {r2 - r1, geo_.position_at(ext_start, L.vectors.value0(r1) - v * ext)};
        }
        uint64_t base = t.offset * ext + off;
        uint64_t r1 = L.marks.rank_prefix(base), r2 = L.marks.rank_prefix(base + len);
        if (r1 == r2) return {0, 0};
        uint32_t y = static_cast<uint32_t>(t.slot + 1);
        uint64_t before = L.symbols.rank(y, r1), cnt = L.symbols.rank(y, r2) - before;
        if (cnt == 0) return {0, 0};
        return {cnt, first_marked(L, t.offset, y, before)};
    }

    uint64_t first_marked(const Level& L, uint64_t l, uint32_t y, uint64_t before) const {
        const uint64_t ext = geo_.extent_length(L.k);
        uint64_t idx = *L.symbols.select(y, before + 1);
        return geo_.position_at(geo_.extent_start(L.k, l), L.marks.value0(idx - 1) - l * ext);
    }

    void answer(uint64_t i, uint64_t j, bool decision, std::vector<uint64_t>& out, QueryStats* stats) const {
        check_range(i, j);
        QueryStats local;
        QueryStats& st = stats ? *stats : local;
        st = QueryStats{};
        const uint64_t s = i - 1, len = j - i + 1;
        const auto loc = geo_.locate(i, j);
        if (micro_.covers(loc.k)) {
            auto ans = micro_.query(geo_, loc, s, j - 1);
            st.micro = true;
            st.verified = ans.verified;
            for (auto p : ans.positions) out.push_back(p + 1);
            if (decision && out.size() > 1) out.resize(1);
            return;
        }
        const unsigned k = loc.k;
        const uint64_t l = loc.offset;
        const Level& L = level(k);
        auto accept = [&](uint64_t count, uint64_t first) {
            if (count == 0 || !tau_.is_majority(count, len)) return false;
            out.push_back(first + 1);
            return true;
        };
        const uint64_t own = stored_count(k, l);
        if (backend_ == Backend::per_candidate) {
            for (uint64_t c = 0; c < own; ++c) {
                ++st.verified;
                auto [cnt, first] = frequency({k, l, c}, s, len);
                if (accept(cnt, first) && decision) return;
            }
        } else if (own > 0) {
            const uint64_t ext = geo_.extent_length(k);
            uint64_t base = l * ext + geo_.offset_in(geo_.extent_start(k, l), s);
            uint64_t r1 = L.marks.rank_prefix(base), r2 = L.marks.rank_prefix(base + len);
            st.verified += own;
            if (r1 < r2) {
                std::vector<uint32_t> ys(own);
                for (uint64_t c = 0; c < own; ++c) ys[c] = static_cast<uint32_t>(c + 1);
                auto freq = L.symbols.multi_freq(ys, r1 + 1, r2);
                for (uint64_t c = 0; c < own; ++c) {
                    if (freq[c] == 0 || !tau_.is_majority(freq[c], len)) continue;
                    out.push_back(first_marked(L, l, ys[c], L.symbols.rank(ys[c], r1)) + 1);
                    if (decision) return;
                }
            }
        }
        auto [pfirst, pcount] = span_of(L.ptr_dir, l);
        for (uint64_t t = 0; t < pcount; ++t) {
            ++st.pointers_followed;
            ++st.verified;
            auto [cnt, first] = frequency(decode_pointer(k, l, pfirst + t), s, len);
            if (accept(cnt, first) && decision) return;
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
    }

    void build_levels(std::span<const uint32_t> r, uint64_t sigma, BuildTrace* trace) {
        const uint64_t n = n_, pad = geo_.n_pad();
        const Tau bt = build_tau();
        std::vector<uint8_t> active(n, 1);
        std::vector<PointerTarget> sponsor(n);
        std::vector<uint64_t> count(sigma, 0);
        std::vector<int64_t> slot_of(sigma, -1), inactive_at(sigma, -1);
        if (trace) {
            trace->quadruples.clear();
            trace->sponsor_levels.assign(n, {});
        }
        levels_.assign(geo_.top_level() + 1 - first_level(), Level{});
        for (int kk = static_cast<int>(geo_.top_level()); kk >= static_cast<int>(first_level()); --kk) {
            const unsigned k = static_cast<unsigned>(kk);
            const uint64_t B = Geometry::block_size(k), quads = geo_.quadruples(k), ext = geo_.extent_length(k);
            Level& L = levels_[k - first_level()];
            L.k = k;
            std::vector<uint64_t> dir_counts(quads), ptr_counts(quads);
            std::vector<uint64_t> ones;  // vector or mark positions
            std::vector<uint32_t> symbols;
            std::vector<std::pair<uint64_t, PointerTarget>> retire;
            uint64_t stored_before = 0;
            for (uint64_t l = 0; l < quads; ++l) {
                const uint64_t start = geo_.range_start(k, l);
                std::vector<uint32_t> order;
                for (uint64_t t = 0; t < 4 * B; ++t) {
                    uint64_t x = (start + t) % pad;
                    if (x >= n) continue;
                    if (count[r[x]]++ == 0) order.push_back(r[x]);
                    if (!active[x] && inactive_at[r[x]] < 0) inactive_at[r[x]] = static_cast<int64_t>(x);
                }
                TraceQuadruple tq{k, l, {}, {}, {}};
                std::vector<uint32_t> stored;
                for (auto y : order) {
                    if (!bt.is_majority(count[y], B)) continue;
                    if (trace) tq.candidates.push_back(y);
                    if (inactive_at[y] < 0) {
                        slot_of[y] = static_cast<int64_t>(stored.size());
                        stored.push_back(y);
                        continue;
                    }
                    const PointerTarget& tgt = sponsor[inactive_at[y]];
                    if (!geo_.extent_contains_range(tgt.k, tgt.offset, start, 4 * B))
                        throw std::logic_error("covering vector does not span the quadruple");
                    encode_pointer(L.pointers, k, l, tgt);
                    if (decode_pointer_raw(k, l, tgt) != tgt) throw std::logic_error("pointer does not round-trip");
                    ++ptr_counts[l];
                    if (trace) tq.pointers.push_back(tgt);
                }
                for (auto y : order) {
                    count[y] = 0;
                    inactive_at[y] = -1;
                }
                dir_counts[l] = stored.size();
                const uint64_t ext_start = geo_.extent_start(k, l);
                if (backend_ == Backend::per_candidate) {
                    std::vector<std::vector<uint64_t>> bucket(stored.size());
                    for (uint64_t t = 0; t < ext; ++t) {
                        uint64_t x = (ext_start + t) % pad;
                        if (x < n && slot_of[r[x]] >= 0) bucket[slot_of[r[x]]].push_back(t);
                    }
                    for (size_t c = 0; c < stored.size(); ++c)
                        for (auto t : bucket[c]) ones.push_back((stored_before + c) * ext + t);
                } else {
                    for (uint64_t t = 0; t < ext; ++t) {
                        uint64_t x = (ext_start + t) % pad;
                        if (x < n && slot_of[r[x]] >= 0) {
                            ones.push_back(l * ext + t);
                            symbols.push_back(static_cast<uint32_t>(slot_of[r[x]] + 1));
                        }
                    }
                }
                for (uint64_t t = 0; t < 4 * B; ++t) {
                    uint64_t x = (start + t) % pad;
                    if (x >= n || slot_of[r[x]] < 0) continue;
                    retire.push_back({x, PointerTarget{k, l, static_cast<uint64_t>(slot_of[r[x]])}});
                    if (trace) {
                        auto& lv = trace->sponsor_levels[x];
                        if (lv.empty() || lv.back() != k) lv.push_back(k);
                    }
                }
                for (auto y : stored) slot_of[y] = -1;
                if (trace) {
                    tq.stored = stored;
                    trace->quadruples.push_back(std::move(tq));
                }
                stored_before += stored.size();
            }
            for (const auto& [x, tgt] : retire)
                if (active[x]) {
                    active[x] = 0;
                    sponsor[x] = tgt;
                }
            L.dir = RankSelectBitVector(unary_directory(dir_counts));
            L.ptr_dir = RankSelectBitVector(unary_directory(ptr_counts));
            if (backend_ == Backend::per_candidate) {
                L.vectors = SparseSelectVector::build_zero_based(stored_before * ext, ones.size(),
                                                                 [&](uint64_t i) { return ones[i]; });
            } else {
                L.marks = SparseSelectVector::build_zero_based(quads * ext, ones.size(), [&](uint64_t i) { return ones[i]; });
                L.symbols = GroupedSequence::build(symbols, bt.candidate_bound(), GroupedSequence::default_group_size(n));
            }
        }
    }

    // Decoding without the stored-level check, for the build-time self test
    // (the target level is filled in before the pointing level).
    PointerTarget decode_pointer_raw(unsigned k, uint64_t l, const PointerTarget& t) const {
        uint64_t quads = geo_.quadruples(t.k);
        uint64_t anchor = (geo_.range_start(k, l) >> t.k) / 2;
        uint64_t sel = (t.offset + quads + 1 - anchor) % quads;
        return {t.k, (anchor + sel + quads - 1) % quads, t.slot};
    }

    std::vector<uint32_t> expected_sections() const {
        std::vector<uint32_t> ids;
        for (unsigned k = first_level(); k <= geo_.top_level(); ++k) {
            ids.push_back(kDir << 8 | k);
            ids.push_back(kPtrDir << 8 | k);
            ids.push_back(kPointers << 8 | k);
            if (backend_ == Backend::per_candidate) {
                ids.push_back(kVectors << 8 | k);
            } else {
                ids.push_back(kMarks << 8 | k);
                ids.push_back(kSymbols << 8 | k);
            }
        }
        ids.push_back(kMicro << 8);
        return ids;
    }

    std::vector<Section> build_sections() const {
        std::vector<Section> out;
        for (auto id : expected_sections()) {
            WordWriter w;
            uint32_t kind = id >> 8;
            if (kind == kMicro) {
                micro_.write(w);
            } else {
                const Level& L = level(id & 0xff);
                switch (kind) {
                    case kDir: L.dir.write(w); break;
                    case kPtrDir: L.ptr_dir.write(w); break;
                    case kPointers: L.pointers.write(w); break;
                    case kVectors: L.vectors.write(w); break;
                    case kMarks: L.marks.write(w); break;
                    case kSymbols: L.symbols.write(w); break;
                }
            }
            out.push_back({id, w.take()});
        }
        return out;
    }

    void load_sections(const std::map<uint32_t, std::vector<uint64_t>>& payload) {
        auto reader_for = [&](uint32_t id) { return WordReader(payload.at(id)); };
        auto finish = [](const WordReader& rd) {
            if (!rd.done()) throw format_error("section has trailing words");
        };
        levels_.assign(geo_.top_level() + 1 - first_level(), Level{});
        for (unsigned k = first_level(); k <= geo_.top_level(); ++k) {
            Level& L = levels_[k - first_level()];
            L.k = k;
            const uint64_t quads = geo_.quadruples(k), ext = geo_.extent_length(k);
            auto check_dir = [&](const RankSelectBitVector& d) {
                if (d.ones() != quads + 1 || !d.bits().get0(0) || !d.bits().get0(d.size() - 1))
                    throw format_error("malformed level directory");
            };
            {
                auto rd = reader_for(kDir << 8 | k);
                L.dir = RankSelectBitVector::read(rd);
                finish(rd);
                check_dir(L.dir);
            }
            {
                auto rd = reader_for(kPtrDir << 8 | k);
                L.ptr_dir = RankSelectBitVector::read(rd);
                finish(rd);
                check_dir(L.ptr_dir);
            }
            {
                auto rd = reader_for(kPointers << 8 | k);
                L.pointers = PlainBits::read(rd);
                finish(rd);
                if (L.pointers.size() != L.ptr_dir.zeros() * pointer_width_) throw format_error("pointer block size mismatch");
            }
            if (backend_ == Backend::per_candidate) {
                auto rd = reader_for(kVectors << 8 | k);
                L.vectors = SparseSelectVector::read(rd);
                finish(rd);
                if (L.vectors.size() != L.dir.zeros() * ext) throw format_error("candidate vector length mismatch");
            } else {
                auto rd = reader_for(kMarks << 8 | k);
                L.marks = SparseSelectVector::read(rd);
                finish(rd);
                auto rs = reader_for(kSymbols << 8 | k);
                L.symbols = GroupedSequence::read(rs);
                finish(rs);
                if (L.marks.size() != quads * ext || L.symbols.size() != L.marks.ones())
                    throw format_error("grouped backend size mismatch");
            }
        }
        for (unsigned k = first_level(); k <= geo_.top_level(); ++k)
            for (uint64_t l = 0; l < geo_.quadruples(k); ++l)
                for (const auto& t : pointers(k, l))
                    if (t.slot >= stored_count(t.k, t.offset)) throw format_error("pointer to a missing slot");
        auto rd = reader_for(kMicro << 8);
        micro_ = MicroStore::read(rd, build_tau(), tau_, strict_);
        finish(rd);
        if (micro_.level() != micro_level_ || micro_.branch() != (micro_level_ < 0 ? MicroBranch::none : branch_))
            throw format_error("micro store does not match the header");
    }

    uint64_t n_ = 0;
    Tau tau_;
    Geometry geo_;
    Backend backend_ = Backend::per_candidate;
    MicroBranch branch_ = MicroBranch::scan;
    uint64_t z_ = 0;
    int micro_level_ = -1;
    bool strict_ = false;
    unsigned level_bits_ = 1;
    unsigned slot_bits_ = 1;
    unsigned pointer_width_ = 4;
    std::vector<Level> levels_;
    MicroStore micro_;
};

}  // namespace rmaj
