#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#if defined(__BMI2__)
#include <immintrin.h>
#endif

#include "errors.hpp"
#include "serialize.hpp"

// Bit vectors with access/rank/select. Public positions are 1-based, as in
// A[1..n]; rank(i) counts ones in V[1..i] and select(j) returns the position
// of the j-th one, or nullopt when there are fewer than j ones.

namespace rmaj {

// Serialized size of a structure, split into the raw encoded stream, the
// rank/select directories built on top of it, and fixed header fields.
struct SpaceBits {
    uint64_t leading = 0;
    uint64_t directory = 0;
    uint64_t header = 0;

    uint64_t total() const { return leading + directory + header; }

    SpaceBits& operator+=(const SpaceBits& o) {
        leading += o.leading;
        directory += o.directory;
        header += o.header;
        return *this;
    }
};

namespace detail {

inline uint64_t words_for(uint64_t bits) { return (bits + 63) / 64; }

// Bit index of the (r+1)-th set bit of w; r < popcount(w).
inline unsigned select_in_word(uint64_t w, unsigned r) {
#if defined(__BMI2__)
    return static_cast<unsigned>(std::countr_zero(_pdep_u64(uint64_t(1) << r, w)));
#else
    unsigned base = 0;
    for (;;) {
        unsigned c = static_cast<unsigned>(std::popcount(w & 0xffu));
        if (r < c) break;
        r -= c;
        w >>= 8;
        base += 8;
    }
    for (unsigned i = 0; i < r; ++i) w &= w - 1;
    return base + static_cast<unsigned>(std::countr_zero(w));
#endif
}

// ceil(log2(x)) for x >= 1.
inline unsigned ceil_log2(uint64_t x) { return x <= 1 ? 0 : static_cast<unsigned>(std::bit_width(x - 1)); }

inline unsigned floor_log2(uint64_t x) { return x == 0 ? 0 : static_cast<unsigned>(std::bit_width(x) - 1); }

}  // namespace detail

class PlainBits {
   public:
    PlainBits() = default;
    explicit PlainBits(uint64_t n) : size_(n), words_(detail::words_for(n), 0) {}

    // Parses a string of '0'/'1' characters, leftmost character is position 1.
    static PlainBits from_string(std::string_view s) {
        PlainBits b(s.size());
        for (size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '1')
                b.set0(i, true);
            else if (s[i] != '0')
                throw validation_error("bit string may only contain 0 and 1");
        }
        return b;
    }

    uint64_t size() const { return size_; }
    std::span<const uint64_t> words() const { return words_; }

    bool access(uint64_t i) const {
        if (i < 1 || i > size_) throw range_error("bit position out of range");
        return get0(i - 1);
    }

    bool get0(uint64_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }

    void set0(uint64_t i, bool v) {
        if (v)
            words_[i >> 6] |= uint64_t(1) << (i & 63);
        else
            words_[i >> 6] &= ~(uint64_t(1) << (i & 63));
    }

    void push_back(bool v) {
        if ((size_ & 63) == 0) words_.push_back(0);
        ++size_;
        set0(size_ - 1, v);
    }

    // Reads `width` <= 64 bits starting at 0-based bit `pos`.
    uint64_t get_bits(uint64_t pos, unsigned width) const {
        if (width == 0) return 0;
        uint64_t w = pos >> 6;
        unsigned off = pos & 63;
        uint64_t v = words_[w] >> off;
        if (off + width > 64) v |= words_[w + 1] << (64 - off);
        return width == 64 ? v : v & ((uint64_t(1) << width) - 1);
    }

    void set_bits(uint64_t pos, uint64_t value, unsigned width) {
        for (unsigned b = 0; b < width; ++b) set0(pos + b, (value >> b) & 1);
    }

    void append_bits(uint64_t value, unsigned width) {
        for (unsigned b = 0; b < width; ++b) push_back((value >> b) & 1);
    }

    uint64_t popcount() const {
        uint64_t c = 0;
        for (auto w : words_) c += std::popcount(w);
        return c;
    }

    std::string str() const {
        std::string s(size_, '0');
        for (uint64_t i = 0; i < size_; ++i)
            if (get0(i)) s[i] = '1';
        return s;
    }

    void write(WordWriter& out) const {
        out.put(size_);
        out.put_vector(words_);
    }

    static PlainBits read(WordReader& in) {
        PlainBits b;
        b.size_ = in.get();
        b.words_ = in.get_vector();
        if (b.words_.size() != detail::words_for(b.size_)) throw format_error("bit vector length mismatch");
        if ((b.size_ & 63) != 0 && !b.words_.empty() && (b.words_.back() >> (b.size_ & 63)) != 0)
            throw format_error("bits set beyond vector length");
        return b;
    }

    uint64_t serialized_bits() const { return 64 * (2 + words_.size()); }

    friend bool operator==(const PlainBits&, const PlainBits&) = default;

   private:
    uint64_t size_ = 0;
    std::vector<uint64_t> words_;
};

// Fixed-width unsigned integers packed into a bit stream.
class PackedInts {
   public:
    PackedInts() = default;
    PackedInts(uint64_t count, unsigned width) : width_(width), count_(count), bits_(count * width) {}

    unsigned width() const { return width_; }
    uint64_t size() const { return count_; }

    uint64_t get(uint64_t idx) const { return bits_.get_bits(idx * width_, width_); }
    void set(uint64_t idx, uint64_t v) { bits_.set_bits(idx * width_, v, width_); }

    void write(WordWriter& out) const {
        out.put(width_);
        out.put(count_);
        bits_.write(out);
    }

    static PackedInts read(WordReader& in) {
        PackedInts p;
        p.width_ = static_cast<unsigned>(in.get());
        p.count_ = in.get();
        if (p.width_ > 64) throw format_error("packed width exceeds 64");
        p.bits_ = PlainBits::read(in);
        if (p.bits_.size() != p.count_ * p.width_) throw format_error("packed array length mismatch");
        return p;
    }

    uint64_t serialized_bits() const { return 128 + bits_.serialized_bits(); }

    friend bool operator==(const PackedInts&, const PackedInts&) = default;

   private:
    unsigned width_ = 0;
    uint64_t count_ = 0;
    PlainBits bits_;
};

// Two-level rank directory (4096-bit superblocks, 64-bit blocks) with one
// sampled position per 512 ones for select.
class RankSelectBitVector {
   public:
    static constexpr uint64_t kSuperblockBits = 4096;
    static constexpr uint64_t kWordsPerSuperblock = kSuperblockBits / 64;
    static constexpr uint64_t kSelectSample = 512;

    RankSelectBitVector() { build_directories(); }
    explicit RankSelectBitVector(PlainBits bits) : bits_(std::move(bits)) { build_directories(); }

    uint64_t size() const { return bits_.size(); }
    uint64_t ones() const { return ones_; }
    uint64_t zeros() const { return bits_.size() - ones_; }
    const PlainBits& bits() const { return bits_; }

    bool access(uint64_t i) const { return bits_.access(i); }

    uint64_t rank(uint64_t i) const {
        if (i > size()) throw range_error("rank argument out of range");
        return rank_prefix(i);
    }

    uint64_t rank0(uint64_t i) const { return i - rank(i); }

    // Ones among the first i bits; no range check.
    uint64_t rank_prefix(uint64_t i) const {
        uint64_t w = i >> 6;
        uint64_t r = super_[w / kWordsPerSuperblock] + block_[w];
        if ((i & 63) != 0) r += std::popcount(bits_.words()[w] & ((uint64_t(1) << (i & 63)) - 1));
        return r;
    }

    std::optional<uint64_t> select(uint64_t j) const {
        if (j < 1 || j > ones_) return std::nullopt;
        return select_unchecked(j) + 1;
    }

    std::optional<uint64_t> select0(uint64_t j) const {
        if (j < 1 || j > zeros()) return std::nullopt;
        return select0_unchecked(j) + 1;
    }

    // 0-based index of the j-th one (1 <= j <= ones()).
    uint64_t select_unchecked(uint64_t j) const {
        uint64_t s = (j - 1) / kSelectSample;
        uint64_t lo = samples_[s] / kSuperblockBits;
        uint64_t hi = s + 1 < samples_.size() ? samples_[s + 1] / kSuperblockBits : super_.size() - 2;
        // last superblock with cumulative count < j
        while (lo < hi) {
            uint64_t mid = (lo + hi + 1) / 2;
            if (super_[mid] < j)
                lo = mid;
            else
                hi = mid - 1;
        }
        uint64_t need = j - super_[lo];
        uint64_t w = lo * kWordsPerSuperblock;
        uint64_t wend = std::min<uint64_t>(w + kWordsPerSuperblock, bits_.words().size());
        while (w + 1 < wend && block_[w + 1] < need) ++w;
        need -= block_[w];
        return w * 64 + detail::select_in_word(bits_.words()[w], static_cast<unsigned>(need - 1));
    }

    uint64_t select0_unchecked(uint64_t j) const {
        uint64_t lo = 0, hi = super_.size() - 2;
        auto zeros_before_super = [&](uint64_t sb) { return sb * kSuperblockBits - super_[sb]; };
        while (lo < hi) {
            uint64_t mid = (lo + hi + 1) / 2;
            if (zeros_before_super(mid) < j)
                lo = mid;
            else
                hi = mid - 1;
        }
        uint64_t need = j - zeros_before_super(lo);
        uint64_t w = lo * kWordsPerSuperblock;
        uint64_t wend = std::min<uint64_t>(w + kWordsPerSuperblock, bits_.words().size());
        auto zeros_before_block = [&](uint64_t word) { return (word - lo * kWordsPerSuperblock) * 64 - block_[word]; };
        while (w + 1 < wend && zeros_before_block(w + 1) < need) ++w;
        need -= zeros_before_block(w);
        return w * 64 + detail::select_in_word(~bits_.words()[w], static_cast<unsigned>(need - 1));
    }

    SpaceBits space_bits() const {
        SpaceBits s;
        s.leading = 64 * bits_.words().size();
        s.directory = 64 * (super_.size() + detail::words_for(16 * block_.size()) + samples_.size());
        s.header = 64 * 5;  // n and the four length prefixes
        return s;
    }

    void write(WordWriter& out) const {
        bits_.write(out);
        out.put_vector(super_);
        std::vector<uint64_t> packed(detail::words_for(16 * block_.size()), 0);
        for (size_t i = 0; i < block_.size(); ++i) packed[i / 4] |= uint64_t(block_[i]) << (16 * (i % 4));
        out.put_vector(packed);
        out.put_vector(samples_);
    }

    // Directories are stored verbatim and must agree with a rebuild from the
    // raw bits; anything else is a corrupted stream.
    static RankSelectBitVector read(WordReader& in) {
        RankSelectBitVector v(PlainBits::read(in));
        auto super = in.get_vector();
        auto packed = in.get_vector();
        auto samples = in.get_vector();
        std::vector<uint64_t> expect(detail::words_for(16 * v.block_.size()), 0);
        for (size_t i = 0; i < v.block_.size(); ++i) expect[i / 4] |= uint64_t(v.block_[i]) << (16 * (i % 4));
        if (super != v.super_ || packed != expect || samples != v.samples_)
            throw format_error("rank/select directory does not match bit payload");
        return v;
    }

    friend bool operator==(const RankSelectBitVector& a, const RankSelectBitVector& b) { return a.bits_ == b.bits_; }

   private:
    void build_directories() {
        const auto words = bits_.words();
        uint64_t nsuper = words.size() / kWordsPerSuperblock + 1;
        super_.assign(nsuper + 1, 0);
        block_.assign(words.size() + 1, 0);
        samples_.clear();
        uint64_t total = 0;
        for (uint64_t w = 0; w < words.size(); ++w) {
            if (w % kWordsPerSuperblock == 0) super_[w / kWordsPerSuperblock] = total;
            block_[w] = static_cast<uint16_t>(total - super_[w / kWordsPerSuperblock]);
            uint64_t x = words[w];
            uint64_t c = std::popcount(x);
            // sample every kSelectSample-th one
            uint64_t next = samples_.size() * kSelectSample + 1;
            while (next <= total + c) {
                samples_.push_back(w * 64 + detail::select_in_word(x, static_cast<unsigned>(next - total - 1)));
                next += kSelectSample;
            }
            total += c;
        }
        uint64_t w = words.size();
        if (w % kWordsPerSuperblock == 0) super_[w / kWordsPerSuperblock] = total;
        block_[w] = static_cast<uint16_t>(total - super_[w / kWordsPerSuperblock]);
        for (uint64_t s = w / kWordsPerSuperblock + 1; s < super_.size(); ++s) super_[s] = total;
        ones_ = total;
    }

    PlainBits bits_;
    uint64_t ones_ = 0;
    std::vector<uint64_t> super_;
    std::vector<uint16_t> block_;
    std::vector<uint64_t> samples_;
};

// Elias-Fano layout of a sorted position set: fixed-width low parts and
// unary-coded high parts. select is answered by select on the high stream;
// rank by select0 on the high stream plus a scan of one bucket.
class SparseSelectVector {
   public:
    // Fixed overhead beyond m*ceil(lg(n/m)) + 2m in the encoded stream: the
    // scalar fields, two length prefixes and word rounding of both streams.
    static constexpr uint64_t kOverheadBits = 1024;

    SparseSelectVector() : high_(PlainBits(1)) {}

    // one_positions: strictly increasing, each in [1, n].
    static SparseSelectVector build(std::span<const uint64_t> one_positions, uint64_t n) {
        for (size_t i = 0; i < one_positions.size(); ++i) {
            if (one_positions[i] < 1 || one_positions[i] > n) throw validation_error("one position outside [1, n]");
            if (i > 0 && one_positions[i] <= one_positions[i - 1])
                throw validation_error("one positions must be strictly increasing");
        }
        return build_zero_based(n, one_positions.size(), [&](uint64_t r) { return one_positions[r] - 1; });
    }

    // get(r) yields the 0-based position of the (r+1)-th one; caller guarantees order.
    template <typename Get>
    static SparseSelectVector build_zero_based(uint64_t n, uint64_t m, Get&& get) {
        SparseSelectVector v;
        v.n_ = n;
        v.m_ = m;
        v.low_width_ = low_width_for(n, m);
        v.low_ = PackedInts(m, v.low_width_);
        PlainBits high(m + (n >> v.low_width_) + 1);
        uint64_t mask = v.low_width_ == 0 ? 0 : (v.low_width_ == 64 ? ~uint64_t(0) : (uint64_t(1) << v.low_width_) - 1);
        for (uint64_t r = 0; r < m; ++r) {
            uint64_t x = get(r);
            v.low_.set(r, x & mask);
            high.set0((x >> v.low_width_) + r, true);
        }
        v.high_ = RankSelectBitVector(std::move(high));
        return v;
    }

    static unsigned low_width_for(uint64_t n, uint64_t m) {
        if (m == 0 || n <= m) return 0;
        return detail::ceil_log2((n + m - 1) / m);
    }

    uint64_t size() const { return n_; }
    uint64_t ones() const { return m_; }
    unsigned low_width() const { return low_width_; }

    std::optional<uint64_t> select(uint64_t j) const {
        if (j < 1 || j > m_) return std::nullopt;
        return value0(j - 1) + 1;
    }

    uint64_t rank(uint64_t i) const {
        if (i > n_) throw range_error("rank argument out of range");
        return rank_prefix(i);
    }

    // Ones at 0-based positions < i.
    uint64_t rank_prefix(uint64_t i) const {
        if (m_ == 0 || i == 0) return 0;
        if (i >= n_) return m_;
        uint64_t h = i >> low_width_;
        uint64_t low = low_width_ == 0 ? 0 : i & ((uint64_t(1) << low_width_) - 1);
        // elements with high part < h end just before the h-th zero
        uint64_t idx = 0, bit = 0;
        if (h > 0) {
            bit = high_.select0_unchecked(h) + 1;
            idx = bit - h;
        }
        while (idx < m_ && bit < high_.size() && high_.bits().get0(bit)) {
            if (low_.get(idx) >= low) break;
            ++idx;
            ++bit;
        }
        return idx;
    }

    bool access(uint64_t i) const {
        if (i < 1 || i > n_) throw range_error("bit position out of range");
        return rank_prefix(i) != rank_prefix(i - 1);
    }

    // 0-based position of the (r+1)-th one.
    uint64_t value0(uint64_t r) const {
        uint64_t hbit = high_.select_unchecked(r + 1);
        return ((hbit - r) << low_width_) | low_.get(r);
    }

    SpaceBits space_bits() const {
        SpaceBits s;
        auto hs = high_.space_bits();
        s.leading = 64 * detail::words_for(m_ * low_width_) + hs.leading;
        s.directory = hs.directory;
        s.header = 64 * 3 + (low_.serialized_bits() - 64 * detail::words_for(m_ * low_width_)) + hs.header;
        return s;
    }

    void write(WordWriter& out) const {
        out.put(n_);
        out.put(m_);
        out.put(low_width_);
        low_.write(out);
        high_.write(out);
    }

    static SparseSelectVector read(WordReader& in) {
        SparseSelectVector v;
        v.n_ = in.get();
        v.m_ = in.get();
        v.low_width_ = static_cast<unsigned>(in.get());
        v.low_ = PackedInts::read(in);
        v.high_ = RankSelectBitVector::read(in);
        if (v.low_width_ != low_width_for(v.n_, v.m_) || v.low_.size() != v.m_ || v.low_.width() != v.low_width_ ||
            v.high_.size() != v.m_ + (v.n_ >> v.low_width_) + 1 || v.high_.ones() != v.m_)
            throw format_error("inconsistent Elias-Fano header");
        return v;
    }

   private:
    uint64_t n_ = 0;
    uint64_t m_ = 0;
    unsigned low_width_ = 0;
    PackedInts low_;
    RankSelectBitVector high_;
};

}  // namespace rmaj
