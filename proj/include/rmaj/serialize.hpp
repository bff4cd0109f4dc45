#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace rmaj {

// Every structure serializes to a stream of 64-bit words. Vectors are
// length-prefixed. Bytes on disk are little-endian regardless of host.
class WordWriter {
   public:
    void put(uint64_t w) { words_.push_back(w); }

    void put_vector(std::span<const uint64_t> v) {
        put(v.size());
        words_.insert(words_.end(), v.begin(), v.end());
    }

    template <typename T>
    void put_ints(const std::vector<T>& v) {
        put(v.size());
        for (auto x : v) put(static_cast<uint64_t>(x));
    }

    const std::vector<uint64_t>& words() const { return words_; }
    std::vector<uint64_t> take() { return std::move(words_); }

   private:
    std::vector<uint64_t> words_;
};

class WordReader {
   public:
    explicit WordReader(std::span<const uint64_t> words) : words_(words) {}

    uint64_t get() {
        if (pos_ >= words_.size()) throw format_error("truncated word stream");
        return words_[pos_++];
    }

    std::vector<uint64_t> get_vector() {
        uint64_t len = get();
        if (len > words_.size() - pos_) throw format_error("truncated vector payload");
        std::vector<uint64_t> out(words_.begin() + pos_, words_.begin() + pos_ + len);
        pos_ += len;
        return out;
    }

    template <typename T>
    std::vector<T> get_ints() {
        uint64_t len = get();
        if (len > words_.size() - pos_) throw format_error("truncated vector payload");
        std::vector<T> out;
        out.reserve(len);
        for (uint64_t i = 0; i < len; ++i) out.push_back(static_cast<T>(words_[pos_++]));
        return out;
    }

    bool done() const { return pos_ == words_.size(); }

   private:
    std::span<const uint64_t> words_;
    size_t pos_ = 0;
};

namespace le {

inline void put_u16(std::string& out, uint16_t v) {
    for (int i = 0; i < 2; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline uint64_t get_uint(std::string_view in, size_t& pos, int bytes) {
    if (pos + bytes > in.size()) throw format_error("truncated container");
    uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
        v |= uint64_t(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    pos += bytes;
    return v;
}

}  // namespace le

}  // namespace rmaj
