#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rmaj/errors.hpp"
#include "rmaj/serialize.hpp"

// Array input files: one unsigned decimal per line, or the binary form
// "RMAJARRV", u64 length, then u32 values, all little-endian.

namespace rmaj::cli {

inline constexpr char kArrayMagic[] = "RMAJARRV";

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("cannot write '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw validation_error("write to '" + path + "' failed");
}

inline std::vector<uint32_t> parse_array(const std::string& bytes) {
    std::vector<uint32_t> a;
    if (bytes.compare(0, 8, kArrayMagic) == 0) {
        size_t pos = 8;
        uint64_t n = le::get_uint(bytes, pos, 8);
        if (bytes.size() - pos != 4 * n) throw format_error("binary array length does not match its header");
        a.reserve(n);
        for (uint64_t t = 0; t < n; ++t) a.push_back(static_cast<uint32_t>(le::get_uint(bytes, pos, 4)));
        return a;
    }
    size_t start = 0;
    uint64_t line = 0;
    while (start < bytes.size()) {
        size_t end = bytes.find('\n', start);
        if (end == std::string::npos) end = bytes.size();
        ++line;
        std::string_view text(bytes.data() + start, end - start);
        if (!text.empty() && text.back() == '\r') text.remove_suffix(1);
        uint64_t v = 0;
        auto r = std::from_chars(text.data(), text.data() + text.size(), v);
        if (text.empty() || r.ec != std::errc{} || r.ptr != text.data() + text.size() || v > UINT32_MAX)
            throw format_error("line " + std::to_string(line) + ": expected an unsigned 32-bit integer");
        a.push_back(static_cast<uint32_t>(v));
        start = end + 1;
    }
    return a;
}

inline std::vector<uint32_t> read_array(const std::string& path) { return parse_array(read_file(path)); }

inline std::string format_text(const std::vector<uint32_t>& a) {
    std::string out;
    for (auto v : a) {
        out += std::to_string(v);
        out += '\n';
    }
    return out;
}

inline std::string format_binary(const std::vector<uint32_t>& a) {
    std::string out(kArrayMagic, 8);
    le::put_u64(out, a.size());
    for (auto v : a) le::put_u32(out, v);
    return out;
}

}  // namespace rmaj::cli
