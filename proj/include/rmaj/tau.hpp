#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>

#include "errors.hpp"

namespace rmaj {

using u128 = unsigned __int128;

// The majority threshold as an exact rational p/q in (0,1).
struct Tau {
    uint32_t p = 1;
    uint32_t q = 2;

    static Tau make(uint64_t p, uint64_t q) {
        if (p == 0 || q == 0 || p >= q || q > UINT32_MAX)
            throw validation_error("tau must be a rational p/q with 0 < p < q < 2^32");
        return Tau{static_cast<uint32_t>(p), static_cast<uint32_t>(q)};
    }

    static Tau parse(std::string_view text) {
        auto slash = text.find('/');
        if (slash == std::string_view::npos) throw validation_error("tau must be written as P/Q");
        uint64_t p = 0, q = 0;
        auto num = text.substr(0, slash);
        auto den = text.substr(slash + 1);
        auto r1 = std::from_chars(num.data(), num.data() + num.size(), p);
        auto r2 = std::from_chars(den.data(), den.data() + den.size(), q);
        if (r1.ec != std::errc{} || r1.ptr != num.data() + num.size() || r2.ec != std::errc{} ||
            r2.ptr != den.data() + den.size() || num.empty() || den.empty())
            throw validation_error("cannot parse tau '" + std::string(text) + "'");
        return make(p, q);
    }

    // count is a tau-majority of a range of length len.
    bool is_majority(uint64_t count, uint64_t len) const {
        return u128(count) * q >= u128(p) * len;
    }

    // Thresholds above 1/2 are answered by the 1/2 structure.
    bool above_half() const { return 2ull * p > q; }
    Tau for_build() const { return above_half() ? Tau{1, 2} : *this; }

    // floor(4/tau), the per-quadruple candidate bound.
    uint64_t candidate_bound() const { return 4ull * q / p; }

    // floor(1/tau), the maximum number of distinct majorities in a range.
    uint64_t max_answers() const { return q / p; }

    double value() const { return double(p) / double(q); }

    std::string str() const { return std::to_string(p) + "/" + std::to_string(q); }

    friend bool operator==(const Tau&, const Tau&) = default;
};

// Non-negative exact fraction, kept in lowest terms.
struct Fraction {
    uint64_t num = 0;
    uint64_t den = 1;

    Fraction() = default;
    Fraction(uint64_t n, uint64_t d) : num(n), den(d) {
        if (d == 0) throw validation_error("zero denominator");
        uint64_t g = std::gcd(n, d);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    friend bool operator==(const Fraction& a, const Fraction& b) {
        return a.num == b.num && a.den == b.den;
    }
    friend std::strong_ordering operator<=>(const Fraction& a, const Fraction& b) {
        return u128(a.num) * b.den <=> u128(b.num) * a.den;
    }

    std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
};

}  // namespace rmaj
