#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

// Synthetic inputs and query ranges for tests, benchmarks and the CLI.

namespace rmaj {

enum class Distribution { uniform, zipf };

inline Distribution parse_distribution(const std::string& s) {
    if (s == "uniform") return Distribution::uniform;
    if (s == "zipf") return Distribution::zipf;
    throw validation_error("unknown distribution '" + s + "'");
}

// n values in [0, sigma); zipf draws value r with weight 1/(r+1)^skew.
inline std::vector<uint32_t> generate(uint64_t n, uint64_t sigma, Distribution dist, uint64_t seed,
                                      double skew = 1.0) {
    if (sigma < 1 || sigma > (uint64_t(1) << 32)) throw validation_error("sigma must be in [1, 2^32]");
    std::mt19937_64 rng(seed);
    std::vector<uint32_t> a(n);
    if (dist == Distribution::uniform) {
        std::uniform_int_distribution<uint64_t> d(0, sigma - 1);
        for (auto& x : a) x = static_cast<uint32_t>(d(rng));
        return a;
    }
    std::vector<double> w(sigma);
    for (uint64_t r = 0; r < sigma; ++r) w[r] = 1.0 / std::pow(double(r + 1), skew);
    std::discrete_distribution<uint32_t> d(w.begin(), w.end());
    for (auto& x : a) x = d(rng);
    return a;
}

// A 1-based range [i, j] in [1, n] whose length is log-uniform.
template <typename Rng>
std::pair<uint64_t, uint64_t> log_uniform_range(Rng& rng, uint64_t n) {
    double top = std::log2(double(n) + 1);
    uint64_t len = static_cast<uint64_t>(std::exp2(std::uniform_real_distribution<double>(0, top)(rng)));
    len = std::clamp<uint64_t>(len, 1, n);
    uint64_t i = std::uniform_int_distribution<uint64_t>(1, n - len + 1)(rng);
    return {i, i + len - 1};
}

// A 1-based range with both endpoints uniform.
template <typename Rng>
std::pair<uint64_t, uint64_t> uniform_range(Rng& rng, uint64_t n) {
    uint64_t a = std::uniform_int_distribution<uint64_t>(1, n)(rng);
    uint64_t b = std::uniform_int_distribution<uint64_t>(1, n)(rng);
    return {std::min(a, b), std::max(a, b)};
}

}  // namespace rmaj
