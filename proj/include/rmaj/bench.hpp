#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <thread>
#include <utility>
#include <vector>

#include "data.hpp"
#include "encoding.hpp"

// Timed position queries over seeded log-uniform ranges.

namespace rmaj {

struct QueryMeasurement {
    std::vector<uint64_t> latency_ns;  // per query, in generation order
    std::vector<uint64_t> verified;
    std::vector<uint64_t> pointers;
    uint64_t micro_queries = 0;
    uint64_t answers = 0;
    // Queries whose verification count exceeded floor(4/tau) plus the
    // pointers they followed.
    uint64_t bound_violations = 0;

    double mean_verified() const {
        if (verified.empty()) return 0;
        double s = 0;
        for (auto v : verified) s += double(v);
        return s / double(verified.size());
    }

    // Nearest-rank percentile of the latencies, q in [0, 1].
    uint64_t latency_percentile(double q) const {
        if (latency_ns.empty()) return 0;
        std::vector<uint64_t> s(latency_ns);
        std::sort(s.begin(), s.end());
        size_t idx = static_cast<size_t>(std::ceil(q * double(s.size())));
        return s[std::clamp<size_t>(idx, 1, s.size()) - 1];
    }
};

inline std::vector<std::pair<uint64_t, uint64_t>> random_ranges(uint64_t n, uint64_t count, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::pair<uint64_t, uint64_t>> out(count);
    for (auto& r : out) r = log_uniform_range(rng, n);
    return out;
}

inline QueryMeasurement measure_queries(const MajorityEncoding& enc, uint64_t count, uint64_t seed,
                                        unsigned threads = 1) {
    auto ranges = random_ranges(enc.size(), count, seed);
    QueryMeasurement m;
    m.latency_ns.assign(count, 0);
    m.verified.assign(count, 0);
    m.pointers.assign(count, 0);
    std::vector<uint8_t> micro(count, 0);
    std::vector<uint64_t> answers(count, 0);
    auto work = [&](uint64_t from, uint64_t to) {
        for (uint64_t t = from; t < to; ++t) {
            QueryStats st;
            auto t0 = std::chrono::steady_clock::now();
            auto pos = enc.query_positions(ranges[t].first, ranges[t].second, &st);
            auto t1 = std::chrono::steady_clock::now();
            m.latency_ns[t] = static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
            m.verified[t] = st.verified;
            m.pointers[t] = st.pointers_followed;
            micro[t] = st.micro;
            answers[t] = pos.size();
        }
    };
    threads = std::max(1u, threads);
    if (threads == 1) {
        work(0, count);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, count * w / threads, count * (w + 1) / threads);
        for (auto& th : pool) th.join();
    }
    const uint64_t bound = enc.build_tau().candidate_bound();
    for (uint64_t t = 0; t < count; ++t) {
        m.micro_queries += micro[t];
        m.answers += answers[t];
        if (m.verified[t] > bound + m.pointers[t]) ++m.bound_violations;
    }
    return m;
}

}  // namespace rmaj
