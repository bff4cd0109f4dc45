#pragma once

#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "array_file.hpp"
#include "rmaj/bench.hpp"
#include "rmaj/data.hpp"
#include "rmaj/encoding.hpp"
#include "rmaj/oracle.hpp"
#include "rmaj/reductions.hpp"

namespace rmaj::cli {

using nlohmann::json;

enum Exit : int { kPass = 0, kMismatch = 1, kUsage = 2 };

inline std::optional<Backend> parse_backend(const std::string& s) {
    if (s == "auto") return std::nullopt;
    if (s == "percandidate") return Backend::per_candidate;
    if (s == "grouped") return Backend::grouped;
    throw validation_error("unknown backend '" + s + "'");
}

inline json tau_json(Tau t) { return {{"p", t.p}, {"q", t.q}}; }

inline json space_json(const SpaceReport& r) {
    return {{"candidate_vectors", r.candidate_bits},
            {"directories", r.directories},
            {"pointers", r.pointers},
            {"micro", r.micro},
            {"grouped_backend", r.backend},
            {"header", r.header},
            {"total", r.total}};
}

inline json stats_report(const MajorityEncoding& enc, double build_seconds, uint64_t queries, uint64_t seed,
                         unsigned threads) {
    json rep;
    rep["n"] = enc.size();
    rep["tau"] = tau_json(enc.tau());
    rep["build_tau"] = tau_json(enc.build_tau());
    rep["clamped"] = enc.tau().above_half();
    if (enc.tau().above_half())
        rep["note"] = "tau above 1/2: built as the 1/2 structure, queries use tau " + enc.tau().str();
    rep["backend"] = backend_name(enc.backend());
    rep["micro_branch"] = branch_name(enc.branch());
    rep["z"] = enc.z();
    rep["micro_level"] = enc.micro_level();
    rep["build_seconds"] = build_seconds;
    auto sr = enc.space_report();
    rep["bits"] = space_json(sr);
    rep["bits_per_element"] = sr.bits_per_element;
    rep["queries"] = queries;
    if (queries > 0) {
        auto m = measure_queries(enc, queries, seed, threads);
        rep["latency_ns"] = {{"p50", m.latency_percentile(0.5)},
                             {"p90", m.latency_percentile(0.9)},
                             {"p99", m.latency_percentile(0.99)},
                             {"max", m.latency_percentile(1.0)}};
        rep["mean_verifications"] = m.mean_verified();
        rep["micro_fraction"] = double(m.micro_queries) / double(queries);
        rep["bound_violations"] = m.bound_violations;
    }
    return rep;
}

// Mean candidates over all stored quadruples, counting pointers as candidates.
inline double mean_candidates(const MajorityEncoding& enc) {
    const auto& g = enc.geometry();
    uint64_t total = 0, quads = 0;
    for (unsigned k = enc.first_level(); k <= g.top_level(); ++k) {
        total += enc.stored_total(k) + enc.pointer_total(k);
        quads += g.quadruples(k);
    }
    return quads ? double(total) / double(quads) : 0.0;
}

template <typename F>
double timed(F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct BuildArgs {
    std::string input, output, tau, backend = "auto";
    bool strict_lookup = false;
    uint64_t queries = 1000, seed = 1;
};

inline int cmd_build(const BuildArgs& a, std::ostream& out) {
    auto values = read_array(a.input);
    Tau tau = Tau::parse(a.tau);
    BuildOptions opt;
    opt.backend = parse_backend(a.backend);
    opt.strict_lookup = a.strict_lookup;
    MajorityEncoding enc;
    double secs = timed([&] { enc = MajorityEncoding::build(values, tau, opt); });
    auto bytes = enc.serialize();
    write_file(a.output, bytes);
    auto rep = stats_report(enc, secs, a.queries, a.seed, 1);
    rep["command"] = "build";
    rep["index_bytes"] = bytes.size();
    out << rep.dump(2) << "\n";
    return kPass;
}

struct QueryArgs {
    std::string index, range, mode = "positions";
};

inline std::pair<uint64_t, uint64_t> parse_range(const std::string& s) {
    auto colon = s.find(':');
    if (colon == std::string::npos) throw validation_error("range must be written as I:J");
    try {
        size_t used = 0;
        std::string a = s.substr(0, colon), b = s.substr(colon + 1);
        if (a.empty() || b.empty() || a[0] == '-' || b[0] == '-') throw std::invalid_argument("sign");
        uint64_t i = std::stoull(a, &used);
        if (used != a.size()) throw std::invalid_argument("tail");
        uint64_t j = std::stoull(b, &used);
        if (used != b.size()) throw std::invalid_argument("tail");
        return {i, j};
    } catch (const std::logic_error&) {
        throw validation_error("cannot parse range '" + s + "'");
    }
}

inline int cmd_query(const QueryArgs& a, std::ostream& out) {
    auto enc = MajorityEncoding::deserialize(read_file(a.index));
    auto [i, j] = parse_range(a.range);
    if (a.mode == "positions") {
        auto pos = enc.query_positions(i, j);
        for (size_t t = 0; t < pos.size(); ++t) out << (t ? " " : "") << pos[t];
        out << "\n";
    } else if (a.mode == "decision") {
        out << (enc.query_decision(i, j) ? "yes" : "no") << "\n";
    } else if (a.mode == "count") {
        out << enc.query_count(i, j) << "\n";
    } else {
        throw validation_error("unknown mode '" + a.mode + "'");
    }
    return kPass;
}

struct VerifyArgs {
    std::string input, tau, backend = "auto";
    uint64_t queries = 1000, seed = 1;
    std::optional<uint64_t> flip_bit;  // bit of the micro payload to flip before reloading
};

// Flips one payload bit of the micro section inside a serialized container.
inline void flip_micro_bit(std::string& bytes, MicroBranch branch, uint64_t bit) {
    size_t pos = 32;
    uint64_t count = le::get_uint(bytes, pos, 4);
    for (uint64_t s = 0; s < count; ++s) {
        uint64_t id = le::get_uint(bytes, pos, 4), bits = le::get_uint(bytes, pos, 8), offset = le::get_uint(bytes, pos, 8);
        if (id != (7u << 8)) continue;
        uint64_t at = 64 * MicroStore::payload_word(branch) + bit;
        if (at >= bits) throw validation_error("flip bit lies outside the micro section");
        bytes[offset + at / 8] = static_cast<char>(bytes[offset + at / 8] ^ (1 << (at % 8)));
        return;
    }
    throw format_error("container has no micro section");
}

inline int cmd_verify(const VerifyArgs& a, std::ostream& out) {
    auto values = read_array(a.input);
    Tau tau = Tau::parse(a.tau);
    BuildOptions opt;
    opt.backend = parse_backend(a.backend);
    auto built = MajorityEncoding::build(values, tau, opt);
    auto bytes = built.serialize();
    if (a.flip_bit) {
        if (built.micro_level() < 0) throw validation_error("index has no micro section payload to corrupt");
        flip_micro_bit(bytes, built.branch(), *a.flip_bit);
    }
    auto enc = MajorityEncoding::deserialize(bytes);
    const uint64_t n = values.size();
    std::mt19937_64 rng(a.seed);
    for (uint64_t t = 0; t < a.queries; ++t) {
        auto [i, j] = t % 2 ? uniform_range(rng, n) : log_uniform_range(rng, n);
        auto want = oracle_majorities<uint32_t>(values, tau, i, j);
        auto got = enc.query_positions(i, j);
        std::set<uint32_t> want_set, got_set;
        for (const auto& e : want) want_set.insert(e.value);
        bool valid = true;
        for (auto p : got) {
            if (p < i || p > j) {
                valid = false;
                continue;
            }
            valid &= got_set.insert(values[p - 1]).second;
        }
        if (valid && want_set == got_set) continue;
        json ce;
        ce["status"] = "mismatch";
        ce["query"] = t;
        ce["i"] = i;
        ce["j"] = j;
        ce["expected"] = json::array();
        for (const auto& e : want) ce["expected"].push_back({{"value", e.value}, {"count", e.count}});
        ce["got"] = json::array();
        for (auto p : got) {
            json g = {{"position", p}};
            if (p >= 1 && p <= n) g["value"] = values[p - 1];
            ce["got"].push_back(g);
        }
        out << ce.dump(2) << "\n";
        return kMismatch;
    }
    out << json{{"status", "pass"}, {"n", n}, {"tau", tau_json(tau)}, {"queries", a.queries}, {"seed", a.seed}}.dump(2)
        << "\n";
    return kPass;
}

struct BenchArgs {
    uint64_t n = 1 << 16, sigma = 1 << 8, queries = 10000, seed = 1;
    std::string dist = "uniform", tau_grid = "1/4,1/16,1/64", json_path;
    std::string backend = "auto";
    unsigned threads = 1;
};

inline std::vector<Tau> parse_tau_grid(const std::string& s) {
    std::vector<Tau> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(Tau::parse(item));
    if (out.empty()) throw validation_error("empty tau grid");
    return out;
}

inline int cmd_bench(const BenchArgs& a, std::ostream& out) {
    if (a.n < 1 || a.sigma < 1) throw validation_error("n and sigma must be positive");
    auto grid = parse_tau_grid(a.tau_grid);
    auto dist = parse_distribution(a.dist);
    auto values = generate(a.n, a.sigma, dist, a.seed);
    BuildOptions opt;
    opt.backend = parse_backend(a.backend);
    json series = json::array();
    for (Tau tau : grid) {
        MajorityEncoding enc;
        double secs = timed([&] { enc = MajorityEncoding::build(values, tau, opt); });
        auto rep = stats_report(enc, secs, a.queries, a.seed, a.threads);
        rep["mean_candidates_per_quadruple"] = mean_candidates(enc);
        series.push_back(rep);
    }
    json doc = {{"command", "bench"}, {"n", a.n},         {"sigma", a.sigma},    {"dist", a.dist},
                {"seed", a.seed},     {"queries", a.queries}, {"threads", a.threads}, {"series", series}};
    if (!a.json_path.empty()) write_file(a.json_path, doc.dump(2) + "\n");
    out << doc.dump(2) << "\n";
    return kPass;
}

struct AdversaryArgs {
    std::string mode;
    unsigned k = 2;
    uint64_t m = 10, sets = 8, x = 8, seed = 1;
    std::string export_path;
    bool binary = false;
};

inline void export_array(const AdversaryArgs& a, const std::vector<uint32_t>& arr) {
    if (a.export_path.empty()) return;
    write_file(a.export_path, a.binary ? format_binary(arr) : format_text(arr));
}

inline int adversary_lowerbound(const AdversaryArgs& a, std::ostream& out) {
    if (a.k < 2) throw validation_error("--k must be at least 2");
    std::mt19937_64 rng(a.seed);
    auto bs = bad_array(a.k, random_permutations(a.k, a.m, rng));
    export_array(a, bs.symbols);
    auto enc = MajorityEncoding::build(bs.symbols, bs.tau());
    auto rec = recover(bs, [&](uint64_t x, uint64_t y) { return enc.query_decision(x, y); });
    const uint64_t bound = uint64_t(a.k) * a.k * a.m;
    json rep = {{"mode", "lowerbound"}, {"k", a.k},         {"m", a.m},
                {"n", bs.symbols.size()}, {"queries", rec.queries}, {"query_bound", bound}};
    bool pass = rec.ok && rec.perms == bs.perms && rec.queries <= bound;
    rep["status"] = pass ? "pass" : "mismatch";
    if (pass) {
        rep["recovered_bits"] = rec.recovered_bits;
    } else if (!rec.ok) {
        rep["failed"] = {{"symbol", rec.failed_symbol}, {"permutation", rec.failed_perm},
                         {"i", rec.failed_range.first}, {"j", rec.failed_range.second}};
    } else {
        for (uint64_t j = 0; j < a.m; ++j)
            if (rec.perms[j] != bs.perms[j]) {
                rep["failed"] = {{"permutation", j + 1}, {"expected", bs.perms[j]}, {"got", rec.perms[j]}};
                break;
            }
    }
    out << rep.dump(2) << "\n";
    return pass ? kPass : kMismatch;
}

inline int adversary_setintersect(const AdversaryArgs& a, std::ostream& out) {
    if (a.sets < 2 || a.x < 1 || a.x > (uint64_t(1) << 20)) throw validation_error("need --n >= 2 and --x in [1, 2^20]");
    std::mt19937_64 rng(a.seed);
    std::vector<std::vector<uint32_t>> sets(a.sets);
    std::bernoulli_distribution coin(0.5);
    std::uniform_int_distribution<uint32_t> pick(1, static_cast<uint32_t>(a.x));
    for (auto& s : sets) {
        for (uint32_t e = 1; e <= a.x; ++e)
            if (coin(rng)) s.push_back(e);
        if (s.empty()) s.push_back(pick(rng));
    }
    auto inst = si_build(sets, a.x);
    export_array(a, inst.array);
    auto enc = MajorityEncoding::build(inst.array, inst.tau());
    uint64_t pairs = 0, agreed = 0;
    json failed;
    for (uint64_t i = 1; i <= a.sets; ++i)
        for (uint64_t j = i + 1; j <= a.sets; ++j) {
            ++pairs;
            const auto& si = inst.sets[i - 1];
            const auto& sj = inst.sets[j - 1];
            std::vector<uint32_t> common;
            std::set_intersection(si.begin(), si.end(), sj.begin(), sj.end(), std::back_inserter(common));
            bool got = si_query(inst, i, j, [&](uint64_t x, uint64_t y) { return enc.query_decision(x, y); });
            if (got == !common.empty()) {
                ++agreed;
            } else if (failed.is_null()) {
                auto [x, y] = inst.query_map(i, j);
                failed = {{"sets", {i, j}}, {"i", x}, {"j", y}, {"expected", !common.empty()}, {"got", got}};
            }
        }
    bool pass = agreed == pairs;
    json rep = {{"mode", "setintersect"}, {"sets", a.sets}, {"x", a.x},           {"n", inst.array.size()},
                {"tau", tau_json(inst.tau())}, {"pairs", pairs}, {"agreed", agreed}, {"status", pass ? "pass" : "mismatch"}};
    if (!pass) rep["failed"] = failed;
    out << rep.dump(2) << "\n";
    return pass ? kPass : kMismatch;
}

inline int cmd_adversary(const AdversaryArgs& a, std::ostream& out) {
    if (a.mode == "lowerbound") return adversary_lowerbound(a, out);
    if (a.mode == "setintersect") return adversary_setintersect(a, out);
    throw validation_error("unknown adversary mode '" + a.mode + "'");
}

// Runs a command, mapping rejected input to the usage exit code.
template <typename F>
int guarded(F&& f, std::ostream& err) {
    try {
        return f();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
}

}  // namespace rmaj::cli
