#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace rmaj::cli;

int main(int argc, char** argv) {
    CLI::App app{"Range tau-majority encoding"};
    app.require_subcommand(1);

    BuildArgs ba;
    auto* build = app.add_subcommand("build", "Build an index from an array file");
    build->add_option("--input", ba.input, "Array file (text or binary)")->required();
    build->add_option("--tau", ba.tau, "Threshold as P/Q")->required();
    build->add_option("--output", ba.output, "Index file to write")->required();
    build->add_option("--backend", ba.backend, "auto, percandidate or grouped");
    build->add_flag("--strict-lookup", ba.strict_lookup, "Precompute micro answer tables");
    build->add_option("--queries", ba.queries, "Timed queries for the report");
    build->add_option("--seed", ba.seed);

    QueryArgs qa;
    auto* query = app.add_subcommand("query", "Answer one range query");
    query->add_option("--index", qa.index)->required();
    query->add_option("--range", qa.range, "I:J, 1-based and inclusive")->required();
    query->add_option("--mode", qa.mode, "positions, decision or count");

    VerifyArgs va;
    uint64_t flip = 0;
    auto* verify = app.add_subcommand("verify", "Check random queries against the oracle");
    verify->add_option("--input", va.input)->required();
    verify->add_option("--tau", va.tau)->required();
    verify->add_option("--queries", va.queries);
    verify->add_option("--seed", va.seed);
    verify->add_option("--backend", va.backend);
    auto* flip_opt = verify->add_option("--flip-bit", flip, "Corrupt one micro payload bit (testing)");

    BenchArgs be;
    auto* bench = app.add_subcommand("bench", "Measure space and latency on synthetic data");
    bench->add_option("--n", be.n);
    bench->add_option("--sigma", be.sigma);
    bench->add_option("--dist", be.dist, "uniform or zipf");
    bench->add_option("--tau-grid", be.tau_grid, "Comma separated P/Q list");
    bench->add_option("--queries", be.queries);
    bench->add_option("--json", be.json_path);
    bench->add_option("--seed", be.seed);
    bench->add_option("--backend", be.backend);
    bench->add_option("--threads", be.threads);

    AdversaryArgs aa;
    auto* adv = app.add_subcommand("adversary", "Run the adversarial reductions end to end");
    adv->add_option("--mode", aa.mode, "lowerbound or setintersect")->required();
    adv->add_option("--k", aa.k);
    adv->add_option("--m", aa.m);
    adv->add_option("--n", aa.sets, "Number of sets");
    adv->add_option("--x", aa.x, "Universe size");
    adv->add_option("--seed", aa.seed);
    adv->add_option("--export", aa.export_path, "Write the array in input format");
    adv->add_flag("--binary", aa.binary, "Export in the binary array format");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    auto& out = std::cout;
    auto& err = std::cerr;
    if (*build) return guarded([&] { return cmd_build(ba, out); }, err);
    if (*query) return guarded([&] { return cmd_query(qa, out); }, err);
    if (*verify) {
        if (*flip_opt) va.flip_bit = flip;
        return guarded([&] { return cmd_verify(va, out); }, err);
    }
    if (*bench) return guarded([&] { return cmd_bench(be, out); }, err);
    return guarded([&] { return cmd_adversary(aa, out); }, err);
}
