#include "lanarray/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace lanarray::cli;
    CLI::App app{"lanarray: LAN diagnostics for Gaussian triangular arrays"};
    app.require_subcommand(1);

    Options opt;
    std::uint64_t seed = 0;
    int workers = 1;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "experiment config (JSON)")->required();
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--seed", seed, "base seed, overrides the config");
        sub->add_option("--workers", workers, "worker threads, overrides the config")->check(CLI::PositiveNumber);
        sub->add_option("--max-n", opt.max_n, "largest admissible sample size")->check(CLI::PositiveNumber);
    };
    CLI::App* simulate = app.add_subcommand("simulate", "sample Gaussian paths");
    CLI::App* estimate = app.add_subcommand("estimate", "maximum likelihood fits");
    CLI::App* audit = app.add_subcommand("audit", "run one audit");
    CLI::App* fisher = app.add_subcommand("fisher", "Fisher information tables");
    std::string audit_id;
    audit->add_option("id", audit_id, "cond11 | cond12 | envelopes | trace | clt | lan | dahlhaus | efficiency")->required();
    for (auto* s : {simulate, estimate, audit, fisher}) common(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }
    for (auto* s : {simulate, estimate, audit, fisher}) {
        if (s->count("--seed")) opt.seed = seed;
        if (s->count("--workers")) opt.workers = workers;
    }

    return guarded([&] {
        if (*simulate) return cmd_simulate(opt);
        if (*estimate) return cmd_estimate(opt);
        if (*audit) return cmd_audit(audit_id, opt);
        return cmd_fisher(opt);
    });
}
