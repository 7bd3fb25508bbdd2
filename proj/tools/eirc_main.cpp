#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "eirc/experiment.hpp"
#include "eirc/serialize.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out;
    int seeds = -1;
    int workers = -1;
    std::string scale;
    long long master_seed = -1;
};

eirc::ExperimentSpec load_spec(const CommonFlags& flags) {
    eirc::ExperimentSpec spec = eirc::parse_config(flags.config_path);
    if (!flags.out.empty()) spec.output_path = flags.out;
    if (flags.seeds > 0) spec.n_seeds = flags.seeds;
    if (flags.workers > 0) spec.workers = flags.workers;
    if (flags.master_seed >= 0) spec.master_seed = static_cast<std::uint64_t>(flags.master_seed);
    if (flags.scale == "desk") {
        spec.reservoir.n_neurons = 200;
        if (flags.seeds <= 0) spec.n_seeds = std::min(spec.n_seeds, 20);
    } else if (flags.scale == "full") {
        // config values stand as written
    } else if (!flags.scale.empty()) {
        throw std::invalid_argument("--scale must be desk or full");
    }
    spec.validate();
    return spec;
}

void print_summaries(const eirc::ExperimentResult& result) {
    std::printf("%-6s %-22s %9s %9s %9s %9s %10s %12s %7s\n", "cell", "mode", "beta", "theta",
                "rho_t", "sigma_in", "metric", "stderr", "n_ok");
    for (std::size_t i = 0; i < result.summaries.size(); ++i) {
        const auto& s = result.summaries[i];
        auto field = [](double v) {
            return std::isnan(v) ? std::string("-") : [&] {
                char b[32];
                std::snprintf(b, sizeof b, "%.4g", v);
                return std::string(b);
            }();
        };
        std::printf("%-6zu %-22s %9s %9s %9s %9s %10s %12s %4d%s\n", s.cell_index,
                    eirc::mode_name(s.mode).c_str(), field(s.beta).c_str(),
                    field(s.theta).c_str(), field(s.rho_t).c_str(), field(s.sigma_in).c_str(),
                    field(s.metric_mean).c_str(), field(s.metric_se).c_str(), s.n_ok,
                    i == result.best_baseline ? "  <- best baseline" : "");
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Excitatory-inhibitory reservoir computing experiment runner"};
    app.require_subcommand(1);

    CommonFlags flags;

    auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
    run->add_option("config", flags.config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    run->add_option("--out", flags.out, "output directory for CSV artifacts");
    run->add_option("--seeds", flags.seeds, "override the number of replicates");
    run->add_option("--workers", flags.workers, "worker thread count (default: hardware)");
    run->add_option("--scale", flags.scale, "desk (N=200, <=20 seeds) or full");
    run->add_option("--master-seed", flags.master_seed, "override the master seed");

    auto* dump = app.add_subcommand("dump-reservoir",
                                    "Build the configured reservoir and write a binary dump");
    dump->add_option("config", flags.config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    std::string dump_out = "reservoir.bin";
    dump->add_option("--out", dump_out, "dump file path");
    dump->add_option("--scale", flags.scale, "desk or full");
    dump->add_option("--master-seed", flags.master_seed, "override the master seed");

    auto* validate = app.add_subcommand("validate", "Parse a config and echo the resolved spec");
    validate->add_option("config", flags.config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const eirc::ExperimentSpec spec = load_spec(flags);
            const eirc::ExperimentResult result = eirc::run_experiment(spec);
            print_summaries(result);
            if (!spec.output_path.empty())
                std::printf("artifacts written to %s\n", spec.output_path.c_str());
        } else if (dump->parsed()) {
            const eirc::ExperimentSpec spec = load_spec(flags);
            eirc::NetworkConfig cfg = spec.reservoir;
            cfg.seed = spec.master_seed;
            const eirc::EIReservoir res = eirc::build_reservoir(cfg);
            eirc::save_reservoir(dump_out, res);
            std::printf("wrote %s (N=%d, global balance %.6g)\n", dump_out.c_str(), res.n(),
                        eirc::global_balance(res));
        } else if (validate->parsed()) {
            const eirc::ExperimentSpec spec = eirc::parse_config(flags.config_path);
            std::cout << eirc::spec_to_json(spec) << '\n';
            std::printf("config ok\n");
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
