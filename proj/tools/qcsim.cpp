#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "qcs/cli.hpp"
#include "qcs/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"qcsim: qualitative-communications network simulator"};
    app.require_subcommand(1);

    std::string target;
    std::string out_dir = "out";
    uint64_t seed = 0;
    bool trace = false;
    auto* run = app.add_subcommand("run", "run a preset or a scenario JSON file");
    run->add_option("target", target, "preset name or path to a scenario file")->required();
    auto* seed_opt = run->add_option("--seed", seed, "override the scenario seed");
    run->add_option("--out", out_dir, "output directory");
    run->add_flag("--trace", trace, "also write trace-<run>.ndjson per run");

    size_t levels = 0;
    size_t mtu = 0;
    auto* overhead = app.add_subcommand("overhead", "print the chunk-metadata overhead table");
    overhead->add_option("levels", levels, "max chunk count")->required();
    overhead->add_option("mtu", mtu, "mtu in bytes")->required();

    auto* presets = app.add_subcommand("presets", "list built-in presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            qcs::cli::ExecuteOptions opt;
            if (seed_opt->count() > 0)
                opt.seed = seed;
            opt.out_dir = out_dir;
            opt.trace = trace;
            auto res = qcs::cli::execute(qcs::cli::load_runs(target), opt);
            std::cout << res.summary;
            std::cout << "wrote " << out_dir << "/summary.txt and " << out_dir
                      << "/metrics.csv\n";
        } else if (overhead->parsed()) {
            std::cout << qcs::cli::overhead_table(levels, mtu);
        } else if (presets->parsed()) {
            for (const auto& name : qcs::cli::preset_names())
                std::cout << name << "\n";
        }
    } catch (const qcs::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
