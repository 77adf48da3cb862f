#include <iostream>

#include <CLI11.hpp>

#include "charflux/tools/experiment.hpp"

int main(int argc, char** argv) {
    using namespace charflux::tools;
    CLI::App app{"charflux: batch experiments for random-walk currents and Hammersley's process"};
    app.footer(csv_columns_help() + "\nExit codes: 0 ok, 1 config error, 2 runtime error.");
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> out;
    std::optional<std::int64_t> replicates;
    std::optional<std::int64_t> stop_after;
    bool raw = false;
    bool resume = false;
    app.add_option("config", config_path, "Experiment config (.toml or .json)")->required();
    app.add_option("--seed", seed, "Override the master seed");
    app.add_option("--workers", workers, "Worker threads");
    app.add_option("--out", out, "Output directory");
    app.add_option("--replicates", replicates, "Override the replicate count");
    app.add_flag("--raw", raw, "Write raw per-replicate CSV files");
    app.add_flag("--resume", resume, "Continue from checkpoints in the output directory");
    app.add_option("--stop-after", stop_after, "Stop once an ensemble holds this many replicates (checkpoint kept)")->group("");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        auto config = load_config(config_path);
        if (seed) config.seed = *seed;
        if (workers) config.workers = *workers;
        if (out) config.out = *out;
        if (replicates) config.replicates = *replicates;
        if (raw) config.raw = true;
        validate(config);
        const auto result = run(config, {resume, stop_after});
        if (result.interrupted) {
            std::cerr << "stopped early; rerun with --resume to continue\n";
            return 0;
        }
        for (const auto& v : result.summary.at("verdicts"))
            std::cout << (v.at("pass").get<bool>() ? "PASS " : "FAIL ") << v.at("criterion").get<std::string>() << ": " << v.at("detail").get<std::string>() << '\n';
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
