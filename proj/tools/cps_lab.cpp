#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "cpslab/experiments.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cps-lab: consistent price system simulation toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    long long seed_override = -1;
    int threads = 0;
    bool no_plots = false;

    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    run->add_option("config", config_path, "path to JSON config")->required();
    run->add_option("--out", out_dir, "output directory (overrides config)");
    run->add_option("--seed", seed_override, "base seed override");
    run->add_option("--threads", threads, "worker thread cap (0 = hardware)");
    run->add_flag("--no-plots", no_plots, "skip plot generation");

    std::string val_config_path;
    auto* validate = app.add_subcommand("validate", "check a config file without running");
    validate->add_option("config", val_config_path, "path to JSON config")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(validate)) {
            const auto cfg = cpslab::load_config(val_config_path);
            const auto diags = cpslab::validate_config(cfg);
            if (diags.empty()) {
                std::cout << "OK: " << cpslab::to_string(cfg.experiment) << " config is valid\n";
                return 0;
            }
            for (const auto& d : diags) std::cerr << "error: " << d << '\n';
            return 1;
        }

        const std::string config_text = read_file(config_path);
        auto cfg = cpslab::parse_config(cpslab::json::parse(config_text));
        if (seed_override >= 0) cfg.base_seed = static_cast<std::uint64_t>(seed_override);
        if (!out_dir.empty()) {
            cfg.output_dir = out_dir;
        } else if (const char* env = std::getenv("CPS_LAB_OUT"); env && cfg.output_dir == "out") {
            cfg.output_dir = env;
        }
        if (no_plots) cfg.plots = false;
        cpslab::thread_cap() = threads > 0 ? static_cast<std::size_t>(threads) : 0;

        const auto result = cpslab::run_experiment(cfg);
        cpslab::write_outputs(result, cfg.output_dir, config_text, cfg.base_seed, cfg.plots);
        std::cout << (result.status == 0 ? "PASS" : "FAIL") << ": "
                  << cpslab::to_string(cfg.experiment) << " -> " << cfg.output_dir << '\n';
        return result.status;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
