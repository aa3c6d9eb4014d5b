// Benchmark harness CLI: runs seeded estimator sweeps from a JSON config and
// writes one CSV row per trial.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "robustlearn/acceptance.hpp"
#include "robustlearn/bench.hpp"

int main(int argc, char** argv) {
    CLI::App app{"robust high-dimensional estimation benchmark"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run a sweep from a JSON config");
    std::string config_path, out_path;
    run->add_option("--config", config_path, "experiment config (JSON)")->required();
    run->add_option("--out", out_path, "output CSV path")->required();

    auto* list = app.add_subcommand("list-estimators", "print available estimator names");
    auto* selftest = app.add_subcommand("selftest", "run the acceptance suite");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            std::ifstream in(config_path);
            if (!in) {
                std::cerr << "cannot open config: " << config_path << "\n";
                return 2;
            }
            nlohmann::json j = nlohmann::json::parse(in);
            robustlearn::ExperimentConfig cfg = robustlearn::parse_experiment_config(j);
            std::ofstream out(out_path, std::ios::binary);
            if (!out) {
                std::cerr << "cannot open output: " << out_path << "\n";
                return 2;
            }
            robustlearn::run_sweep_csv(cfg, out);
            out.flush();
            if (!out) {
                std::cerr << "write failed: " << out_path << "\n";
                return 2;
            }
        } else if (*list) {
            for (const std::string& name : robustlearn::estimator_names())
                std::cout << name << "\n";
        } else if (*selftest) {
            auto results = robustlearn::acceptance::run_all(std::cout);
            bool ok = true;
            for (const auto& r : results) ok = ok && r.passed;
            return ok ? 0 : 1;
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    }
    return 0;
}
