#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "difftherm/io/experiment.hpp"

namespace {
constexpr const char* kVersion = "difftherm 1.0.0";
}

int main(int argc, char** argv)
{
    CLI::App app{"thermodynamics of drift-diffusion processes: stationary solves, drift "
                 "decomposition, entropy-production ledgers, configurational-entropy tables "
                 "and cycle geometry"};
    app.require_subcommand(0, 1);

    bool show_schema = false;
    app.add_flag("--schema", show_schema, "print the configuration and CSV schema");

    std::string config_path;
    CLI::App* run = app.add_subcommand("run", "run every analysis in a config file");
    run->add_option("config", config_path, "JSON configuration file")->required();

    CLI::App* list = app.add_subcommand("list-models", "print the model catalog");
    CLI::App* version = app.add_subcommand("version", "print the version");

    CLI11_PARSE(app, argc, argv);

    try {
        if (show_schema) {
            std::cout << difftherm::config_schema();
            return 0;
        }
        if (version->parsed()) {
            std::cout << kVersion << "\n";
            return 0;
        }
        if (list->parsed()) {
            std::cout << difftherm::catalog_listing();
            return 0;
        }
        if (run->parsed()) {
            difftherm::ExperimentResult res = difftherm::run_experiment_file(config_path);
            std::cout << res.summary.dump(2) << "\n";
            std::cout << (res.passed ? "all checks passed" : "CHECKS FAILED") << "\n";
            return res.passed ? 0 : 1;
        }
        std::cout << app.help();
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
