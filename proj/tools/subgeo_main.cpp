// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "subgeo/errors.hpp"
#include "subgeo/experiment.hpp"
#include "subgeo/version.hpp"

namespace {

// exit 0 ok, 1 io, 2 config, 3 numerical
int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const subgeo::ConfigError& e) {
        std::cerr << "config error";
        if (!e.key().empty()) std::cerr << " [" << e.key() << "]";
        std::cerr << ": " << e.what() << "\n";
        return 2;
    } catch (const subgeo::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const subgeo::DimError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const subgeo::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"subgeo: gradient-subspace geometry and low-rank-adapter forgetting experiments"};
    app.set_version_flag("--version", subgeo::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int jobs = 1;
    bool frozen_clock = false;
    bool embed_matrices = false;

    auto* run = app.add_subcommand("run", "run an experiment described by a JSON config");
    run->add_option("config", config_path, "experiment config (JSON)")->required();
    run->add_option("--out", out_dir, "output directory (overrides config output_dir)");
    run->add_option("--jobs", jobs, "worker count for independent runs")->check(CLI::PositiveNumber);
    run->add_flag("--frozen-clock", frozen_clock, "write 0 as wall clock for byte-stable reports");
    run->add_flag("--embed-matrices", embed_matrices, "embed task matrices and dump gradient samples");

    std::string csv_path;
    auto* fit = app.add_subcommand("fit", "fit the forgetting law to a records.csv");
    fit->add_option("records", csv_path, "records.csv produced by 'run'")->required();

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "validate a config file and exit");
    validate->add_option("config", validate_path, "experiment config (JSON)")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        return guarded([&] {
            const auto config = subgeo::cli::load_config(config_path);
            subgeo::cli::RunOptions opts;
            opts.jobs = jobs;
            opts.frozen_clock = frozen_clock;
            opts.output_dir_override = out_dir;
            opts.embed_matrices_override = embed_matrices;
            const auto output = subgeo::cli::run_experiment(config, opts);
            for (const auto& file : output.files_written) std::cout << "wrote " << file << "\n";
            return 0;
        });
    }
    if (fit->parsed()) {
        return guarded([&] {
            std::cout << subgeo::cli::fit_from_csv(csv_path).dump(2) << "\n";
            return 0;
        });
    }
    if (validate->parsed()) {
        return guarded([&] {
            subgeo::cli::load_config(validate_path);
            std::cout << "config ok\n";
            return 0;
        });
    }
    return 0;
}
