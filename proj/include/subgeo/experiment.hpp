// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "subgeo/simulator.hpp"

namespace subgeo::cli {

enum class ExperimentKind { angle_sweep, rank_sweep, strategy_compare, law_fit, regime, layerwise };

std::string kind_name(ExperimentKind kind);
ExperimentKind kind_from_name(const std::string& name);

struct TaskGenConfig {
    int subspace_dim = 2;
    std::vector<double> singular_values; // defaults to all-ones of subspace_dim
    double target_scale = 0.3;
    double noise_sigma = 0.0;
    bool ambient_noise = false;
    // Rescale each target displacement to Frobenius norm
    // target_scale * sqrt(subspace_dim * m), keeping its direction: task
    // difficulty becomes equal across tasks and seeds instead of varying
    // with the Gaussian coefficient norm.
    bool unit_target_norm = false;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::angle_sweep;
    int d = 64;
    int m = 8;
    int rank = 4;
    std::vector<int> ranks;         // rank_sweep / regime
    std::vector<double> angle_grid; // consecutive angle per sweep point
    std::vector<double> consecutive_angles;
    std::vector<double> angle_range; // layerwise: [lo, hi]
    int tasks = 2;
    int blocks = 7; // layerwise
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> strategies; // strategy_compare
    double angle_threshold = 0.75;       // regime split
    TaskGenConfig task_gen;
    sim::TrainConfig train;
    std::string output_dir = "out";
    bool embed_matrices = false;
};

/// Parses and fully validates a config document; unknown keys are an error
/// naming the offending key.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

/// Config echo with all defaults materialized.
nlohmann::json config_to_json(const ExperimentConfig& config);

struct RunOptions {
    int jobs = 1;
    bool frozen_clock = false;
    std::string output_dir_override; // from --out
    bool embed_matrices_override = false;
};

struct ExperimentOutput {
    nlohmann::json report;
    std::vector<std::string> files_written;
};

/// Runs the experiment and writes report.json, records.csv and one SVG into
/// the output directory. Deterministic for a fixed config (timestamps
/// excluded under frozen_clock); independent runs may execute in parallel
/// when jobs > 1 without changing any output byte.
ExperimentOutput run_experiment(const ExperimentConfig& config, const RunOptions& opts);

/// Fits the forgetting law to the rows of a records.csv produced by
/// run_experiment; returns the fit report as JSON.
nlohmann::json fit_from_csv(const std::string& csv_path);

} // namespace subgeo::cli
