// SPDX-License-Identifier: Apache-2.0
#include "subgeo/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include "subgeo/analysis.hpp"
#include "subgeo/csv.hpp"
#include "subgeo/errors.hpp"
#include "subgeo/subspace.hpp"
#include "subgeo/svg.hpp"
#include "subgeo/version.hpp"

namespace subgeo::cli {

namespace {

using linalg::Matrix;
using nlohmann::json;
using tasks::TaskSequence;

void reject_unknown_keys(const json& obj, const std::string& path,
                         std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        bool ok = false;
        for (const char* candidate : allowed) ok = ok || key == candidate;
        if (!ok) {
            const std::string full = path.empty() ? key : path + "." + key;
            throw ConfigError("unknown config key '" + full + "'", full);
        }
    }
}

template <typename T>
T get_field(const json& obj, const std::string& path, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        const std::string full = path.empty() ? key : path + "." + std::string(key);
        throw ConfigError("config key '" + full + "' has the wrong type", full);
    }
}

} // namespace

std::string kind_name(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::angle_sweep: return "angle_sweep";
    case ExperimentKind::rank_sweep: return "rank_sweep";
    case ExperimentKind::strategy_compare: return "strategy_compare";
    case ExperimentKind::law_fit: return "law_fit";
    case ExperimentKind::regime: return "regime";
    case ExperimentKind::layerwise: return "layerwise";
    }
    return "unknown";
}

ExperimentKind kind_from_name(const std::string& name) {
    if (name == "angle_sweep") return ExperimentKind::angle_sweep;
    if (name == "rank_sweep") return ExperimentKind::rank_sweep;
    if (name == "strategy_compare") return ExperimentKind::strategy_compare;
    if (name == "law_fit") return ExperimentKind::law_fit;
    if (name == "regime") return ExperimentKind::regime;
    if (name == "layerwise") return ExperimentKind::layerwise;
    throw ConfigError("experiment must be one of: angle_sweep, rank_sweep, strategy_compare, "
                      "law_fit, regime, layerwise",
                      "experiment");
}

ExperimentConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object", "");
    reject_unknown_keys(doc, "",
                        {"experiment", "dims", "angles", "tasks", "blocks", "seeds", "strategies",
                         "angle_threshold", "task_gen", "train", "output_dir", "embed_matrices"});

    ExperimentConfig cfg;
    if (!doc.contains("experiment")) throw ConfigError("missing required key 'experiment'", "experiment");
    cfg.kind = kind_from_name(get_field<std::string>(doc, "", "experiment", ""));

    if (doc.contains("dims")) {
        const json& dims = doc.at("dims");
        reject_unknown_keys(dims, "dims", {"d", "m", "rank", "ranks"});
        cfg.d = get_field<int>(dims, "dims", "d", cfg.d);
        cfg.m = get_field<int>(dims, "dims", "m", cfg.m);
        cfg.rank = get_field<int>(dims, "dims", "rank", cfg.rank);
        cfg.ranks = get_field<std::vector<int>>(dims, "dims", "ranks", {});
    }
    if (doc.contains("angles")) {
        const json& angles = doc.at("angles");
        reject_unknown_keys(angles, "angles", {"grid", "consecutive", "range"});
        cfg.angle_grid = get_field<std::vector<double>>(angles, "angles", "grid", {});
        cfg.consecutive_angles = get_field<std::vector<double>>(angles, "angles", "consecutive", {});
        cfg.angle_range = get_field<std::vector<double>>(angles, "angles", "range", {});
    }
    cfg.tasks = get_field<int>(doc, "", "tasks", cfg.tasks);
    cfg.blocks = get_field<int>(doc, "", "blocks", cfg.blocks);
    cfg.seeds = get_field<std::vector<std::uint64_t>>(doc, "", "seeds", {});
    cfg.strategies = get_field<std::vector<std::string>>(doc, "", "strategies", {});
    cfg.angle_threshold = get_field<double>(doc, "", "angle_threshold", cfg.angle_threshold);

    if (doc.contains("task_gen")) {
        const json& tg = doc.at("task_gen");
        reject_unknown_keys(tg, "task_gen",
                            {"subspace_dim", "singular_values", "target_scale", "noise_sigma",
                             "ambient_noise", "unit_target_norm"});
        cfg.task_gen.subspace_dim =
            get_field<int>(tg, "task_gen", "subspace_dim", cfg.task_gen.subspace_dim);
        cfg.task_gen.singular_values =
            get_field<std::vector<double>>(tg, "task_gen", "singular_values", {});
        cfg.task_gen.target_scale =
            get_field<double>(tg, "task_gen", "target_scale", cfg.task_gen.target_scale);
        cfg.task_gen.noise_sigma = get_field<double>(tg, "task_gen", "noise_sigma", cfg.task_gen.noise_sigma);
        cfg.task_gen.ambient_noise = get_field<bool>(tg, "task_gen", "ambient_noise", false);
        cfg.task_gen.unit_target_norm = get_field<bool>(tg, "task_gen", "unit_target_norm", false);
    }
    if (doc.contains("train")) {
        const json& tr = doc.at("train");
        reject_unknown_keys(tr, "train",
                            {"learning_rate", "steps_per_task", "strategy", "lambda",
                             "grad_sample_count", "energy_threshold", "ogd_exact_subspaces"});
        cfg.train.learning_rate = get_field<double>(tr, "train", "learning_rate", cfg.train.learning_rate);
        cfg.train.steps_per_task = get_field<int>(tr, "train", "steps_per_task", cfg.train.steps_per_task);
        cfg.train.strategy =
            sim::strategy_from_name(get_field<std::string>(tr, "train", "strategy", "vanilla"));
        cfg.train.lambda = get_field<double>(tr, "train", "lambda", cfg.train.lambda);
        cfg.train.grad_sample_count =
            get_field<int>(tr, "train", "grad_sample_count", cfg.train.grad_sample_count);
        cfg.train.energy_threshold =
            get_field<double>(tr, "train", "energy_threshold", cfg.train.energy_threshold);
        cfg.train.ogd_exact_subspaces = get_field<bool>(tr, "train", "ogd_exact_subspaces", false);
    }
    cfg.output_dir = get_field<std::string>(doc, "", "output_dir", cfg.output_dir);
    cfg.embed_matrices = get_field<bool>(doc, "", "embed_matrices", false);

    if (cfg.d < 1) throw ConfigError("dims.d must be positive", "dims.d");
    if (cfg.m < 1) throw ConfigError("dims.m must be positive", "dims.m");
    if (cfg.rank < 1) throw ConfigError("dims.rank must be positive", "dims.rank");
    if (cfg.tasks < 1) throw ConfigError("tasks must be positive", "tasks");
    if (cfg.seeds.empty()) throw ConfigError("seeds must be a non-empty list", "seeds");
    {
        auto sorted = cfg.seeds;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw ConfigError("seeds must be distinct", "seeds");
        }
    }
    if (cfg.task_gen.singular_values.empty()) {
        cfg.task_gen.singular_values.assign(static_cast<std::size_t>(cfg.task_gen.subspace_dim), 1.0);
    }
    if (static_cast<int>(cfg.task_gen.singular_values.size()) != cfg.task_gen.subspace_dim) {
        throw ConfigError("task_gen.singular_values length must equal task_gen.subspace_dim",
                          "task_gen.singular_values");
    }
    if (2 * cfg.task_gen.subspace_dim > cfg.d) {
        throw ConfigError("task_gen.subspace_dim must satisfy 2 * subspace_dim <= dims.d",
                          "task_gen.subspace_dim");
    }
    constexpr double half_pi = std::numbers::pi / 2.0;
    for (double a : cfg.angle_grid) {
        if (!(a > 0.0) || a > half_pi + 1e-12) {
            throw ConfigError("angles.grid entries must lie in (0, pi/2]", "angles.grid");
        }
    }

    const bool needs_grid = cfg.kind == ExperimentKind::angle_sweep ||
                            cfg.kind == ExperimentKind::law_fit || cfg.kind == ExperimentKind::regime;
    if (needs_grid && cfg.angle_grid.empty()) {
        throw ConfigError("this experiment requires a non-empty angles.grid", "angles.grid");
    }
    switch (cfg.kind) {
    case ExperimentKind::rank_sweep:
        if (cfg.ranks.empty()) throw ConfigError("rank_sweep requires dims.ranks", "dims.ranks");
        if (cfg.angle_grid.size() != 1) {
            throw ConfigError("rank_sweep requires exactly one angle in angles.grid", "angles.grid");
        }
        break;
    case ExperimentKind::regime:
        if (cfg.ranks.empty()) throw ConfigError("regime requires dims.ranks", "dims.ranks");
        break;
    case ExperimentKind::strategy_compare:
        if (cfg.strategies.size() < 2) {
            throw ConfigError("strategy_compare requires at least 2 strategies", "strategies");
        }
        for (const auto& s : cfg.strategies) sim::strategy_from_name(s);
        if (std::find(cfg.strategies.begin(), cfg.strategies.end(), "vanilla") == cfg.strategies.end()) {
            throw ConfigError("strategy_compare requires 'vanilla' in the strategy list", "strategies");
        }
        if (cfg.seeds.size() < 2) {
            throw ConfigError("strategy_compare requires at least 2 seeds", "seeds");
        }
        if (cfg.angle_grid.size() != 1 && cfg.consecutive_angles.empty()) {
            throw ConfigError("strategy_compare requires one angles.grid value or angles.consecutive",
                              "angles");
        }
        break;
    case ExperimentKind::layerwise:
        if (cfg.tasks < 3) throw ConfigError("layerwise requires tasks >= 3", "tasks");
        if (cfg.blocks < 1) throw ConfigError("layerwise requires blocks >= 1", "blocks");
        if (cfg.angle_range.size() != 2 || !(cfg.angle_range[0] > 0.0) ||
            cfg.angle_range[1] > half_pi + 1e-12 || cfg.angle_range[0] > cfg.angle_range[1]) {
            throw ConfigError("layerwise requires angles.range = [lo, hi] within (0, pi/2]",
                              "angles.range");
        }
        break;
    default:
        break;
    }
    if (!cfg.consecutive_angles.empty() &&
        static_cast<int>(cfg.consecutive_angles.size()) != cfg.tasks - 1) {
        throw ConfigError("angles.consecutive must have tasks - 1 entries", "angles.consecutive");
    }
    if (cfg.rank > cfg.d) throw ConfigError("dims.rank must not exceed dims.d", "dims.rank");
    for (int r : cfg.ranks) {
        if (r < 1 || r > cfg.d) throw ConfigError("dims.ranks entries must lie in [1, d]", "dims.ranks");
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what(), "");
    }
    return parse_config(doc);
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    json doc;
    doc["experiment"] = kind_name(cfg.kind);
    doc["dims"] = {{"d", cfg.d}, {"m", cfg.m}, {"rank", cfg.rank}, {"ranks", cfg.ranks}};
    doc["angles"] = {{"grid", cfg.angle_grid},
                     {"consecutive", cfg.consecutive_angles},
                     {"range", cfg.angle_range}};
    doc["tasks"] = cfg.tasks;
    doc["blocks"] = cfg.blocks;
    doc["seeds"] = cfg.seeds;
    doc["strategies"] = cfg.strategies;
    doc["angle_threshold"] = cfg.angle_threshold;
    doc["task_gen"] = {{"subspace_dim", cfg.task_gen.subspace_dim},
                       {"singular_values", cfg.task_gen.singular_values},
                       {"target_scale", cfg.task_gen.target_scale},
                       {"noise_sigma", cfg.task_gen.noise_sigma},
                       {"ambient_noise", cfg.task_gen.ambient_noise},
                       {"unit_target_norm", cfg.task_gen.unit_target_norm}};
    doc["train"] = {{"learning_rate", cfg.train.learning_rate},
                    {"steps_per_task", cfg.train.steps_per_task},
                    {"strategy", sim::strategy_name(cfg.train.strategy)},
                    {"lambda", cfg.train.lambda},
                    {"grad_sample_count", cfg.train.grad_sample_count},
                    {"energy_threshold", cfg.train.energy_threshold},
                    {"ogd_exact_subspaces", cfg.train.ogd_exact_subspaces}};
    doc["output_dir"] = cfg.output_dir;
    doc["embed_matrices"] = cfg.embed_matrices;
    return doc;
}

namespace {

struct RunSpec {
    int run_id = 0;
    std::uint64_t seed = 0;
    int rank = 0;
    sim::Strategy strategy = sim::Strategy::vanilla;
    double grid_angle = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> consecutive_angles;
    int blocks = 1;
};

struct RunResult {
    sim::RunRecord record;
    std::vector<TaskSequence> sequences; // retained only when embedding
};

std::vector<RunSpec> plan_runs(const ExperimentConfig& cfg) {
    std::vector<RunSpec> specs;
    int id = 0;
    auto consecutive_of = [&cfg](double theta) {
        return std::vector<double>(static_cast<std::size_t>(cfg.tasks - 1), theta);
    };
    switch (cfg.kind) {
    case ExperimentKind::angle_sweep:
    case ExperimentKind::law_fit:
        for (double theta : cfg.angle_grid) {
            for (std::uint64_t seed : cfg.seeds) {
                specs.push_back({id++, seed, cfg.rank, cfg.train.strategy, theta, consecutive_of(theta), 1});
            }
        }
        break;
    case ExperimentKind::rank_sweep:
        for (int rank : cfg.ranks) {
            for (std::uint64_t seed : cfg.seeds) {
                specs.push_back({id++, seed, rank, cfg.train.strategy, cfg.angle_grid[0],
                                 consecutive_of(cfg.angle_grid[0]), 1});
            }
        }
        break;
    case ExperimentKind::regime:
        for (int rank : cfg.ranks) {
            for (double theta : cfg.angle_grid) {
                for (std::uint64_t seed : cfg.seeds) {
                    specs.push_back({id++, seed, rank, cfg.train.strategy, theta, consecutive_of(theta), 1});
                }
            }
        }
        break;
    case ExperimentKind::strategy_compare:
        for (const std::string& strategy : cfg.strategies) {
            for (std::uint64_t seed : cfg.seeds) {
                RunSpec spec;
                spec.run_id = id++;
                spec.seed = seed;
                spec.rank = cfg.rank;
                spec.strategy = sim::strategy_from_name(strategy);
                if (!cfg.consecutive_angles.empty()) {
                    spec.consecutive_angles = cfg.consecutive_angles;
                } else {
                    spec.grid_angle = cfg.angle_grid[0];
                    spec.consecutive_angles = consecutive_of(cfg.angle_grid[0]);
                }
                specs.push_back(std::move(spec));
            }
        }
        break;
    case ExperimentKind::layerwise:
        for (std::uint64_t seed : cfg.seeds) {
            RunSpec spec;
            spec.run_id = id++;
            spec.seed = seed;
            spec.rank = cfg.rank;
            spec.strategy = cfg.train.strategy;
            spec.blocks = cfg.blocks;
            specs.push_back(std::move(spec));
        }
        break;
    }
    return specs;
}

void apply_task_options(const ExperimentConfig& cfg, TaskSequence& seq) {
    if (cfg.task_gen.ambient_noise) {
        for (auto& task : seq.tasks) task.ambient_noise = true;
    }
    if (!cfg.task_gen.unit_target_norm) return;
    const double wanted = cfg.task_gen.target_scale *
                          std::sqrt(static_cast<double>(cfg.task_gen.subspace_dim) * cfg.m);
    for (auto& task : seq.tasks) {
        const double norm = task.target.frobenius_norm();
        if (norm > 0.0) task.target *= wanted / norm;
    }
}

RunResult execute_run(const ExperimentConfig& cfg, const RunSpec& spec) {
    sim::TrainConfig train = cfg.train;
    train.adapter_rank = spec.rank;
    train.strategy = spec.strategy;
    train.seed = spec.seed;
    train.keep_grad_samples = cfg.embed_matrices;

    RunResult result;
    if (spec.blocks <= 1) {
        TaskSequence seq = tasks::make_sequence(cfg.d, cfg.m, cfg.task_gen.subspace_dim,
                                                spec.consecutive_angles, cfg.task_gen.singular_values,
                                                cfg.task_gen.target_scale, cfg.task_gen.noise_sigma,
                                                spec.seed);
        apply_task_options(cfg, seq);
        result.record = sim::run_sequence(seq, train);
        if (cfg.embed_matrices) result.sequences.push_back(std::move(seq));
        return result;
    }

    // Multi-block run: per-block consecutive angles drawn uniformly from the
    // configured range; block sequences are seeded with derive_seed(seed, b),
    // matching run_blocks' per-block simulator streams.
    std::vector<TaskSequence> seqs;
    seqs.reserve(static_cast<std::size_t>(spec.blocks));
    for (int b = 0; b < spec.blocks; ++b) {
        Rng angle_rng = Rng::stream("experiment.block_angles", spec.seed, static_cast<std::uint64_t>(b));
        std::vector<double> angles(static_cast<std::size_t>(cfg.tasks - 1));
        for (double& a : angles) a = angle_rng.uniform(cfg.angle_range[0], cfg.angle_range[1]);
        seqs.push_back(tasks::make_sequence(cfg.d, cfg.m, cfg.task_gen.subspace_dim, angles,
                                            cfg.task_gen.singular_values, cfg.task_gen.target_scale,
                                            cfg.task_gen.noise_sigma,
                                            derive_seed(spec.seed, static_cast<std::uint64_t>(b))));
        apply_task_options(cfg, seqs.back());
    }
    result.record = sim::run_blocks(seqs, train);
    if (cfg.embed_matrices) result.sequences = std::move(seqs);
    return result;
}

json num_or_null(double x) {
    if (std::isfinite(x)) return x;
    return nullptr;
}

json vector_json(const std::vector<double>& v) {
    json arr = json::array();
    for (double x : v) arr.push_back(num_or_null(x));
    return arr;
}

json matrix_rows_json(const Matrix& m) {
    json rows = json::array();
    for (int t = 0; t < m.rows(); ++t) {
        json row = json::array();
        for (int i = 0; i < m.cols(); ++i) row.push_back(num_or_null(m.at(t, i)));
        rows.push_back(std::move(row));
    }
    return rows;
}

json col_major_json(const Matrix& m) {
    json arr = json::array();
    for (int j = 0; j < m.cols(); ++j)
        for (int i = 0; i < m.rows(); ++i) arr.push_back(m.at(i, j));
    return arr;
}

json fit_json(const analysis::FitResult& fit) {
    return json{{"alpha", fit.alpha},         {"beta", fit.beta},
                {"r_squared", fit.r_squared}, {"pearson_r", fit.pearson_r},
                {"n_points", fit.n_points},   {"y_degenerate", fit.y_degenerate}};
}

json summary_json(const analysis::StatsSummary& s) {
    return json{{"mean", s.mean}, {"std", s.std}, {"cv", s.cv}, {"cv_valid", s.cv_valid}, {"n", s.n}};
}

json record_json(const sim::RunRecord& rec) {
    json out;
    out["task_count"] = rec.task_count;
    out["forgetting_immediate"] = matrix_rows_json(rec.forgetting_immediate);
    out["forgetting_cumulative"] = matrix_rows_json(rec.forgetting_cumulative);
    out["consecutive_theta_min_measured"] = vector_json(rec.consecutive_theta_min);
    out["update_norms"] = vector_json(rec.update_norms);
    out["effective_ranks"] = vector_json(rec.effective_ranks);
    out["final_losses"] = vector_json(rec.final_losses);
    out["lr_halvings"] = rec.lr_halvings;
    out["mean_immediate_forgetting"] = num_or_null(sim::mean_immediate_forgetting(rec));
    if (rec.task_count > 1 && !rec.theta_min_prescribed.empty()) {
        json prescribed = json::array();
        for (int t = 0; t + 1 < rec.task_count; ++t) {
            prescribed.push_back(num_or_null(rec.theta_min_prescribed.at(t + 1, t)));
        }
        out["consecutive_theta_min_prescribed"] = std::move(prescribed);
    }
    return out;
}

json tasks_json(const TaskSequence& seq) {
    json arr = json::array();
    for (const auto& task : seq.tasks) {
        arr.push_back(json{{"ambient_dim", task.subspace.ambient_dim()},
                           {"basis_col_major", col_major_json(task.subspace.basis())},
                           {"singular_values", task.singular_values},
                           {"target_col_major", col_major_json(task.target)},
                           {"noise_sigma", task.noise_sigma}});
    }
    return arr;
}

// Scalar (x, y) summary of one run: mean interference over consecutive
// pairs, mean immediate forgetting.
std::pair<double, double> run_point(const sim::RunRecord& rec) {
    double x = 0.0;
    int n = 0;
    for (double theta : rec.consecutive_theta_min) {
        if (std::isfinite(theta)) {
            x += subspace::interference(theta);
            ++n;
        }
    }
    return {n > 0 ? x / n : std::numeric_limits<double>::quiet_NaN(),
            sim::mean_immediate_forgetting(rec)};
}

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return values[values.size() / 2];
}

void append_csv_records(const ExperimentConfig& cfg, const RunSpec& spec, const sim::RunRecord& rec,
                        int& csv_run_id, std::vector<CsvRecord>& rows) {
    const auto emit_record = [&](const sim::RunRecord& r, std::uint64_t seed) {
        const int run_id = csv_run_id++;
        for (int t = 0; t < r.task_count; ++t) {
            for (int i = 0; i < t; ++i) {
                CsvRecord row;
                row.run_id = run_id;
                row.seed = seed;
                row.rank = spec.rank;
                row.task_i = i;
                row.task_t = t;
                row.theta_min_measured = r.theta_min_measured.at(t, i);
                row.theta_min_prescribed = r.theta_min_prescribed.at(t, i);
                row.interference = std::isfinite(row.theta_min_measured)
                                       ? subspace::interference(row.theta_min_measured)
                                       : std::numeric_limits<double>::quiet_NaN();
                row.forgetting_immediate = r.forgetting_immediate.at(t, i);
                row.forgetting_cumulative = r.forgetting_cumulative.at(t, i);
                row.update_norm = r.update_norms[static_cast<std::size_t>(t)];
                row.effective_rank = r.effective_ranks[static_cast<std::size_t>(t)];
                row.strategy = sim::strategy_name(spec.strategy);
                rows.push_back(std::move(row));
            }
        }
    };
    if (cfg.kind == ExperimentKind::layerwise) {
        for (std::size_t b = 0; b < rec.per_block.size(); ++b) {
            emit_record(rec.per_block[b], derive_seed(spec.seed, static_cast<std::uint64_t>(b)));
        }
    } else {
        emit_record(rec, spec.seed);
    }
}

struct ScatterPlot {
    std::string filename;
    std::vector<std::pair<double, double>> points;
    std::optional<FittedLine> fit;
    ScatterLabels labels;
};

json analyze(const ExperimentConfig& cfg, const std::vector<RunResult>& results, ScatterPlot& plot) {
    json out;
    const int seed_count = static_cast<int>(cfg.seeds.size());

    switch (cfg.kind) {
    case ExperimentKind::angle_sweep:
    case ExperimentKind::law_fit: {
        std::vector<std::pair<double, double>> pts_runs, pts_means;
        const int grid_count = static_cast<int>(cfg.angle_grid.size());
        for (int g = 0; g < grid_count; ++g) {
            double mx = 0.0, my = 0.0;
            for (int s = 0; s < seed_count; ++s) {
                const auto [x, y] =
                    run_point(results[static_cast<std::size_t>(g * seed_count + s)].record);
                pts_runs.emplace_back(x, y);
                mx += x / seed_count;
                my += y / seed_count;
            }
            pts_means.emplace_back(mx, my);
        }
        if (pts_runs.size() >= 3) {
            try {
                const auto fit_runs = analysis::fit_forgetting_law(pts_runs);
                out["pearson_runs"] = fit_runs.pearson_r;
                out["fit_runs"] = fit_json(fit_runs);
            } catch (const DimError& e) {
                out["fit_runs_note"] = e.what();
            }
        }
        json means = json::array();
        for (const auto& [x, y] : pts_means) means.push_back(json::array({x, y}));
        out["points_means"] = std::move(means);
        if (pts_means.size() >= 3) {
            try {
                const auto fit_means = analysis::fit_forgetting_law(pts_means);
                out["pearson_means"] = fit_means.pearson_r;
                out["fit_means"] = fit_json(fit_means);
                plot.fit = FittedLine{fit_means.alpha, fit_means.beta};
            } catch (const DimError& e) {
                out["fit_means_note"] = e.what();
            }
        }
        plot.filename = "interference_vs_forgetting.svg";
        plot.points = pts_means;
        plot.labels = {"Forgetting vs interference (per-angle means)",
                       "interference 1 - cos^2(theta_min)", "immediate forgetting"};
        break;
    }
    case ExperimentKind::rank_sweep: {
        json per_rank = json::array();
        std::vector<double> rank_means;
        for (std::size_t g = 0; g < cfg.ranks.size(); ++g) {
            std::vector<double> ys;
            for (int s = 0; s < seed_count; ++s) {
                const auto& rec =
                    results[g * static_cast<std::size_t>(seed_count) + static_cast<std::size_t>(s)].record;
                ys.push_back(sim::mean_immediate_forgetting(rec));
                plot.points.emplace_back(static_cast<double>(cfg.ranks[g]), ys.back());
            }
            const auto s = analysis::summarize(ys);
            rank_means.push_back(s.mean);
            per_rank.push_back(json{{"rank", cfg.ranks[g]}, {"summary", summary_json(s)}});
        }
        out["per_rank"] = std::move(per_rank);
        out["across_ranks"] = summary_json(analysis::summarize(rank_means));
        plot.filename = "rank_vs_forgetting.svg";
        plot.labels = {"Forgetting vs adapter rank", "adapter rank", "immediate forgetting"};
        break;
    }
    case ExperimentKind::regime: {
        std::vector<analysis::RegimeRecord> records;
        json rows = json::array();
        const int grid_count = static_cast<int>(cfg.angle_grid.size());
        std::size_t idx = 0;
        for (int rank : cfg.ranks) {
            for (int g = 0; g < grid_count; ++g) {
                std::vector<double> ys, thetas;
                for (int s = 0; s < seed_count; ++s, ++idx) {
                    const auto& rec = results[idx].record;
                    ys.push_back(sim::mean_immediate_forgetting(rec));
                    const double theta = rec.consecutive_theta_min.empty()
                                             ? cfg.angle_grid[static_cast<std::size_t>(g)]
                                             : rec.consecutive_theta_min[0];
                    thetas.push_back(std::isfinite(theta)
                                         ? theta
                                         : cfg.angle_grid[static_cast<std::size_t>(g)]);
                }
                // The regime split classifies by the designed grid angle; the
                // measured median is reported alongside.
                analysis::RegimeRecord record{static_cast<double>(rank),
                                              cfg.angle_grid[static_cast<std::size_t>(g)], median_of(ys)};
                records.push_back(record);
                rows.push_back(json{{"rank", rank},
                                    {"theta_grid", cfg.angle_grid[static_cast<std::size_t>(g)]},
                                    {"theta_median_measured", median_of(thetas)},
                                    {"forgetting_median", record.forgetting}});
                plot.points.emplace_back(static_cast<double>(rank), record.forgetting);
            }
        }
        const auto res = analysis::regime_analysis(records, cfg.angle_threshold);
        auto corr_json = [](const analysis::RegimeCorrelation& c) {
            return json{{"r", c.r}, {"n", c.n}, {"valid", c.valid}, {"note", c.note}};
        };
        out["records"] = std::move(rows);
        out["angle_threshold"] = cfg.angle_threshold;
        out["low"] = corr_json(res.low);
        out["high"] = corr_json(res.high);
        out["pooled"] = corr_json(res.pooled);
        plot.filename = "regime_rank_forgetting.svg";
        plot.labels = {"Per-seed median forgetting by rank", "adapter rank",
                       "median immediate forgetting"};
        break;
    }
    case ExperimentKind::strategy_compare: {
        json per_strategy = json::array();
        std::vector<double> vanilla_ys;
        bool have_baseline = false;
        std::size_t baseline_index = 0;
        std::vector<std::pair<std::string, std::vector<double>>> groups;
        for (std::size_t g = 0; g < cfg.strategies.size(); ++g) {
            std::vector<double> ys;
            double mean_theta = 0.0;
            int theta_n = 0;
            for (int s = 0; s < seed_count; ++s) {
                const auto& rec =
                    results[g * static_cast<std::size_t>(seed_count) + static_cast<std::size_t>(s)].record;
                ys.push_back(sim::mean_immediate_forgetting(rec));
                for (double theta : rec.consecutive_theta_min) {
                    if (std::isfinite(theta)) {
                        mean_theta += theta;
                        ++theta_n;
                    }
                }
                plot.points.emplace_back(static_cast<double>(g), ys.back());
            }
            const auto s = analysis::summarize(ys);
            per_strategy.push_back(
                json{{"strategy", cfg.strategies[g]},
                     {"summary", summary_json(s)},
                     {"mean_theta_min", theta_n > 0 ? json(mean_theta / theta_n) : json()}});
            if (cfg.strategies[g] == "vanilla" && !have_baseline) {
                vanilla_ys = ys;
                have_baseline = true;
                baseline_index = g;
            }
            groups.emplace_back(cfg.strategies[g], std::move(ys));
        }
        // Pairwise table against the first vanilla group.
        json vs_vanilla = json::array();
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (g == baseline_index) continue;
            const auto& [name, ys] = groups[g];
            json row{{"strategy", name}};
            if (ys == vanilla_ys) {
                row["welch_t"] = 0.0;
                row["welch_p"] = 1.0;
                row["cohens_d"] = 0.0;
            } else {
                try {
                    const auto w = analysis::welch_t_test(ys, vanilla_ys);
                    row["welch_t"] = w.t;
                    row["welch_p"] = w.p;
                    row["welch_df"] = w.df;
                } catch (const std::exception& e) {
                    row["welch_note"] = e.what();
                }
                try {
                    row["cohens_d"] = analysis::cohens_d(ys, vanilla_ys);
                } catch (const std::exception& e) {
                    row["cohens_d_note"] = e.what();
                }
            }
            vs_vanilla.push_back(std::move(row));
        }
        out["per_strategy"] = std::move(per_strategy);
        out["vs_vanilla"] = std::move(vs_vanilla);
        plot.filename = "strategy_forgetting.svg";
        plot.labels = {"Forgetting by strategy (index into strategy list)", "strategy index",
                       "immediate forgetting"};
        break;
    }
    case ExperimentKind::layerwise: {
        std::vector<std::pair<std::vector<double>, std::vector<double>>> per_block(
            static_cast<std::size_t>(cfg.blocks));
        for (const auto& result : results) {
            const auto& rec = result.record;
            for (std::size_t b = 0; b < rec.per_block.size(); ++b) {
                const auto& block = rec.per_block[b];
                for (int t = 0; t < block.task_count; ++t) {
                    for (int i = 0; i < t; ++i) {
                        const double theta = block.theta_min_measured.at(t, i);
                        if (!std::isfinite(theta)) continue;
                        per_block[b].first.push_back(subspace::interference(theta));
                        per_block[b].second.push_back(block.forgetting_immediate.at(t, i));
                    }
                }
            }
        }
        const auto res = analysis::layerwise_correlation(per_block);
        json blocks = json::array();
        for (const auto& block : res.per_block) {
            blocks.push_back(
                json{{"block", block.block}, {"r", block.r}, {"valid", block.valid}, {"note", block.note}});
            if (block.valid) plot.points.emplace_back(static_cast<double>(block.block), block.r);
        }
        out["per_block"] = std::move(blocks);
        out["aggregate_r"] = res.aggregate_r;
        out["positive_count"] = res.positive_count;
        out["valid_blocks"] = res.valid_blocks;
        plot.filename = "layerwise_correlation.svg";
        plot.labels = {"Interference-forgetting correlation per block", "block index", "pearson r"};
        break;
    }
    }
    return out;
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw IoError("failed writing '" + path + "'");
}

std::string matrix_csv(const Matrix& m) {
    std::string out;
    char buf[40];
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.12g", m.at(i, j));
            out += buf;
            out.push_back(j + 1 < m.cols() ? ',' : '\n');
        }
    }
    return out;
}

} // namespace

ExperimentOutput run_experiment(const ExperimentConfig& config_in, const RunOptions& opts) {
    ExperimentConfig cfg = config_in;
    if (!opts.output_dir_override.empty()) cfg.output_dir = opts.output_dir_override;
    if (opts.embed_matrices_override) cfg.embed_matrices = true;

    const auto t_start = std::chrono::steady_clock::now();
    const std::vector<RunSpec> specs = plan_runs(cfg);
    std::vector<RunResult> results(specs.size());
    std::vector<std::exception_ptr> failures(specs.size());

    if (opts.jobs > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(opts.jobs)
        for (std::size_t i = 0; i < specs.size(); ++i) {
            try {
                results[i] = execute_run(cfg, specs[i]);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    } else {
        for (std::size_t i = 0; i < specs.size(); ++i) {
            try {
                results[i] = execute_run(cfg, specs[i]);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    }
    for (std::size_t i = 0; i < failures.size(); ++i) {
        if (failures[i]) {
            try {
                std::rethrow_exception(failures[i]);
            } catch (const NumericalError& e) {
                throw NumericalError("run " + std::to_string(specs[i].run_id) + " (seed " +
                                         std::to_string(specs[i].seed) + "): " + e.what(),
                                     e.iterations());
            }
        }
    }

    std::filesystem::create_directories(cfg.output_dir);

    std::vector<CsvRecord> rows;
    int csv_run_id = 0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        append_csv_records(cfg, specs[i], results[i].record, csv_run_id, rows);
    }

    ScatterPlot plot;
    json analysis_out = analyze(cfg, results, plot);

    json report;
    report["artifact_version"] = kVersion;
    report["experiment"] = kind_name(cfg.kind);
    report["config"] = config_to_json(cfg);
    report["analysis"] = std::move(analysis_out);

    json runs = json::array();
    for (std::size_t i = 0; i < specs.size(); ++i) {
        json run = record_json(results[i].record);
        run["run_id"] = specs[i].run_id;
        run["seed"] = specs[i].seed;
        run["rank"] = specs[i].rank;
        run["strategy"] = sim::strategy_name(specs[i].strategy);
        run["grid_angle"] = num_or_null(specs[i].grid_angle);
        if (specs[i].blocks > 1) {
            json blocks = json::array();
            for (const auto& block : results[i].record.per_block) blocks.push_back(record_json(block));
            run["per_block"] = std::move(blocks);
        }
        if (cfg.embed_matrices) {
            if (specs[i].blocks > 1) {
                json embedded = json::array();
                for (const auto& seq : results[i].sequences) embedded.push_back(tasks_json(seq));
                run["blocks_tasks"] = std::move(embedded);
            } else if (!results[i].sequences.empty()) {
                run["tasks"] = tasks_json(results[i].sequences.front());
            }
        }
        runs.push_back(std::move(run));
    }
    report["runs"] = std::move(runs);

    ExperimentOutput output;
    const std::filesystem::path dir(cfg.output_dir);

    const std::string csv_path = (dir / "records.csv").string();
    emit_csv(rows, csv_path);
    output.files_written.push_back(csv_path);

    if (!plot.points.empty()) {
        const std::string svg_path = (dir / plot.filename).string();
        emit_scatter_svg(plot.points, plot.fit, plot.labels, svg_path);
        output.files_written.push_back(svg_path);
    }

    if (cfg.embed_matrices) {
        for (std::size_t i = 0; i < specs.size(); ++i) {
            const auto dump = [&](const sim::RunRecord& rec, const std::string& stem) {
                for (std::size_t t = 0; t < rec.grad_samples.size(); ++t) {
                    const std::string path = (dir / (stem + "_task" + std::to_string(t) + ".csv")).string();
                    write_text(path, matrix_csv(rec.grad_samples[t]));
                    output.files_written.push_back(path);
                }
            };
            if (specs[i].blocks > 1) {
                for (std::size_t b = 0; b < results[i].record.per_block.size(); ++b) {
                    dump(results[i].record.per_block[b],
                         "grad_samples_run" + std::to_string(specs[i].run_id) + "_block" +
                             std::to_string(b));
                }
            } else {
                dump(results[i].record, "grad_samples_run" + std::to_string(specs[i].run_id));
            }
        }
    }

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    report["wall_clock_seconds"] = opts.frozen_clock ? 0.0 : elapsed;

    const std::string report_path = (dir / "report.json").string();
    write_text(report_path, report.dump(2) + "\n");
    output.files_written.push_back(report_path);

    output.report = std::move(report);
    return output;
}

nlohmann::json fit_from_csv(const std::string& csv_path) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + csv_path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const auto records = parse_csv(buffer.str());

    std::vector<std::pair<double, double>> points;
    for (const auto& r : records) {
        if (std::isfinite(r.interference) && std::isfinite(r.forgetting_immediate)) {
            points.emplace_back(r.interference, r.forgetting_immediate);
        }
    }
    if (points.size() < 3) {
        throw ConfigError("records csv has fewer than 3 usable rows for a fit", "rows");
    }
    const auto fit = analysis::fit_forgetting_law(points);
    json out = fit_json(fit);
    out["csv_rows"] = records.size();
    return out;
}

} // namespace subgeo::cli
