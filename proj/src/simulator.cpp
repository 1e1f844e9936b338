// SPDX-License-Identifier: Apache-2.0
#include "subgeo/simulator.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "subgeo/analysis.hpp"
#include "subgeo/errors.hpp"
#include "subgeo/linalg.hpp"

namespace subgeo::sim {

namespace {

constexpr double kDivergenceCap = 1e12;
constexpr int kHalvingStreak = 5;
constexpr int kMaxHalvings = 10;

void validate_config(const TrainConfig& cfg) {
    if (!(cfg.learning_rate > 0.0)) throw DimError("train config: learning rate must be positive");
    if (cfg.steps_per_task < 1) throw DimError("train config: steps_per_task must be positive");
    if (cfg.grad_sample_count < 1) throw DimError("train config: grad_sample_count must be at least 1");
    if (cfg.lambda < 0.0) throw DimError("train config: lambda must be non-negative");
    if (!(cfg.energy_threshold > 0.0) || cfg.energy_threshold > 1.0) {
        throw DimError("train config: energy threshold must be in (0, 1]");
    }
}

// Joint orthonormal basis for the union of stored spans.
Matrix union_basis(const std::vector<Matrix>& bases) {
    Matrix all;
    for (const Matrix& b : bases) all = linalg::hconcat(all, b);
    if (all.empty()) return all;
    return linalg::orthonormal_basis(all, 1.0);
}

Matrix fisher_from_samples(const Matrix& samples, int m) {
    const int d = samples.rows();
    const int count = samples.cols() / m;
    Matrix fisher(d, m);
    for (int s = 0; s < count; ++s) {
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < m; ++j) {
                const double g = samples.at(i, s * m + j);
                fisher.at(i, j) += g * g;
            }
        }
    }
    fisher *= 1.0 / count;
    return fisher;
}

double strategy_objective(const SyntheticTask& task, const AdapterState& state, const Matrix& w,
                          const TrainConfig& cfg, const StrategyMemory& memory) {
    double obj = tasks::loss(task, w);
    if (cfg.strategy == Strategy::ortho_reg && !memory.previous_b.empty()) {
        obj += ortho_penalty_gradient(state.b, memory.previous_b, cfg.lambda).penalty;
    }
    if (cfg.strategy == Strategy::ewc && !memory.anchors.empty()) {
        obj += ewc_penalty_gradient(w, memory.anchors, cfg.lambda).penalty;
    }
    return obj;
}

} // namespace

std::string strategy_name(Strategy s) {
    switch (s) {
    case Strategy::vanilla: return "vanilla";
    case Strategy::task_specific: return "task_specific";
    case Strategy::ogd_project: return "ogd_project";
    case Strategy::ortho_reg: return "ortho_reg";
    case Strategy::ewc: return "ewc";
    }
    return "unknown";
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "vanilla") return Strategy::vanilla;
    if (name == "task_specific") return Strategy::task_specific;
    if (name == "ogd_project") return Strategy::ogd_project;
    if (name == "ortho_reg") return Strategy::ortho_reg;
    if (name == "ewc") return Strategy::ewc;
    throw ConfigError("unknown strategy '" + name + "'", "strategy");
}

AdapterState init_adapter(int d, int m, int r, Matrix w0, std::uint64_t seed) {
    if (r < 1 || r > d) {
        throw DimError("init_adapter: rank must satisfy 1 <= r <= d");
    }
    if (w0.rows() != d || w0.cols() != m) throw DimError("init_adapter: base shape mismatch");
    AdapterState state{Matrix(d, r), Matrix(r, m), std::move(w0)};
    Rng rng = Rng::stream("adapter.init", seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(r));
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < m; ++j) state.a.at(i, j) = scale * rng.gaussian();
    return state;
}

std::pair<AdapterState, TaskTrace> train_task(AdapterState state, const SyntheticTask& task,
                                              const TrainConfig& cfg, const StrategyMemory& memory,
                                              Rng* noise_rng) {
    validate_config(cfg);
    const int d = state.b.rows();
    const int m = state.a.cols();
    if (task.target.rows() != d || task.target.cols() != m) {
        throw DimError("train_task: task shape does not match adapter");
    }
    if (state.b.cols() != state.a.rows() || state.w0.rows() != d || state.w0.cols() != m) {
        throw DimError("train_task: inconsistent adapter state");
    }

    Matrix ogd_union;
    if (cfg.strategy == Strategy::ogd_project && !memory.subspace_bases.empty()) {
        ogd_union = union_basis(memory.subspace_bases);
    }

    const int steps = cfg.steps_per_task;
    const int samples = std::min(cfg.grad_sample_count, steps);

    TaskTrace trace;
    trace.grad_samples = Matrix(d, samples * m);
    const Matrix w_before = state.weights();
    trace.initial_loss = tasks::loss(task, w_before);

    double eta = cfg.learning_rate;
    double prev_objective = strategy_objective(task, state, w_before, cfg, memory);
    int rise_streak = 0;
    int halvings = 0;
    int sample_cursor = 0;

    for (int step = 0; step < steps; ++step) {
        const Matrix w = state.weights();
        const Matrix g_raw = tasks::gradient(task, w, noise_rng);

        if (sample_cursor < samples &&
            step == static_cast<int>(static_cast<long long>(sample_cursor) * steps / samples)) {
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < m; ++j) trace.grad_samples.at(i, sample_cursor * m + j) = g_raw.at(i, j);
            ++sample_cursor;
        }

        Matrix g = g_raw;
        if (cfg.strategy == Strategy::ogd_project && !ogd_union.empty()) {
            g = linalg::project_out_columns(ogd_union, g);
        }
        if (cfg.strategy == Strategy::ewc && !memory.anchors.empty()) {
            g = g + ewc_penalty_gradient(w, memory.anchors, cfg.lambda).grad;
        }

        Matrix grad_b = linalg::multiply_transpose(g, state.a); // dL/dB = g A^T
        const Matrix grad_a = linalg::transpose_multiply(state.b, g); // dL/dA = B^T g
        if (cfg.strategy == Strategy::ortho_reg && !memory.previous_b.empty()) {
            grad_b.add_scaled(ortho_penalty_gradient(state.b, memory.previous_b, cfg.lambda).grad, 1.0);
        }

        state.b.add_scaled(grad_b, -eta);
        state.a.add_scaled(grad_a, -eta);

        const Matrix w_new = state.weights();
        const double task_loss = tasks::loss(task, w_new);
        if (!(task_loss <= kDivergenceCap)) {
            throw NumericalError("training diverged at step " + std::to_string(step), step);
        }
        const double objective = strategy_objective(task, state, w_new, cfg, memory);
        if (objective > prev_objective) {
            if (++rise_streak == kHalvingStreak) {
                rise_streak = 0;
                if (halvings < kMaxHalvings) {
                    eta *= 0.5;
                    ++halvings;
                    trace.lr_halving_steps.push_back(step);
                }
            }
        } else {
            rise_streak = 0;
        }
        prev_objective = objective;
    }

    const Matrix w_after = state.weights();
    trace.final_loss = tasks::loss(task, w_after);
    trace.delta = w_after - w_before;
    return {std::move(state), std::move(trace)};
}

RunRecord run_sequence(const TaskSequence& seq, const TrainConfig& cfg) {
    validate_config(cfg);
    const int task_count = static_cast<int>(seq.tasks.size());
    if (task_count < 1) throw DimError("run_sequence: need at least one task");
    const int d = seq.ambient_dim;
    const int m = seq.output_dim;

    RunRecord rec;
    rec.task_count = task_count;
    rec.config = cfg;
    rec.seed = cfg.seed;
    rec.forgetting_immediate = Matrix(task_count, task_count);
    rec.forgetting_cumulative = Matrix(task_count, task_count);
    rec.theta_min_measured = Matrix(task_count, task_count);
    rec.theta_min_prescribed = Matrix(task_count, task_count);
    rec.update_norms.resize(static_cast<std::size_t>(task_count));
    rec.effective_ranks.resize(static_cast<std::size_t>(task_count));
    rec.final_losses.resize(static_cast<std::size_t>(task_count));
    rec.lr_halvings.resize(static_cast<std::size_t>(task_count));

    Matrix base(d, m);
    AdapterState state = init_adapter(d, m, cfg.adapter_rank, base, derive_seed(cfg.seed, 0));
    StrategyMemory memory;
    std::vector<std::optional<Subspace>> estimated(static_cast<std::size_t>(task_count));
    std::vector<Matrix> frozen_weights; // task_specific: final weights per task
    Matrix loss_after(task_count, task_count); // row t: loss of task i<=t after task t

    for (int t = 0; t < task_count; ++t) {
        const SyntheticTask& task = seq.tasks[static_cast<std::size_t>(t)];
        if (cfg.strategy == Strategy::task_specific && t > 0) {
            state = init_adapter(d, m, cfg.adapter_rank, base, derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
        }
        if (cfg.strategy == Strategy::ogd_project && t > 0) {
            // Fold the adapter into the base so subsequent projected updates
            // leave every direction of the stored spans untouched.
            state = init_adapter(d, m, cfg.adapter_rank, state.weights(),
                                 derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
        }

        Rng noise_rng = Rng::stream("sim.noise", cfg.seed, static_cast<std::uint64_t>(t));
        TaskTrace trace;
        try {
            auto [next_state, next_trace] = train_task(std::move(state), task, cfg, memory,
                                                       task.noise_sigma > 0.0 ? &noise_rng : nullptr);
            state = std::move(next_state);
            trace = std::move(next_trace);
        } catch (const NumericalError& e) {
            throw NumericalError("task " + std::to_string(t) + ": " + e.what(), e.iterations());
        }

        rec.update_norms[static_cast<std::size_t>(t)] = trace.delta.frobenius_norm();
        rec.final_losses[static_cast<std::size_t>(t)] = trace.final_loss;
        rec.lr_halvings[static_cast<std::size_t>(t)] = trace.lr_halving_steps;

        if (cfg.keep_grad_samples) rec.grad_samples.push_back(trace.grad_samples);
        if (trace.grad_samples.max_abs() > 0.0) {
            const auto dec = linalg::svd(trace.grad_samples);
            estimated[static_cast<std::size_t>(t)] = Subspace(
                d, linalg::first_columns(dec.u, linalg::energy_count(dec.s, cfg.energy_threshold)));
            rec.effective_ranks[static_cast<std::size_t>(t)] = analysis::effective_rank(dec.s);
        } else {
            rec.effective_ranks[static_cast<std::size_t>(t)] = 0.0;
        }

        switch (cfg.strategy) {
        case Strategy::ogd_project:
            if (cfg.ogd_exact_subspaces) {
                memory.subspace_bases.push_back(task.subspace.basis());
            } else if (estimated[static_cast<std::size_t>(t)]) {
                memory.subspace_bases.push_back(estimated[static_cast<std::size_t>(t)]->basis());
            }
            break;
        case Strategy::ortho_reg:
            memory.previous_b.push_back(state.b);
            break;
        case Strategy::ewc:
            if (trace.grad_samples.max_abs() > 0.0) {
                memory.anchors.push_back({state.weights(), fisher_from_samples(trace.grad_samples, m)});
            }
            break;
        default:
            break;
        }

        if (cfg.strategy == Strategy::task_specific) {
            frozen_weights.push_back(state.weights());
            for (int i = 0; i <= t; ++i) {
                loss_after.at(t, i) =
                    tasks::loss(seq.tasks[static_cast<std::size_t>(i)], frozen_weights[static_cast<std::size_t>(i)]);
            }
        } else {
            const Matrix w = state.weights();
            for (int i = 0; i <= t; ++i) {
                loss_after.at(t, i) = tasks::loss(seq.tasks[static_cast<std::size_t>(i)], w);
            }
        }
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int t = 0; t < task_count; ++t) {
        for (int i = 0; i < t; ++i) {
            rec.forgetting_immediate.at(t, i) = loss_after.at(t, i) - loss_after.at(t - 1, i);
            rec.forgetting_cumulative.at(t, i) = loss_after.at(t, i) - loss_after.at(i, i);
            rec.theta_min_prescribed.at(t, i) = subspace::min_angle(subspace::principal_angles(
                seq.tasks[static_cast<std::size_t>(i)].subspace, seq.tasks[static_cast<std::size_t>(t)].subspace));
            rec.theta_min_measured.at(t, i) =
                (estimated[static_cast<std::size_t>(i)] && estimated[static_cast<std::size_t>(t)])
                    ? subspace::min_angle(subspace::principal_angles(*estimated[static_cast<std::size_t>(i)],
                                                                     *estimated[static_cast<std::size_t>(t)]))
                    : nan;
        }
    }
    for (int t = 0; t + 1 < task_count; ++t) {
        rec.consecutive_theta_min.push_back(rec.theta_min_measured.at(t + 1, t));
    }
    return rec;
}

RunRecord run_blocks(const std::vector<TaskSequence>& block_seqs, const TrainConfig& cfg) {
    if (block_seqs.empty()) throw DimError("run_blocks: need at least one block");
    const int task_count = static_cast<int>(block_seqs.front().tasks.size());
    for (const TaskSequence& seq : block_seqs) {
        if (static_cast<int>(seq.tasks.size()) != task_count) {
            throw DimError("run_blocks: all blocks must share the task count");
        }
    }

    RunRecord total;
    total.task_count = task_count;
    total.config = cfg;
    total.seed = cfg.seed;
    total.forgetting_immediate = Matrix(task_count, task_count);
    total.forgetting_cumulative = Matrix(task_count, task_count);
    total.final_losses.assign(static_cast<std::size_t>(task_count), 0.0);

    for (std::size_t b = 0; b < block_seqs.size(); ++b) {
        TrainConfig sub = cfg;
        sub.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(b));
        RunRecord rec = run_sequence(block_seqs[b], sub);
        total.forgetting_immediate.add_scaled(rec.forgetting_immediate, 1.0);
        total.forgetting_cumulative.add_scaled(rec.forgetting_cumulative, 1.0);
        for (int t = 0; t < task_count; ++t) {
            total.final_losses[static_cast<std::size_t>(t)] += rec.final_losses[static_cast<std::size_t>(t)];
        }
        total.per_block.push_back(std::move(rec));
    }
    return total;
}

Matrix ogd_project_gradient(const Matrix& g, const std::vector<Matrix>& memory_bases) {
    if (memory_bases.empty()) return g;
    for (const Matrix& b : memory_bases) {
        if (b.rows() != g.rows()) throw DimError("ogd_project_gradient: basis rows must match gradient rows");
    }
    return linalg::project_out_columns(union_basis(memory_bases), g);
}

PenaltyGradient ortho_penalty_gradient(const Matrix& b_current, const std::vector<Matrix>& b_previous,
                                       double lambda) {
    if (lambda < 0.0) throw DimError("ortho_penalty_gradient: lambda must be non-negative");
    PenaltyGradient out;
    out.grad = Matrix(b_current.rows(), b_current.cols());
    for (const Matrix& prev : b_previous) {
        if (prev.rows() != b_current.rows()) {
            throw DimError("ortho_penalty_gradient: row counts disagree");
        }
        const Matrix cross = linalg::transpose_multiply(prev, b_current); // B_p^T B
        const double f = cross.frobenius_norm();
        out.penalty += lambda * f * f;
        out.grad.add_scaled(linalg::multiply(prev, cross), 2.0 * lambda);
    }
    return out;
}

PenaltyGradient ewc_penalty_gradient(const Matrix& w, const std::vector<StrategyMemory::Anchor>& anchors,
                                     double lambda) {
    if (lambda < 0.0) throw DimError("ewc_penalty_gradient: lambda must be non-negative");
    PenaltyGradient out;
    out.grad = Matrix(w.rows(), w.cols());
    for (const auto& anchor : anchors) {
        if (anchor.w.rows() != w.rows() || anchor.w.cols() != w.cols() || anchor.fisher.rows() != w.rows() ||
            anchor.fisher.cols() != w.cols()) {
            throw DimError("ewc_penalty_gradient: anchor shape mismatch");
        }
        for (int i = 0; i < w.rows(); ++i) {
            for (int j = 0; j < w.cols(); ++j) {
                const double diff = w.at(i, j) - anchor.w.at(i, j);
                const double f = anchor.fisher.at(i, j);
                out.penalty += lambda * f * diff * diff;
                out.grad.at(i, j) += 2.0 * lambda * f * diff;
            }
        }
    }
    return out;
}

double mean_immediate_forgetting(const RunRecord& record) {
    double acc = 0.0;
    int count = 0;
    for (int t = 0; t < record.task_count; ++t) {
        for (int i = 0; i < t; ++i) {
            acc += record.forgetting_immediate.at(t, i);
            ++count;
        }
    }
    return count > 0 ? acc / count : 0.0;
}

} // namespace subgeo::sim
