// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "subgeo/matrix.hpp"
#include "subgeo/subspace.hpp"
#include "subgeo/tasks.hpp"

namespace subgeo::sim {

using linalg::Matrix;
using subspace::Subspace;
using tasks::SyntheticTask;
using tasks::TaskSequence;

enum class Strategy { vanilla, task_specific, ogd_project, ortho_reg, ewc };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

/// Low-rank adapter over a frozen base: effective weights are w0 + b * a.
/// At initialization b is zero and a is Gaussian with variance 1/r, so the
/// initial update is exactly zero.
struct AdapterState {
    Matrix b;  // d x r
    Matrix a;  // r x m
    Matrix w0; // frozen base, d x m

    Matrix weights() const { return w0 + linalg::multiply(b, a); }
};

AdapterState init_adapter(int d, int m, int r, Matrix w0, std::uint64_t seed);

struct TrainConfig {
    double learning_rate = 0.1;
    int steps_per_task = 400;
    int adapter_rank = 4;
    Strategy strategy = Strategy::vanilla;
    double lambda = 0.0;          // penalty weight for ortho_reg / ewc
    int grad_sample_count = 32;   // gradient samples kept per task
    double energy_threshold = 0.99;
    std::uint64_t seed = 1;
    bool ogd_exact_subspaces = false; // store true task bases instead of estimates
    bool keep_grad_samples = false;   // retain per-task sample matrices in the record
};

/// Everything recorded while training one task.
struct TaskTrace {
    Matrix grad_samples; // d x (samples * m), raw task gradients at evenly spaced steps
    Matrix delta;        // net update: W_after - W_before
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::vector<int> lr_halving_steps;
};

struct StrategyMemory {
    std::vector<Matrix> subspace_bases; // ogd_project: basis per completed task
    std::vector<Matrix> previous_b;     // ortho_reg: adapter B snapshot per completed task
    struct Anchor {
        Matrix w;      // weights at the end of the anchored task
        Matrix fisher; // diagonal Fisher estimate (mean squared gradient entries)
    };
    std::vector<Anchor> anchors; // ewc
};

/// Plain gradient-descent steps on (b, a) with the configured strategy hooks.
/// The monitored-descent rule halves the step size after 5 consecutive
/// objective increases (at most 10 halvings); a task loss above 1e12 raises
/// NumericalError carrying the step index.
std::pair<AdapterState, TaskTrace> train_task(AdapterState state, const SyntheticTask& task,
                                              const TrainConfig& cfg, const StrategyMemory& memory,
                                              Rng* noise_rng = nullptr);

/// One sequential run over all tasks. Forgetting matrices are T x T with row
/// t, column i meaningful for i < t:
///   immediate[t][i]  = loss_i(after task t) - loss_i(after task t-1)
///   cumulative[t][i] = loss_i(after task t) - loss_i(after task i)
struct RunRecord {
    int task_count = 0;
    Matrix forgetting_immediate;
    Matrix forgetting_cumulative;
    std::vector<double> consecutive_theta_min; // measured from gradient samples
    Matrix theta_min_measured;                 // all pairs, row t / col i (i < t); NaN when unmeasurable
    Matrix theta_min_prescribed;               // from the true task subspaces
    std::vector<double> update_norms;          // ||Delta_t||_F per task
    std::vector<double> effective_ranks;       // entropy rank of each task's sample spectrum
    std::vector<double> final_losses;          // per task, at the end of its own training
    std::vector<std::vector<int>> lr_halvings; // per task
    TrainConfig config;
    std::uint64_t seed = 0;
    std::vector<RunRecord> per_block;      // filled by run_blocks
    std::vector<Matrix> grad_samples;      // per task, only under keep_grad_samples
};

RunRecord run_sequence(const TaskSequence& seq, const TrainConfig& cfg);

/// Independent (subspace, adapter) pairs standing in for separate adapted
/// layers. Block b runs with seed derive_seed(cfg.seed, b); total forgetting
/// is the elementwise sum over blocks, and per_block keeps each block's
/// record.
RunRecord run_blocks(const std::vector<TaskSequence>& block_seqs, const TrainConfig& cfg);

/// g minus its projection onto the joint span of the stored bases. The bases
/// are orthonormalized jointly first so overlapping subspaces are not
/// subtracted twice.
Matrix ogd_project_gradient(const Matrix& g, const std::vector<Matrix>& memory_bases);

struct PenaltyGradient {
    double penalty = 0.0;
    Matrix grad;
};

/// lambda * sum_p ||B_p^T B||_F^2 and its gradient 2 lambda sum_p B_p B_p^T B.
PenaltyGradient ortho_penalty_gradient(const Matrix& b_current, const std::vector<Matrix>& b_previous,
                                       double lambda);

/// Diagonal quadratic anchor penalty lambda * sum_a sum_ij F_ij (w - w_a)_ij^2.
PenaltyGradient ewc_penalty_gradient(const Matrix& w, const std::vector<StrategyMemory::Anchor>& anchors,
                                     double lambda);

/// Mean of the meaningful (i < t) entries of forgetting_immediate.
double mean_immediate_forgetting(const RunRecord& record);

} // namespace subgeo::sim
