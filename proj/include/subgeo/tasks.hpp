// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "subgeo/matrix.hpp"
#include "subgeo/rng.hpp"
#include "subgeo/subspace.hpp"

namespace subgeo::tasks {

using linalg::Matrix;
using subspace::AngleSpectrum;
using subspace::Subspace;

/// Quadratic synthetic task whose gradients lie exactly in a prescribed
/// subspace:
///
///   loss(W)     = 1/2 * || diag(s) * B^T (W - W*) ||_F^2
///   gradient(W) = B * diag(s^2) * B^T (W - W*)
///
/// With basis B (d x r) the Hessian is B diag(s^2) B^T, so smoothness and
/// curvature constants are known exactly: L = max(s)^2, mu = min(s)^2.
struct SyntheticTask {
    Subspace subspace;                   // the task's gradient subspace
    std::vector<double> singular_values; // curvature scales, descending > 0
    Matrix target;                       // d x m task optimum W*
    double noise_sigma = 0.0;            // Gaussian gradient-noise scale
    bool ambient_noise = false;          // leave noise unprojected when true
    double smoothness = 0.0;             // L = s_1^2
    double curvature = 0.0;              // mu = s_r^2
    std::uint64_t seed = 0;              // identity for derived noise streams
};

SyntheticTask make_task(Subspace subspace, std::vector<double> singular_values, Matrix target,
                        double noise_sigma, std::uint64_t seed);

double loss(const SyntheticTask& task, const Matrix& w);

/// Analytic gradient; when noise_sigma > 0 and an rng is supplied, adds
/// i.i.d. Gaussian noise of that scale, projected into the task subspace
/// unless ambient_noise is set.
Matrix gradient(const SyntheticTask& task, const Matrix& w, Rng* rng = nullptr);

struct TaskSequence {
    std::vector<SyntheticTask> tasks;
    std::vector<AngleSpectrum> pairwise_angles; // per consecutive pair
    int ambient_dim = 0;
    int output_dim = 0;
};

/// T = len(consecutive_angles) + 1 tasks of shared dimension (d, m) with
/// prescribed consecutive theta_min. Task 0's basis is a random orthonormal
/// d x r frame; each successor is U_next = U cos(theta) + V sin(theta) with a
/// fresh random complement V orthogonal to U, which rotates every basis
/// direction by theta. Targets are target_scale * B_t * Z_t with standard
/// Gaussian Z_t, so each optimum displacement lies in its own subspace.
TaskSequence make_sequence(int d, int m, int r, const std::vector<double>& consecutive_angles,
                           const std::vector<double>& singular_values, double target_scale,
                           double noise_sigma, std::uint64_t seed);

} // namespace subgeo::tasks
