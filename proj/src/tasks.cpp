// SPDX-License-Identifier: Apache-2.0
#include "subgeo/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "subgeo/errors.hpp"
#include "subgeo/linalg.hpp"

namespace subgeo::tasks {

namespace {

// diag(s_pow) * B^T (W - W*) without forming intermediates twice.
Matrix scaled_coords(const SyntheticTask& task, const Matrix& w, double power) {
    Matrix diff = w - task.target;
    Matrix coords = linalg::transpose_multiply(task.subspace.basis(), diff); // r x m
    for (int i = 0; i < coords.rows(); ++i) {
        const double s = std::pow(task.singular_values[static_cast<std::size_t>(i)], power);
        for (int j = 0; j < coords.cols(); ++j) coords.at(i, j) *= s;
    }
    return coords;
}

} // namespace

SyntheticTask make_task(Subspace subspace, std::vector<double> singular_values, Matrix target,
                        double noise_sigma, std::uint64_t seed) {
    const int r = subspace.dim();
    if (static_cast<int>(singular_values.size()) != r) {
        throw DimError("make_task: singular value count must equal subspace dimension");
    }
    for (double s : singular_values) {
        if (!(s > 0.0)) throw DimError("make_task: singular values must be strictly positive");
    }
    std::sort(singular_values.begin(), singular_values.end(), std::greater<>());
    if (target.rows() != subspace.ambient_dim()) {
        throw DimError("make_task: target rows must equal ambient dimension");
    }
    if (noise_sigma < 0.0) throw DimError("make_task: noise sigma must be non-negative");

    SyntheticTask task{std::move(subspace), std::move(singular_values), std::move(target),
                       noise_sigma,         false,                      0.0,
                       0.0,                 seed};
    task.smoothness = task.singular_values.front() * task.singular_values.front();
    task.curvature = task.singular_values.back() * task.singular_values.back();
    return task;
}

double loss(const SyntheticTask& task, const Matrix& w) {
    if (w.rows() != task.target.rows() || w.cols() != task.target.cols()) {
        throw DimError("loss: weight shape must match target");
    }
    const Matrix coords = scaled_coords(task, w, 1.0);
    const double f = coords.frobenius_norm();
    return 0.5 * f * f;
}

Matrix gradient(const SyntheticTask& task, const Matrix& w, Rng* rng) {
    if (w.rows() != task.target.rows() || w.cols() != task.target.cols()) {
        throw DimError("gradient: weight shape must match target");
    }
    const Matrix coords = scaled_coords(task, w, 2.0); // diag(s^2) B^T (W - W*)
    Matrix grad = linalg::multiply(task.subspace.basis(), coords);
    if (task.noise_sigma > 0.0 && rng != nullptr) {
        Matrix noise(grad.rows(), grad.cols());
        for (int i = 0; i < noise.rows(); ++i)
            for (int j = 0; j < noise.cols(); ++j) noise.at(i, j) = task.noise_sigma * rng->gaussian();
        if (!task.ambient_noise) {
            noise = linalg::project_columns(task.subspace.basis(), noise);
        }
        grad = grad + noise;
    }
    return grad;
}

TaskSequence make_sequence(int d, int m, int r, const std::vector<double>& consecutive_angles,
                           const std::vector<double>& singular_values, double target_scale,
                           double noise_sigma, std::uint64_t seed) {
    if (d < 1 || m < 1 || r < 1) throw DimError("make_sequence: dimensions must be positive");
    if (2 * r > d) throw DimError("make_sequence: requires 2r <= d for fresh complements");
    if (static_cast<int>(singular_values.size()) != r) {
        throw DimError("make_sequence: need one singular value per subspace direction");
    }
    constexpr double half_pi = std::numbers::pi / 2.0;
    for (double a : consecutive_angles) {
        if (!(a > 0.0) || a > half_pi + 1e-12) {
            throw DimError("make_sequence: consecutive angles must lie in (0, pi/2]");
        }
    }

    const int task_count = static_cast<int>(consecutive_angles.size()) + 1;
    TaskSequence seq;
    seq.ambient_dim = d;
    seq.output_dim = m;
    seq.tasks.reserve(static_cast<std::size_t>(task_count));

    // Basis of task 0: random orthonormal frame.
    Rng basis_rng = Rng::stream("tasks.basis", seed);
    Matrix gauss(d, r);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < r; ++j) gauss.at(i, j) = basis_rng.gaussian();
    Matrix basis = linalg::qr(gauss).q;

    Rng target_rng = Rng::stream("tasks.target", seed);
    for (int t = 0; t < task_count; ++t) {
        if (t > 0) {
            // Fresh complement V orthogonal to the current basis.
            Rng step_rng = Rng::stream("tasks.complement", derive_seed(seed, static_cast<std::uint64_t>(t)));
            Matrix raw(d, r);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < r; ++j) raw.at(i, j) = step_rng.gaussian();
            const Matrix complement = linalg::qr(linalg::project_out_columns(basis, raw)).q;
            const double theta = consecutive_angles[static_cast<std::size_t>(t - 1)];
            const double c = std::cos(theta);
            const double s = std::sin(theta);
            Matrix next(d, r);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < r; ++j) next.at(i, j) = c * basis.at(i, j) + s * complement.at(i, j);
            basis = std::move(next);
        }

        Matrix coeffs(r, m);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < m; ++j) coeffs.at(i, j) = target_rng.gaussian();
        Matrix target = linalg::multiply(basis, coeffs);
        target *= target_scale;

        seq.tasks.push_back(make_task(Subspace(d, basis), singular_values, std::move(target), noise_sigma,
                                      derive_seed(seed, static_cast<std::uint64_t>(t))));
    }

    for (int t = 0; t + 1 < task_count; ++t) {
        seq.pairwise_angles.push_back(subspace::principal_angles(
            seq.tasks[static_cast<std::size_t>(t)].subspace, seq.tasks[static_cast<std::size_t>(t + 1)].subspace));
    }
    return seq;
}

} // namespace subgeo::tasks
