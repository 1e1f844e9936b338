// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "subgeo/matrix.hpp"

namespace subgeo::linalg {

struct QrResult {
    Matrix q; // thin, orthonormal columns
    Matrix r; // upper triangular
};

/// Thin Householder QR of m (rows >= cols). Column signs are fixed so the
/// largest-magnitude entry of every q column is positive.
QrResult qr(const Matrix& m);

struct SvdResult {
    Matrix u;              // left singular vectors, orthonormal columns
    std::vector<double> s; // non-negative, descending
    Matrix v;              // right singular vectors, orthonormal columns
};

/// Thin SVD via one-sided Jacobi (tolerance 1e-12 on relative off-diagonal
/// mass, at most 100 sweeps; throws NumericalError with the sweep count on
/// failure). Deterministic: fixed sweep order, singular values sorted
/// descending, values below 1e-12 * s_max truncated to exactly 0, and the
/// largest-magnitude entry of each u column forced positive.
SvdResult svd(const Matrix& m);

/// Number of leading singular values whose squared sum reaches
/// energy_threshold of the total; throws on an all-zero spectrum.
int energy_count(const std::vector<double>& singular_values, double energy_threshold);

/// Smallest leading set of left singular vectors whose squared singular
/// values capture at least energy_threshold of the total; throws on a zero
/// matrix ("no column space").
Matrix orthonormal_basis(const Matrix& m, double energy_threshold);

/// B * B^T * v for a basis with orthonormal columns.
std::vector<double> project(const Matrix& basis, const std::vector<double>& v);

/// Column-wise projection: B * (B^T * m).
Matrix project_columns(const Matrix& basis, const Matrix& m);

/// m - B * (B^T * m); the residual is orthogonal to the basis columns.
Matrix project_out_columns(const Matrix& basis, const Matrix& m);

} // namespace subgeo::linalg
