// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "subgeo/matrix.hpp"
#include "subgeo/rng.hpp"

namespace subgeo::subspace {

using linalg::Matrix;

/// Linear subspace of R^d given by an orthonormal basis (d x k, 1 <= k <= d).
/// Construction validates orthonormality to 1e-10; instances are immutable.
class Subspace {
public:
    Subspace(int ambient_dim, Matrix basis);

    int ambient_dim() const noexcept { return ambient_dim_; }
    int dim() const noexcept { return basis_.cols(); }
    const Matrix& basis() const noexcept { return basis_; }

private:
    int ambient_dim_;
    Matrix basis_;
};

/// Principal angles in radians, sorted ascending; angles.front() is theta_min.
struct AngleSpectrum {
    std::vector<double> angles;
};

/// Bjorck-Golub: arccos of the singular values of B1^T B2, clamped into
/// [0, 1] before arccos. Count is min(dim1, dim2).
AngleSpectrum principal_angles(const Subspace& s1, const Subspace& s2);

double min_angle(const AngleSpectrum& spec);

/// 1 - cos^2(theta_min) = sin^2(theta_min), the geometric interference term.
double interference(double theta_min);

/// Controlled pair construction: sample a random d x 2r Gaussian matrix,
/// orthonormalize into U1 (first r columns) and V (last r, orthogonal to U1),
/// and set column k of U2 to u_k cos(theta_k) + v_k sin(theta_k). The
/// principal-angle spectrum of the pair equals sorted(angles).
/// Requires 2 * angles.size() <= d and every angle in (0, pi/2].
std::pair<Subspace, Subspace> generate_pair_with_angles(int d, const std::vector<double>& angles,
                                                        std::uint64_t seed);

/// Span of the leading left singular vectors of the sample matrix meeting the
/// energy threshold (delegates to orthonormal_basis).
Subspace estimate_subspace(const Matrix& gradient_samples, double energy_threshold);

} // namespace subgeo::subspace
