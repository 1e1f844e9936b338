// SPDX-License-Identifier: Apache-2.0
#include "subgeo/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "subgeo/errors.hpp"
#include "subgeo/linalg.hpp"

namespace subgeo::subspace {

using linalg::qr;
using linalg::svd;

namespace {

constexpr double kOrthonormalTol = 1e-10;

} // namespace

Subspace::Subspace(int ambient_dim, Matrix basis) : ambient_dim_(ambient_dim), basis_(std::move(basis)) {
    if (ambient_dim_ < 1) throw DimError("subspace: ambient dimension must be positive");
    if (basis_.rows() != ambient_dim_) throw DimError("subspace: basis rows must equal ambient dimension");
    if (basis_.cols() < 1 || basis_.cols() > ambient_dim_) {
        throw DimError("subspace: basis must have between 1 and ambient_dim columns");
    }
    const Matrix gram = linalg::transpose_multiply(basis_, basis_);
    const Matrix err = gram - Matrix::identity(basis_.cols());
    if (err.max_abs() > kOrthonormalTol) {
        throw DimError("subspace: basis columns are not orthonormal (deviation " +
                       std::to_string(err.max_abs()) + ")");
    }
}

AngleSpectrum principal_angles(const Subspace& s1, const Subspace& s2) {
    if (s1.ambient_dim() != s2.ambient_dim()) {
        throw DimError("principal_angles: ambient dimensions disagree");
    }
    // Cosines from the singular values of B1^T B2 (descending, so the angle
    // sequence is ascending). arccos alone loses half the significant digits
    // near theta = 0, so small angles are recomputed from sines: the
    // singular values of (I - P_large) B_small are sin(theta_i).
    const Matrix& small = s1.dim() <= s2.dim() ? s1.basis() : s2.basis();
    const Matrix& large = s1.dim() <= s2.dim() ? s2.basis() : s1.basis();
    const Matrix cross = linalg::transpose_multiply(small, large); // k x K
    const auto cos_dec = svd(cross);
    const Matrix resid = small - linalg::multiply(large, linalg::transpose_multiply(large, small));
    const auto sin_dec = svd(resid);

    const int count = std::min(s1.dim(), s2.dim());
    AngleSpectrum spec;
    spec.angles.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double c = std::clamp(cos_dec.s[static_cast<std::size_t>(i)], 0.0, 1.0);
        // Sines come out descending; index from the back to pair ascending
        // sines with descending cosines.
        const double s = std::clamp(sin_dec.s[static_cast<std::size_t>(count - 1 - i)], 0.0, 1.0);
        spec.angles.push_back(c * c >= 0.5 ? std::asin(s) : std::acos(c));
    }
    return spec;
}

double min_angle(const AngleSpectrum& spec) {
    if (spec.angles.empty()) throw DimError("min_angle: empty spectrum");
    return spec.angles.front();
}

double interference(double theta_min) {
    constexpr double half_pi = std::numbers::pi / 2.0;
    if (!(theta_min >= 0.0) || theta_min > half_pi + 1e-12) {
        throw DimError("interference: angle must lie in [0, pi/2]");
    }
    const double s = std::sin(theta_min);
    return s * s;
}

std::pair<Subspace, Subspace> generate_pair_with_angles(int d, const std::vector<double>& angles,
                                                        std::uint64_t seed) {
    const int r = static_cast<int>(angles.size());
    if (r < 1) throw DimError("generate_pair_with_angles: need at least one angle");
    if (2 * r > d) throw DimError("generate_pair_with_angles: requires 2 * len(angles) <= d");
    constexpr double half_pi = std::numbers::pi / 2.0;
    for (double a : angles) {
        if (!(a > 0.0) || a > half_pi + 1e-12) {
            throw DimError("generate_pair_with_angles: angles must lie in (0, pi/2]");
        }
    }

    Rng rng = Rng::stream("subspace.pair", seed);
    Matrix gauss(d, 2 * r);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < 2 * r; ++j) gauss.at(i, j) = rng.gaussian();
    const Matrix ortho = qr(gauss).q; // d x 2r, orthonormal columns

    Matrix u1(d, r);
    Matrix u2(d, r);
    for (int k = 0; k < r; ++k) {
        const double c = std::cos(angles[static_cast<std::size_t>(k)]);
        const double s = std::sin(angles[static_cast<std::size_t>(k)]);
        for (int i = 0; i < d; ++i) {
            const double u = ortho.at(i, k);
            const double v = ortho.at(i, r + k);
            u1.at(i, k) = u;
            u2.at(i, k) = u * c + v * s;
        }
    }
    return {Subspace(d, std::move(u1)), Subspace(d, std::move(u2))};
}

Subspace estimate_subspace(const Matrix& gradient_samples, double energy_threshold) {
    if (gradient_samples.empty()) throw DimError("estimate_subspace: empty sample matrix");
    Matrix basis = linalg::orthonormal_basis(gradient_samples, energy_threshold);
    return Subspace(gradient_samples.rows(), std::move(basis));
}

} // namespace subgeo::subspace
