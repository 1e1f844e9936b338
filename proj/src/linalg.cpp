// SPDX-License-Identifier: Apache-2.0
#include "subgeo/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "subgeo/errors.hpp"

namespace subgeo::linalg {

namespace {

constexpr double kJacobiTol = 1e-12;
constexpr int kMaxSweeps = 100;
constexpr double kTruncation = 1e-12; // relative singular-value cutoff

// Force the largest-magnitude entry of column j positive; returns -1.0 when
// the column was negated so callers can compensate.
double fix_column_sign(Matrix& m, int j) {
    int arg = 0;
    double best = 0.0;
    for (int i = 0; i < m.rows(); ++i) {
        const double a = std::abs(m.at(i, j));
        if (a > best) {
            best = a;
            arg = i;
        }
    }
    if (m.at(arg, j) < 0.0) {
        for (int i = 0; i < m.rows(); ++i) m.at(i, j) = -m.at(i, j);
        return -1.0;
    }
    return 1.0;
}

// Append orthonormal columns drawn from the standard basis until u has
// `want` columns total. Used to complete U when singular values vanish.
// Candidate e_i is scored without forming its residual:
// ||(I - U U^T) e_i||^2 = 1 - ||row i of U||^2.
void complete_orthonormal(Matrix& u, int have, int want) {
    const int d = u.rows();
    std::vector<double> residual_sq(static_cast<std::size_t>(d), 1.0);
    for (int i = 0; i < d; ++i) {
        double acc = 0.0;
        for (int j = 0; j < have; ++j) acc += u.at(i, j) * u.at(i, j);
        residual_sq[static_cast<std::size_t>(i)] -= acc;
    }
    std::vector<double> col(static_cast<std::size_t>(d));
    for (int next = have; next < want; ++next) {
        int cand = 0;
        for (int i = 1; i < d; ++i) {
            if (residual_sq[static_cast<std::size_t>(i)] > residual_sq[static_cast<std::size_t>(cand)]) cand = i;
        }
        if (!(residual_sq[static_cast<std::size_t>(cand)] > 0.0)) {
            throw NumericalError("cannot complete orthonormal basis");
        }
        std::fill(col.begin(), col.end(), 0.0);
        col[static_cast<std::size_t>(cand)] = 1.0;
        // Two Gram-Schmidt passes keep the fill-in orthogonal to ~1e-15.
        for (int pass = 0; pass < 2; ++pass) {
            for (int j = 0; j < next; ++j) {
                double proj = 0.0;
                for (int i = 0; i < d; ++i) proj += u.at(i, j) * col[static_cast<std::size_t>(i)];
                for (int i = 0; i < d; ++i) col[static_cast<std::size_t>(i)] -= proj * u.at(i, j);
            }
        }
        const double nrm = norm2(col);
        for (int i = 0; i < d; ++i) {
            u.at(i, next) = col[static_cast<std::size_t>(i)] / nrm;
            residual_sq[static_cast<std::size_t>(i)] -= u.at(i, next) * u.at(i, next);
        }
    }
}

// One-sided Jacobi on a (rows >= cols): returns U (thin), s, V with
// a = U diag(s) V^T.
SvdResult jacobi_svd_tall(const Matrix& input) {
    const int m = input.rows();
    const int n = input.cols();
    Matrix a = input;
    Matrix v = Matrix::identity(n);

    // Cached squared column norms, refreshed each sweep and updated through
    // the rotation identities in between. Columns far below the largest are
    // numerically zero: rotating against them moves at most ~1e-14 * s_max
    // of mass, below the truncation cutoff, so such pairs are skipped
    // without even computing their inner products.
    std::vector<double> col_sq(static_cast<std::size_t>(n), 0.0);

    std::vector<int> sweep_order(static_cast<std::size_t>(n));

    int sweep = 0;
    for (; sweep < kMaxSweeps; ++sweep) {
        double max_col_sq = 0.0;
        for (int j = 0; j < n; ++j) {
            double nrm = 0.0;
            for (int i = 0; i < m; ++i) nrm += a.at(i, j) * a.at(i, j);
            col_sq[static_cast<std::size_t>(j)] = nrm;
            max_col_sq = std::max(max_col_sq, nrm);
        }
        const double negligible = max_col_sq * 1e-28;

        // de Rijk ordering: sweep columns by descending norm so mass
        // concentrates into the leading columns; essential for heavily
        // rank-deficient or graded inputs.
        std::iota(sweep_order.begin(), sweep_order.end(), 0);
        std::stable_sort(sweep_order.begin(), sweep_order.end(), [&col_sq](int x, int y) {
            return col_sq[static_cast<std::size_t>(x)] > col_sq[static_cast<std::size_t>(y)];
        });
        for (int dst = 0; dst < n; ++dst) {
            int src = sweep_order[static_cast<std::size_t>(dst)];
            while (src < dst) src = sweep_order[static_cast<std::size_t>(src)];
            if (src == dst) continue;
            for (int i = 0; i < m; ++i) std::swap(a.at(i, dst), a.at(i, src));
            for (int i = 0; i < n; ++i) std::swap(v.at(i, dst), v.at(i, src));
            std::swap(col_sq[static_cast<std::size_t>(dst)], col_sq[static_cast<std::size_t>(src)]);
        }

        bool rotated = false;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (col_sq[static_cast<std::size_t>(p)] <= negligible ||
                    col_sq[static_cast<std::size_t>(q)] <= negligible) {
                    continue;
                }
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (int i = 0; i < m; ++i) {
                    const double x = a.at(i, p);
                    const double y = a.at(i, q);
                    app += x * x;
                    aqq += y * y;
                    apq += x * y;
                }
                if (std::abs(apq) <= kJacobiTol * std::sqrt(app * aqq)) continue;
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int i = 0; i < m; ++i) {
                    const double x = a.at(i, p);
                    const double y = a.at(i, q);
                    a.at(i, p) = c * x - s * y;
                    a.at(i, q) = s * x + c * y;
                }
                for (int i = 0; i < n; ++i) {
                    const double x = v.at(i, p);
                    const double y = v.at(i, q);
                    v.at(i, p) = c * x - s * y;
                    v.at(i, q) = s * x + c * y;
                }
                col_sq[static_cast<std::size_t>(p)] = app - t * apq;
                col_sq[static_cast<std::size_t>(q)] = aqq + t * apq;
            }
        }
        if (!rotated) break;
    }
    if (sweep >= kMaxSweeps) {
        throw NumericalError("jacobi svd did not converge in " + std::to_string(kMaxSweeps) + " sweeps",
                             kMaxSweeps);
    }

    std::vector<double> s(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
        double nrm = 0.0;
        for (int i = 0; i < m; ++i) nrm += a.at(i, j) * a.at(i, j);
        s[static_cast<std::size_t>(j)] = std::sqrt(nrm);
    }

    // Sort descending, permuting the columns of a and v alongside.
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&s](int x, int y) { return s[static_cast<std::size_t>(x)] > s[static_cast<std::size_t>(y)]; });

    SvdResult out;
    out.u = Matrix(m, n);
    out.v = Matrix(n, n);
    out.s.assign(static_cast<std::size_t>(n), 0.0);
    const double smax = s[static_cast<std::size_t>(order[0])];
    int kept = 0;
    for (int j = 0; j < n; ++j) {
        const int src = order[static_cast<std::size_t>(j)];
        double sj = s[static_cast<std::size_t>(src)];
        if (sj <= kTruncation * smax) sj = 0.0;
        out.s[static_cast<std::size_t>(j)] = sj;
        for (int i = 0; i < n; ++i) out.v.at(i, j) = v.at(i, src);
        if (sj > 0.0) {
            for (int i = 0; i < m; ++i) out.u.at(i, j) = a.at(i, src) / s[static_cast<std::size_t>(src)];
            ++kept;
        }
    }
    complete_orthonormal(out.u, kept, n);

    for (int j = 0; j < n; ++j) {
        const double sign = fix_column_sign(out.u, j);
        if (sign < 0.0) {
            for (int i = 0; i < n; ++i) out.v.at(i, j) = -out.v.at(i, j);
        }
    }
    return out;
}

} // namespace

QrResult qr(const Matrix& m) {
    if (m.empty()) throw DimError("qr: empty matrix");
    if (m.rows() < m.cols()) {
        throw DimError("qr: requires rows >= cols, got " + std::to_string(m.rows()) + "x" +
                       std::to_string(m.cols()));
    }
    const int rows = m.rows();
    const int cols = m.cols();
    Matrix a = m;
    std::vector<std::vector<double>> reflectors;
    reflectors.reserve(static_cast<std::size_t>(cols));

    for (int k = 0; k < cols; ++k) {
        std::vector<double> v(static_cast<std::size_t>(rows), 0.0);
        double norm_x = 0.0;
        for (int i = k; i < rows; ++i) norm_x += a.at(i, k) * a.at(i, k);
        norm_x = std::sqrt(norm_x);
        if (norm_x > 0.0) {
            for (int i = k; i < rows; ++i) v[static_cast<std::size_t>(i)] = a.at(i, k);
            v[static_cast<std::size_t>(k)] += (a.at(k, k) >= 0.0 ? 1.0 : -1.0) * norm_x;
            const double vnorm = norm2(v);
            for (double& x : v) x /= vnorm;
            for (int j = k; j < cols; ++j) {
                double d = 0.0;
                for (int i = k; i < rows; ++i) d += v[static_cast<std::size_t>(i)] * a.at(i, j);
                for (int i = k; i < rows; ++i) a.at(i, j) -= 2.0 * d * v[static_cast<std::size_t>(i)];
            }
        }
        reflectors.push_back(std::move(v));
    }

    QrResult out;
    out.r = Matrix(cols, cols);
    for (int i = 0; i < cols; ++i)
        for (int j = i; j < cols; ++j) out.r.at(i, j) = a.at(i, j);

    // Q = H_1 ... H_n applied to the leading columns of the identity.
    out.q = Matrix(rows, cols);
    for (int j = 0; j < cols; ++j) {
        std::vector<double> x(static_cast<std::size_t>(rows), 0.0);
        x[static_cast<std::size_t>(j)] = 1.0;
        for (int k = cols - 1; k >= 0; --k) {
            const auto& v = reflectors[static_cast<std::size_t>(k)];
            double d = 0.0;
            for (int i = k; i < rows; ++i) d += v[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
            for (int i = k; i < rows; ++i) x[static_cast<std::size_t>(i)] -= 2.0 * d * v[static_cast<std::size_t>(i)];
        }
        out.q.set_column(j, x);
    }

    for (int j = 0; j < cols; ++j) {
        const double sign = fix_column_sign(out.q, j);
        if (sign < 0.0) {
            for (int c = 0; c < cols; ++c) out.r.at(j, c) = -out.r.at(j, c);
        }
    }
    return out;
}

SvdResult svd(const Matrix& m) {
    if (m.empty()) throw DimError("svd: empty matrix");
    if (m.rows() >= m.cols()) return jacobi_svd_tall(m);
    SvdResult t = jacobi_svd_tall(m.transpose());
    return SvdResult{std::move(t.v), std::move(t.s), std::move(t.u)};
}

int energy_count(const std::vector<double>& singular_values, double energy_threshold) {
    if (energy_threshold <= 0.0 || energy_threshold > 1.0) {
        throw DimError("energy_count: energy threshold must be in (0, 1]");
    }
    double total = 0.0;
    for (double s : singular_values) total += s * s;
    if (total <= 0.0) throw NumericalError("orthonormal_basis: no column space (zero matrix)");
    double acc = 0.0;
    int count = 0;
    for (double s : singular_values) {
        if (s <= 0.0) break;
        acc += s * s;
        ++count;
        if (acc >= energy_threshold * total) break;
    }
    return std::max(count, 1);
}

Matrix orthonormal_basis(const Matrix& m, double energy_threshold) {
    if (m.empty()) throw DimError("orthonormal_basis: empty matrix");
    SvdResult dec = svd(m);
    return first_columns(dec.u, energy_count(dec.s, energy_threshold));
}

std::vector<double> project(const Matrix& basis, const std::vector<double>& v) {
    if (basis.rows() != static_cast<int>(v.size())) {
        throw DimError("project: basis rows must match vector length");
    }
    std::vector<double> coeffs(static_cast<std::size_t>(basis.cols()), 0.0);
    for (int j = 0; j < basis.cols(); ++j) {
        double acc = 0.0;
        for (int i = 0; i < basis.rows(); ++i) acc += basis.at(i, j) * v[static_cast<std::size_t>(i)];
        coeffs[static_cast<std::size_t>(j)] = acc;
    }
    std::vector<double> out(v.size(), 0.0);
    for (int j = 0; j < basis.cols(); ++j) {
        const double c = coeffs[static_cast<std::size_t>(j)];
        for (int i = 0; i < basis.rows(); ++i) out[static_cast<std::size_t>(i)] += c * basis.at(i, j);
    }
    return out;
}

Matrix project_columns(const Matrix& basis, const Matrix& m) {
    if (basis.rows() != m.rows()) throw DimError("project_columns: row counts disagree");
    return multiply(basis, transpose_multiply(basis, m));
}

Matrix project_out_columns(const Matrix& basis, const Matrix& m) {
    return m - project_columns(basis, m);
}

} // namespace subgeo::linalg
