// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

namespace subgeo::linalg {

/// Dense real matrix, row-major. Constructors reject NaN/Inf entries and
/// non-positive dimensions; a default-constructed Matrix is the empty 0x0
/// matrix used as a "not present" placeholder.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols); // zero-filled
    Matrix(int rows, int cols, std::vector<double> entries);

    static Matrix identity(int n);

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

    double& at(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
    double at(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    const std::vector<double>& entries() const noexcept { return data_; }

    Matrix transpose() const;
    double frobenius_norm() const;
    double max_abs() const;

    std::vector<double> column(int j) const;
    void set_column(int j, const std::vector<double>& v);

    /// this += alpha * other
    Matrix& add_scaled(const Matrix& other, double alpha);
    Matrix& operator*=(double s);

    friend Matrix operator+(const Matrix& a, const Matrix& b);
    friend Matrix operator-(const Matrix& a, const Matrix& b);
    friend Matrix operator*(const Matrix& a, double s);

    friend bool operator==(const Matrix& a, const Matrix& b) = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

/// a * b
Matrix multiply(const Matrix& a, const Matrix& b);
/// a^T * b
Matrix transpose_multiply(const Matrix& a, const Matrix& b);
/// a * b^T
Matrix multiply_transpose(const Matrix& a, const Matrix& b);

/// Columns of a followed by columns of b.
Matrix hconcat(const Matrix& a, const Matrix& b);

/// Leading column block.
Matrix first_columns(const Matrix& a, int count);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& v);

} // namespace subgeo::linalg
