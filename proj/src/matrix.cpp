// SPDX-License-Identifier: Apache-2.0
#include "subgeo/matrix.hpp"

#include <cmath>
#include <string>

#include "subgeo/errors.hpp"
#include "subgeo/kernels.hpp"

namespace subgeo::linalg {

namespace {

void check_dims(int rows, int cols) {
    if (rows <= 0 || cols <= 0) {
        throw DimError("matrix dimensions must be positive, got " + std::to_string(rows) + "x" +
                       std::to_string(cols));
    }
}

} // namespace

Matrix::Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
    check_dims(rows, cols);
    data_.assign(static_cast<std::size_t>(rows) * cols, 0.0);
}

Matrix::Matrix(int rows, int cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    check_dims(rows, cols);
    if (data_.size() != static_cast<std::size_t>(rows) * cols) {
        throw DimError("entry count " + std::to_string(data_.size()) + " does not match " +
                       std::to_string(rows) + "x" + std::to_string(cols));
    }
    for (double x : data_) {
        if (!std::isfinite(x)) throw DimError("matrix entries must be finite");
    }
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) t.at(j, i) = at(i, j);
    return t;
}

double Matrix::frobenius_norm() const {
    double acc = 0.0;
    for (double x : data_) acc += x * x;
    return std::sqrt(acc);
}

double Matrix::max_abs() const {
    double m = 0.0;
    for (double x : data_) m = std::max(m, std::abs(x));
    return m;
}

std::vector<double> Matrix::column(int j) const {
    std::vector<double> v(static_cast<std::size_t>(rows_));
    for (int i = 0; i < rows_; ++i) v[static_cast<std::size_t>(i)] = at(i, j);
    return v;
}

void Matrix::set_column(int j, const std::vector<double>& v) {
    if (static_cast<int>(v.size()) != rows_) throw DimError("column length mismatch");
    for (int i = 0; i < rows_; ++i) at(i, j) = v[static_cast<std::size_t>(i)];
}

Matrix& Matrix::add_scaled(const Matrix& other, double alpha) {
    if (other.rows_ != rows_ || other.cols_ != cols_) throw DimError("add_scaled shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += alpha * other.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& x : data_) x *= s;
    return *this;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw DimError("operator+ shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.data_.size(); ++i) c.data_[i] += b.data_[i];
    return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw DimError("operator- shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.data_.size(); ++i) c.data_[i] -= b.data_[i];
    return c;
}

Matrix operator*(const Matrix& a, double s) {
    Matrix c = a;
    c *= s;
    return c;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw DimError("multiply: inner dimensions disagree");
    Matrix c(a.rows(), b.cols());
    kernels::matmul(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
    return c;
}

Matrix transpose_multiply(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw DimError("transpose_multiply: row counts disagree");
    Matrix c(a.cols(), b.cols());
    kernels::matmul_tn(a.data(), b.data(), c.data(), a.cols(), a.rows(), b.cols());
    return c;
}

Matrix multiply_transpose(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw DimError("multiply_transpose: column counts disagree");
    Matrix c(a.rows(), b.rows());
    kernels::matmul_nt(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.rows());
    return c;
}

Matrix hconcat(const Matrix& a, const Matrix& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    if (a.rows() != b.rows()) throw DimError("hconcat: row counts disagree");
    Matrix c(a.rows(), a.cols() + b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) c.at(i, j) = a.at(i, j);
        for (int j = 0; j < b.cols(); ++j) c.at(i, a.cols() + j) = b.at(i, j);
    }
    return c;
}

Matrix first_columns(const Matrix& a, int count) {
    if (count < 1 || count > a.cols()) throw DimError("first_columns: count out of range");
    Matrix c(a.rows(), count);
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < count; ++j) c.at(i, j) = a.at(i, j);
    return c;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DimError("dot: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

} // namespace subgeo::linalg
