// SPDX-License-Identifier: Apache-2.0
#include "subgeo/kernels.hpp"

#include <cstring>

namespace subgeo::kernels {

namespace {

// Row i of c for plain matmul, ikj order: the k-loop is the outer
// accumulation so every c element is summed in ascending-k order.
inline void matmul_row(const double* a, const double* b, double* c, int i, int k, int n) {
    double* crow = c + static_cast<long long>(i) * n;
    for (int j = 0; j < n; ++j) crow[j] = 0.0;
    const double* arow = a + static_cast<long long>(i) * k;
    for (int kk = 0; kk < k; ++kk) {
        const double aik = arow[kk];
        const double* brow = b + static_cast<long long>(kk) * n;
        for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
}

inline void matmul_tn_row(const double* a, const double* b, double* c, int i, int k, int m, int n) {
    double* crow = c + static_cast<long long>(i) * n;
    for (int j = 0; j < n; ++j) crow[j] = 0.0;
    for (int kk = 0; kk < k; ++kk) {
        const double aki = a[static_cast<long long>(kk) * m + i];
        const double* brow = b + static_cast<long long>(kk) * n;
        for (int j = 0; j < n; ++j) crow[j] += aki * brow[j];
    }
}

inline void matmul_nt_row(const double* a, const double* b, double* c, int i, int k, int n) {
    double* crow = c + static_cast<long long>(i) * n;
    const double* arow = a + static_cast<long long>(i) * k;
    for (int j = 0; j < n; ++j) {
        const double* brow = b + static_cast<long long>(j) * k;
        double acc = 0.0;
        for (int kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
        crow[j] = acc;
    }
}

} // namespace

namespace ref {

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) matmul_row(a, b, c, i, k, n);
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) matmul_tn_row(a, b, c, i, k, m, n);
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) matmul_nt_row(a, b, c, i, k, n);
}

} // namespace ref

namespace par {

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) matmul_row(a, b, c, i, k, n);
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) matmul_tn_row(a, b, c, i, k, m, n);
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) matmul_nt_row(a, b, c, i, k, n);
}

} // namespace par

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
    const long long flops = static_cast<long long>(m) * k * n;
    if (flops >= kParallelFlopThreshold) {
        par::matmul(a, b, c, m, k, n);
    } else {
        ref::matmul(a, b, c, m, k, n);
    }
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n) {
    const long long flops = static_cast<long long>(m) * k * n;
    if (flops >= kParallelFlopThreshold) {
        par::matmul_tn(a, b, c, m, k, n);
    } else {
        ref::matmul_tn(a, b, c, m, k, n);
    }
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n) {
    const long long flops = static_cast<long long>(m) * k * n;
    if (flops >= kParallelFlopThreshold) {
        par::matmul_nt(a, b, c, m, k, n);
    } else {
        ref::matmul_nt(a, b, c, m, k, n);
    }
}

} // namespace subgeo::kernels
