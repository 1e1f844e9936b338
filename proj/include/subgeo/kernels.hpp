// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense row-major kernels used by the matrix layer.
//
// Every kernel exists twice: a serial reference implementation under
// kernels::ref and an OpenMP version under kernels::par that partitions
// output rows across threads. Both walk the reduction index in the same
// order, so for identical inputs the two paths produce bit-identical
// output regardless of thread count. The unqualified entry points
// dispatch on problem size.

namespace subgeo::kernels {

// Problems below this many multiply-adds stay on the serial path.
inline constexpr long long kParallelFlopThreshold = 1LL << 16;

namespace ref {

// c(m x n) = a(m x k) * b(k x n)
void matmul(const double* a, const double* b, double* c, int m, int k, int n);

// c(m x n) = a^T * b with a(k x m), b(k x n)
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n);

// c(m x n) = a * b^T with a(m x k), b(n x k)
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n);

} // namespace ref

namespace par {

void matmul(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n);

} // namespace par

void matmul(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n);

} // namespace subgeo::kernels
