// SPDX-License-Identifier: Apache-2.0
//
// Data-parallel kernels behind all network math. Each kernel comes in a
// serial reference form and an OpenMP form that share the same per-row body,
// so results are bit-identical for any thread count: every output element is
// produced by one thread with a fixed-order inner reduction.
#pragma once

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "avflow/errors.hpp"
#include "avflow/mat.hpp"

namespace avflow::kernels {

inline void set_threads(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace detail {

// The row bodies are noinline so the serial and OpenMP drivers execute the
// exact same machine code; inlining into different call sites can change
// FMA contraction and break bitwise serial/parallel equality.
#if defined(__GNUC__) || defined(__clang__)
#define AVFLOW_NOINLINE __attribute__((noinline))
#else
#define AVFLOW_NOINLINE
#endif

// C[i,:] (+)= A[i,:] * B   with A (m,k), B (k,n) row-major.
template <typename T>
AVFLOW_NOINLINE void row_nn(int i, int k, int n, const T* A, int lda, const T* B, int ldb, T* C,
                            int ldc, bool accumulate) {
    T* c = C + static_cast<size_t>(i) * ldc;
    if (!accumulate) std::fill(c, c + n, T(0));
    const T* a = A + static_cast<size_t>(i) * lda;
    for (int p = 0; p < k; ++p) {
        const T ap = a[p];
        const T* b = B + static_cast<size_t>(p) * ldb;
        for (int j = 0; j < n; ++j) c[j] += ap * b[j];
    }
}

// Eight-lane dot product with a fixed summation tree.
template <typename T>
AVFLOW_NOINLINE T dot8(const T* a, const T* b, int k) {
    T s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, s5 = 0, s6 = 0, s7 = 0;
    int p = 0;
    for (; p + 8 <= k; p += 8) {
        s0 += a[p] * b[p];
        s1 += a[p + 1] * b[p + 1];
        s2 += a[p + 2] * b[p + 2];
        s3 += a[p + 3] * b[p + 3];
        s4 += a[p + 4] * b[p + 4];
        s5 += a[p + 5] * b[p + 5];
        s6 += a[p + 6] * b[p + 6];
        s7 += a[p + 7] * b[p + 7];
    }
    T s = ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7));
    for (; p < k; ++p) s += a[p] * b[p];
    return s;
}

// C[i,:] (+)= A[i,:] * B^T  with A (m,k), B (n,k).
template <typename T>
AVFLOW_NOINLINE void row_nt(int i, int k, int n, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
                   bool accumulate) {
    const T* a = A + static_cast<size_t>(i) * lda;
    T* c = C + static_cast<size_t>(i) * ldc;
    for (int j = 0; j < n; ++j) {
        T s = dot8(a, B + static_cast<size_t>(j) * ldb, k);
        c[j] = accumulate ? c[j] + s : s;
    }
}

// C[j,:] (+)= sum_i A[i,j] * B[i,:]  with A (m,k) indexed by column j, B (m,n).
template <typename T>
AVFLOW_NOINLINE void row_tn(int j, int m, int n, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
                   bool accumulate) {
    T* c = C + static_cast<size_t>(j) * ldc;
    if (!accumulate) std::fill(c, c + n, T(0));
    for (int i = 0; i < m; ++i) {
        const T aij = A[static_cast<size_t>(i) * lda + j];
        const T* b = B + static_cast<size_t>(i) * ldb;
        for (int p = 0; p < n; ++p) c[p] += aij * b[p];
    }
}

template <typename T>
AVFLOW_NOINLINE void row_softmax(T* x, int n) {
    T mx = x[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, x[j]);
    T sum = 0;
    for (int j = 0; j < n; ++j) {
        x[j] = std::exp(x[j] - mx);
        sum += x[j];
    }
    const T inv = T(1) / sum;
    for (int j = 0; j < n; ++j) x[j] *= inv;
}

}  // namespace detail

namespace serial {

/// C (m,n) (+)= A (m,k) * B (k,n). Reference implementation.
template <typename T>
void matmul_nn(int m, int k, int n, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
               bool accumulate = false) {
    for (int i = 0; i < m; ++i) detail::row_nn(i, k, n, A, lda, B, ldb, C, ldc, accumulate);
}

/// C (m,n) (+)= A (m,k) * B^T with B (n,k).
template <typename T>
void matmul_nt(int m, int k, int n, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
               bool accumulate = false) {
    for (int i = 0; i < m; ++i) detail::row_nt(i, k, n, A, lda, B, ldb, C, ldc, accumulate);
}

/// C (k,n) (+)= A^T * B with A (m,k), B (m,n).
template <typename T>
void matmul_tn(int m, int k, int n, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
               bool accumulate = false) {
    for (int j = 0; j < k; ++j) detail::row_tn(j, m, n, A, lda, B, ldb, C, ldc, accumulate);
}

template <typename T>
void softmax_rows(Mat<T>& x) {
    for (int i = 0; i < x.rows; ++i) detail::row_softmax(x.row(i), x.cols);
}

template <typename T>
void matmul_nn(const Mat<T>& a, const Mat<T>& b, Mat<T>& c, bool accumulate = false) {
    matmul_nn(a.rows, a.cols, b.cols, a.v.data(), a.cols, b.v.data(), b.cols, c.v.data(), c.cols,
              accumulate);
}
template <typename T>
void matmul_nt(const Mat<T>& a, const Mat<T>& b, Mat<T>& c, bool accumulate = false) {
    matmul_nt(a.rows, a.cols, b.rows, a.v.data(), a.cols, b.v.data(), b.cols, c.v.data(), c.cols,
              accumulate);
}
template <typename T>
void matmul_tn(const Mat<T>& a, const Mat<T>& b, Mat<T>& c, bool accumulate = false) {
    matmul_tn(a.rows, a.cols, b.cols, a.v.data(), a.cols, b.v.data(), b.cols, c.v.data(), c.cols,
              accumulate);
}

}  // namespace serial

namespace omp {

template <typename T>
void matmul_nn(int m, int k, int n, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
               bool accumulate = false) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) detail::row_nn(i, k, n, A, lda, B, ldb, C, ldc, accumulate);
}

template <typename T>
void matmul_nt(int m, int k, int n, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
               bool accumulate = false) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) detail::row_nt(i, k, n, A, lda, B, ldb, C, ldc, accumulate);
}

template <typename T>
void matmul_tn(int m, int k, int n, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
               bool accumulate = false) {
#pragma omp parallel for schedule(static)
    for (int j = 0; j < k; ++j) detail::row_tn(j, m, n, A, lda, B, ldb, C, ldc, accumulate);
}

template <typename T>
void softmax_rows(Mat<T>& x) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < x.rows; ++i) detail::row_softmax(x.row(i), x.cols);
}

template <typename T>
void matmul_nn(const Mat<T>& a, const Mat<T>& b, Mat<T>& c, bool accumulate = false) {
    matmul_nn(a.rows, a.cols, b.cols, a.v.data(), a.cols, b.v.data(), b.cols, c.v.data(), c.cols,
              accumulate);
}
template <typename T>
void matmul_nt(const Mat<T>& a, const Mat<T>& b, Mat<T>& c, bool accumulate = false) {
    matmul_nt(a.rows, a.cols, b.rows, a.v.data(), a.cols, b.v.data(), b.cols, c.v.data(), c.cols,
              accumulate);
}
template <typename T>
void matmul_tn(const Mat<T>& a, const Mat<T>& b, Mat<T>& c, bool accumulate = false) {
    matmul_tn(a.rows, a.cols, b.cols, a.v.data(), a.cols, b.v.data(), b.cols, c.v.data(), c.cols,
              accumulate);
}

}  // namespace omp

// Dispatch points. Small problems stay serial to avoid fork overhead.

template <typename T>
void matmul_nn(int m, int k, int n, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
               bool accumulate = false) {
    if (static_cast<long long>(m) * k * n < 16384)
        serial::matmul_nn(m, k, n, A, lda, B, ldb, C, ldc, accumulate);
    else
        omp::matmul_nn(m, k, n, A, lda, B, ldb, C, ldc, accumulate);
}

template <typename T>
void matmul_nt(int m, int k, int n, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
               bool accumulate = false) {
    if (static_cast<long long>(m) * k * n < 16384)
        serial::matmul_nt(m, k, n, A, lda, B, ldb, C, ldc, accumulate);
    else
        omp::matmul_nt(m, k, n, A, lda, B, ldb, C, ldc, accumulate);
}

template <typename T>
void matmul_tn(int m, int k, int n, const T* A, int lda, const T* B, int ldb, T* C, int ldc,
               bool accumulate = false) {
    if (static_cast<long long>(m) * k * n < 16384)
        serial::matmul_tn(m, k, n, A, lda, B, ldb, C, ldc, accumulate);
    else
        omp::matmul_tn(m, k, n, A, lda, B, ldb, C, ldc, accumulate);
}

template <typename T>
void softmax_rows(Mat<T>& x) {
    if (static_cast<long long>(x.rows) * x.cols < 8192)
        serial::softmax_rows(x);
    else
        omp::softmax_rows(x);
}

// Mat convenience wrappers.

template <typename T>
void matmul_nn(const Mat<T>& a, const Mat<T>& b, Mat<T>& c, bool accumulate = false) {
    check_contract(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols, "matmul_nn: shape mismatch");
    matmul_nn(a.rows, a.cols, b.cols, a.v.data(), a.cols, b.v.data(), b.cols, c.v.data(), c.cols, accumulate);
}

template <typename T>
void matmul_nt(const Mat<T>& a, const Mat<T>& b, Mat<T>& c, bool accumulate = false) {
    check_contract(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows, "matmul_nt: shape mismatch");
    matmul_nt(a.rows, a.cols, b.rows, a.v.data(), a.cols, b.v.data(), b.cols, c.v.data(), c.cols, accumulate);
}

template <typename T>
void matmul_tn(const Mat<T>& a, const Mat<T>& b, Mat<T>& c, bool accumulate = false) {
    check_contract(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols, "matmul_tn: shape mismatch");
    matmul_tn(a.rows, a.cols, b.cols, a.v.data(), a.cols, b.v.data(), b.cols, c.v.data(), c.cols, accumulate);
}

template <typename T>
void add_row_inplace(Mat<T>& m, const T* row) {
    for (int i = 0; i < m.rows; ++i) {
        T* r = m.row(i);
        for (int j = 0; j < m.cols; ++j) r[j] += row[j];
    }
}

/// grad[0,:] += column sums of dy; the usual bias gradient.
template <typename T>
void colsum_accum(const Mat<T>& dy, T* out) {
    for (int i = 0; i < dy.rows; ++i) {
        const T* r = dy.row(i);
        for (int j = 0; j < dy.cols; ++j) out[j] += r[j];
    }
}

/// Deterministic sum of squares: per-row partials combined in row order.
template <typename T>
double sumsq(const Mat<T>& m) {
    double total = 0.0;
    for (int i = 0; i < m.rows; ++i) {
        const T* r = m.row(i);
        double s = 0.0;
        for (int j = 0; j < m.cols; ++j) s += static_cast<double>(r[j]) * static_cast<double>(r[j]);
        total += s;
    }
    return total;
}

}  // namespace avflow::kernels
