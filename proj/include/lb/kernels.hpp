// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

// Dense matrix kernels.
//
// Two implementations are kept side by side:
//   serial::  straightforward dot-product loops, the reference used by tests.
//   omp::     row-parallel, cache-friendly (i-k-j) loops used everywhere else.
//
// Every output element is accumulated over the inner index in ascending order
// starting from zero in both implementations, so they agree bit for bit
// regardless of thread count. When `accumulate` is set the finished sum is
// added to the existing output value.

#pragma once

#include <cstddef>

namespace lb::kernels {

namespace serial {

// C[m x n] (+)= A[m x k] * B[k x n]
template <typename T>
void gemm(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate);

// C[m x n] (+)= A[k x m]^T * B[k x n]
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate);

// C[m x n] (+)= A[m x k] * B[n x k]^T
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate);

}  // namespace serial

namespace omp {

template <typename T>
void gemm(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate);

template <typename T>
void gemm_tn(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate);

template <typename T>
void gemm_nt(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate);

}  // namespace omp

// Number of threads the omp kernels may use (1 when built without OpenMP).
int max_threads();

// Default entry points used by the model code.
template <typename T>
inline void gemm(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false) {
  omp::gemm(a, b, c, m, k, n, accumulate);
}

template <typename T>
inline void gemm_tn(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false) {
  omp::gemm_tn(a, b, c, m, k, n, accumulate);
}

template <typename T>
inline void gemm_nt(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false) {
  omp::gemm_nt(a, b, c, m, k, n, accumulate);
}

}  // namespace lb::kernels
