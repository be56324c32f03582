// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#include "lb/kernels.hpp"

namespace lb::kernels::serial {

template <typename T>
void gemm(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      T sum = T(0);
      for (int p = 0; p < k; ++p) sum += a[static_cast<std::size_t>(i) * k + p] * b[static_cast<std::size_t>(p) * n + j];
      T& out = c[static_cast<std::size_t>(i) * n + j];
      out = accumulate ? out + sum : sum;
    }
  }
}

template <typename T>
void gemm_tn(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      T sum = T(0);
      for (int p = 0; p < k; ++p) sum += a[static_cast<std::size_t>(p) * m + i] * b[static_cast<std::size_t>(p) * n + j];
      T& out = c[static_cast<std::size_t>(i) * n + j];
      out = accumulate ? out + sum : sum;
    }
  }
}

template <typename T>
void gemm_nt(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      T sum = T(0);
      for (int p = 0; p < k; ++p) sum += a[static_cast<std::size_t>(i) * k + p] * b[static_cast<std::size_t>(j) * k + p];
      T& out = c[static_cast<std::size_t>(i) * n + j];
      out = accumulate ? out + sum : sum;
    }
  }
}

#define LB_INSTANTIATE(T)                                                        \
  template void gemm<T>(const T*, const T*, T*, int, int, int, bool);    \
  template void gemm_tn<T>(const T*, const T*, T*, int, int, int, bool); \
  template void gemm_nt<T>(const T*, const T*, T*, int, int, int, bool);

LB_INSTANTIATE(float)
LB_INSTANTIATE(double)
#undef LB_INSTANTIATE

}  // namespace lb::kernels::serial
