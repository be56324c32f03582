// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lb/kernels.hpp"

namespace lb::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace omp {
namespace {

// Below this many multiply-adds the fork/join costs more than it saves.
constexpr long kParallelWork = 1L << 16;

template <typename T>
inline void finish_row(const T* __restrict acc, T* __restrict out, int n, bool accumulate) {
  if (accumulate) {
    for (int j = 0; j < n; ++j) out[j] += acc[j];
  } else {
    std::memcpy(out, acc, sizeof(T) * static_cast<std::size_t>(n));
  }
}

// C is computed in register tiles of kTileRows rows by two SIMD vectors. Within
// a tile every output element still sums its k terms in ascending order
// starting from zero, so the result is bit-identical to the serial reference.
// Each panel of kTileRows rows of A (or of A^T, via the strides si, sp) is
// first copied into a contiguous [k x kTileRows] buffer.
constexpr int kTileRows = 4;

template <typename T>
struct Simd;
template <>
struct Simd<float> {
  typedef float type __attribute__((vector_size(16)));
};
template <>
struct Simd<double> {
  typedef double type __attribute__((vector_size(16)));
};

template <typename T>
constexpr int kLanes = 16 / sizeof(T);
template <typename T>
constexpr int kTileCols = 2 * kLanes<T>;

template <typename T, int R>
inline void tile_full(const T* __restrict panel, const T* __restrict b, T* __restrict c, int k, int n,
                      bool accumulate) {
  using V = typename Simd<T>::type;
  V acc[R][2] = {};
  for (int p = 0; p < k; ++p) {
    V b0, b1;
    const T* brow = b + static_cast<std::size_t>(p) * n;
    std::memcpy(&b0, brow, sizeof(V));
    std::memcpy(&b1, brow + kLanes<T>, sizeof(V));
    const T* ap = panel + static_cast<std::size_t>(p) * kTileRows;
    for (int r = 0; r < R; ++r) {
      acc[r][0] += ap[r] * b0;
      acc[r][1] += ap[r] * b1;
    }
  }
  for (int r = 0; r < R; ++r) {
    T out[kTileCols<T>];
    std::memcpy(out, acc[r], sizeof(out));
    finish_row(out, c + static_cast<std::size_t>(r) * n, kTileCols<T>, accumulate);
  }
}

template <typename T>
inline void tile_edge(const T* __restrict panel, const T* __restrict b, T* __restrict c, int rows, int cols, int k,
                      int n, bool accumulate) {
  T acc[kTileRows][kTileCols<T>] = {};
  for (int p = 0; p < k; ++p) {
    const T* brow = b + static_cast<std::size_t>(p) * n;
    const T* ap = panel + static_cast<std::size_t>(p) * kTileRows;
    for (int r = 0; r < rows; ++r) {
      for (int jj = 0; jj < cols; ++jj) acc[r][jj] += ap[r] * brow[jj];
    }
  }
  for (int r = 0; r < rows; ++r) finish_row(acc[r], c + static_cast<std::size_t>(r) * n, cols, accumulate);
}

template <typename T>
void gemm_strided(const T* a, std::size_t si, std::size_t sp, const T* b, T* c, int m, int k, int n,
                  bool accumulate) {
  const long work = static_cast<long>(m) * k * n;
  const int blocks = (m + kTileRows - 1) / kTileRows;
#pragma omp parallel if (work >= kParallelWork)
  {
    thread_local std::vector<T> panel;
    panel.assign(static_cast<std::size_t>(k) * kTileRows, T(0));
#pragma omp for schedule(static)
    for (int blk = 0; blk < blocks; ++blk) {
      const int i0 = blk * kTileRows;
      const int rows = std::min(kTileRows, m - i0);
      for (int p = 0; p < k; ++p) {
        for (int r = 0; r < rows; ++r) panel[static_cast<std::size_t>(p) * kTileRows + r] = a[(i0 + r) * si + p * sp];
      }
      T* cblk = c + static_cast<std::size_t>(i0) * n;
      for (int j0 = 0; j0 < n; j0 += kTileCols<T>) {
        const int cols = std::min(kTileCols<T>, n - j0);
        if (cols == kTileCols<T>) {
          switch (rows) {
            case 4: tile_full<T, 4>(panel.data(), b + j0, cblk + j0, k, n, accumulate); break;
            case 3: tile_full<T, 3>(panel.data(), b + j0, cblk + j0, k, n, accumulate); break;
            case 2: tile_full<T, 2>(panel.data(), b + j0, cblk + j0, k, n, accumulate); break;
            default: tile_full<T, 1>(panel.data(), b + j0, cblk + j0, k, n, accumulate); break;
          }
        } else {
          tile_edge<T>(panel.data(), b + j0, cblk + j0, rows, cols, k, n, accumulate);
        }
      }
    }
  }
}

}  // namespace

template <typename T>
void gemm(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
  gemm_strided(a, k, 1, b, c, m, k, n, accumulate);
}

template <typename T>
void gemm_tn(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
  gemm_strided(a, 1, m, b, c, m, k, n, accumulate);
}

template <typename T>
void gemm_nt(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
  // Transpose B once so the inner loop streams contiguous memory.
  std::vector<T> bt(static_cast<std::size_t>(k) * n);
  for (int j = 0; j < n; ++j) {
    for (int p = 0; p < k; ++p) bt[static_cast<std::size_t>(p) * n + j] = b[static_cast<std::size_t>(j) * k + p];
  }
  gemm(a, bt.data(), c, m, k, n, accumulate);
}

#define LB_INSTANTIATE(T)                                                        \
  template void gemm<T>(const T*, const T*, T*, int, int, int, bool);    \
  template void gemm_tn<T>(const T*, const T*, T*, int, int, int, bool); \
  template void gemm_nt<T>(const T*, const T*, T*, int, int, int, bool);

LB_INSTANTIATE(float)
LB_INSTANTIATE(double)
#undef LB_INSTANTIATE

}  // namespace omp
}  // namespace lb::kernels
