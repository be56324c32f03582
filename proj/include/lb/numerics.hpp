// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lb/tensor.hpp"

namespace lb {

// Standard matrix product. Throws ShapeError when inner dims disagree.
template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> transpose(const BasicTensor<T>& a);

// Row-wise softmax with per-row max subtraction.
template <typename T>
BasicTensor<T> softmax_rows(const BasicTensor<T>& x);

// In-place softmax of one row.
template <typename T>
void softmax_inplace(std::span<T> row);

// y = x / sqrt(mean(x^2) + eps) * gain, applied to every trailing d-vector.
template <typename T>
BasicTensor<T> rmsnorm(const BasicTensor<T>& x, const BasicTensor<T>& gain, T eps);

// Single-row RMSNorm; returns the inverse RMS so callers can cache it for the
// backward pass.
template <typename T>
T rmsnorm_row(std::span<const T> x, std::span<const T> gain, T eps, std::span<T> out);

// Backward of rmsnorm_row. Accumulates into dx and dgain.
template <typename T>
void rmsnorm_row_backward(std::span<const T> x, std::span<const T> gain, T inv_rms,
                          std::span<const T> dy, std::span<T> dx, std::span<T> dgain);

// Tanh-approximated GELU and its derivative.
template <typename T>
T gelu(T x);
template <typename T>
T gelu_grad(T x);

template <typename T>
struct CrossEntropyResult {
  double loss = 0;
  BasicTensor<T> dlogits;
  int count = 0;
};

// Mean negative log-likelihood over unmasked rows, with the gradient
// (softmax - onehot) / count on those rows and zero elsewhere. Throws
// DegenerateInputError when every row is masked out.
template <typename T>
CrossEntropyResult<T> cross_entropy_grad(const BasicTensor<T>& logits, std::span<const int> targets,
                                         std::span<const std::uint8_t> mask);

struct AdamHyper {
  float lr = 1e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// Moments for a list of parameters. step counts completed update calls.
struct AdamState {
  AdamHyper hyper;
  std::int64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

struct ParamSlot {
  Tensor* value = nullptr;
  const Tensor* grad = nullptr;
  bool trainable = true;
};

// Bias-corrected Adam. Moments are lazily created on the first call; after
// that the slot list must keep the same order and shapes.
void adam_step(std::span<const ParamSlot> params, AdamState& state);

}  // namespace lb
