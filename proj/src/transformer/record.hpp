// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

// Activations saved by the forward pass for the backward pass.

#pragma once

#include <array>
#include <vector>

#include "lb/transformer.hpp"

namespace lb::detail {

template <typename T>
struct LayerRecord {
  BasicTensor<T> x_in;              // [t x d]
  std::vector<T> inv_rms1;          // [t]
  BasicTensor<T> xn1;               // [t x d]
  BasicTensor<T> q, k, v;           // [t x d]
  std::vector<T> probs;             // [t x H x t], zero above the diagonal
  BasicTensor<T> att;               // [t x d]
  BasicTensor<T> x_mid;             // [t x d]
  std::vector<T> inv_rms2;          // [t]
  BasicTensor<T> xn2;               // [t x d]
  BasicTensor<T> up;                // [t x d_ff], before the activation
  BasicTensor<T> act;               // [t x d_ff]
  std::array<BasicTensor<T>, 6> u;  // x * A^T per projection (empty when no adapter)
};

template <typename T>
struct ForwardRecord {
  std::vector<int> tokens;
  std::vector<LayerRecord<T>> layers;
  BasicTensor<T> h_final;     // [t x d]
  std::vector<T> inv_rms_f;   // [t]
  BasicTensor<T> hn;          // [t x d]
  BasicTensor<T> logits;      // [t x V]
};

}  // namespace lb::detail
