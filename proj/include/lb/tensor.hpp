// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lb/error.hpp"

namespace lb {

using Dims = std::vector<int>;

inline std::size_t dims_product(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string dims_to_string(const Dims& dims);

// Dense row-major tensor. float is the working precision; double is used by
// the gradient-check mode only.
template <typename T>
struct BasicTensor {
  using value_type = T;

  Dims dims;
  std::vector<T> data;

  BasicTensor() = default;
  explicit BasicTensor(Dims d) : dims(std::move(d)), data(dims_product(dims)) {
    for (int n : dims) {
      if (n <= 0) throw ShapeError("tensor dims must be positive, got " + dims_to_string(dims));
    }
  }
  BasicTensor(Dims d, std::vector<T> values) : dims(std::move(d)), data(std::move(values)) {
    for (int n : dims) {
      if (n <= 0) throw ShapeError("tensor dims must be positive, got " + dims_to_string(dims));
    }
    if (dims_product(dims) != data.size()) {
      throw ShapeError("tensor data length " + std::to_string(data.size()) +
                       " does not match dims " + dims_to_string(dims));
    }
  }

  static BasicTensor zeros(Dims d) { return BasicTensor(std::move(d)); }
  static BasicTensor filled(Dims d, T value) {
    BasicTensor t(std::move(d));
    std::fill(t.data.begin(), t.data.end(), value);
    return t;
  }
  static BasicTensor identity(int n) {
    BasicTensor t({n, n});
    for (int i = 0; i < n; ++i) t.data[static_cast<std::size_t>(i) * n + i] = T(1);
    return t;
  }

  int rank() const { return static_cast<int>(dims.size()); }
  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  // Matrix view helpers; a rank-1 tensor is treated as a single row.
  int rows() const { return dims.size() < 2 ? 1 : static_cast<int>(data.size() / dims.back()); }
  int cols() const { return dims.empty() ? 0 : dims.back(); }

  T& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
  const T& at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }

  std::span<T> row(int r) { return {data.data() + static_cast<std::size_t>(r) * cols(), static_cast<std::size_t>(cols())}; }
  std::span<const T> row(int r) const {
    return {data.data() + static_cast<std::size_t>(r) * cols(), static_cast<std::size_t>(cols())};
  }

  void fill(T value) { std::fill(data.begin(), data.end(), value); }

  bool operator==(const BasicTensor&) const = default;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

template <typename To, typename From>
BasicTensor<To> tensor_cast(const BasicTensor<From>& t) {
  BasicTensor<To> out;
  out.dims = t.dims;
  out.data.assign(t.data.begin(), t.data.end());
  return out;
}

template <typename T>
bool all_finite(const BasicTensor<T>& t);

template <typename T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* what) {
  if (a.dims != b.dims) {
    throw ShapeError(std::string(what) + ": shape " + dims_to_string(a.dims) + " vs " +
                     dims_to_string(b.dims));
  }
}

}  // namespace lb
