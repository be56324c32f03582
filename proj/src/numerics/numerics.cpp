// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#include "lb/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lb/kernels.hpp"

namespace lb {

std::string dims_to_string(const Dims& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "x" : "") << dims[i];
  os << ']';
  return os.str();
}

template <typename T>
bool all_finite(const BasicTensor<T>& t) {
  return std::all_of(t.data.begin(), t.data.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw ShapeError("matmul expects matrices, got " + dims_to_string(a.dims) + " and " +
                     dims_to_string(b.dims));
  }
  if (a.dims[1] != b.dims[0]) {
    throw ShapeError("matmul inner dims disagree: " + dims_to_string(a.dims) + " x " +
                     dims_to_string(b.dims));
  }
  BasicTensor<T> c({a.dims[0], b.dims[1]});
  kernels::gemm(a.data.data(), b.data.data(), c.data.data(), a.dims[0], a.dims[1], b.dims[1]);
  return c;
}

template <typename T>
BasicTensor<T> transpose(const BasicTensor<T>& a) {
  if (a.rank() != 2) throw ShapeError("transpose expects a matrix, got " + dims_to_string(a.dims));
  BasicTensor<T> t({a.dims[1], a.dims[0]});
  for (int i = 0; i < a.dims[0]; ++i) {
    for (int j = 0; j < a.dims[1]; ++j) t.at(j, i) = a.at(i, j);
  }
  return t;
}

template <typename T>
void softmax_inplace(std::span<T> row) {
  T mx = row[0];
  for (T v : row) mx = std::max(mx, v);
  T sum = T(0);
  for (T& v : row) {
    v = std::exp(v - mx);
    sum += v;
  }
  const T inv = T(1) / sum;
  for (T& v : row) v *= inv;
}

template <typename T>
BasicTensor<T> softmax_rows(const BasicTensor<T>& x) {
  BasicTensor<T> y = x;
  const int rows = y.rows();
#pragma omp parallel for if (rows * y.cols() >= (1 << 16))
  for (int r = 0; r < rows; ++r) softmax_inplace(y.row(r));
  return y;
}

template <typename T>
T rmsnorm_row(std::span<const T> x, std::span<const T> gain, T eps, std::span<T> out) {
  T ss = T(0);
  for (T v : x) ss += v * v;
  const T inv = T(1) / std::sqrt(ss / static_cast<T>(x.size()) + eps);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * inv * gain[i];
  return inv;
}

template <typename T>
void rmsnorm_row_backward(std::span<const T> x, std::span<const T> gain, T inv_rms,
                          std::span<const T> dy, std::span<T> dx, std::span<T> dgain) {
  const std::size_t d = x.size();
  T dot = T(0);
  for (std::size_t i = 0; i < d; ++i) {
    dgain[i] += dy[i] * x[i] * inv_rms;
    dot += dy[i] * gain[i] * x[i];
  }
  const T coef = inv_rms * inv_rms * inv_rms * dot / static_cast<T>(d);
  for (std::size_t i = 0; i < d; ++i) dx[i] += inv_rms * gain[i] * dy[i] - coef * x[i];
}

template <typename T>
BasicTensor<T> rmsnorm(const BasicTensor<T>& x, const BasicTensor<T>& gain, T eps) {
  if (gain.rank() != 1 || x.cols() != gain.dims[0]) {
    throw ShapeError("rmsnorm gain " + dims_to_string(gain.dims) + " does not match input " +
                     dims_to_string(x.dims));
  }
  BasicTensor<T> y(x.dims);
  for (int r = 0; r < x.rows(); ++r) {
    rmsnorm_row<T>(x.row(r), std::span<const T>(gain.data), eps, y.row(r));
  }
  return y;
}

namespace {
template <typename T>
constexpr T kGeluC = T(0.7978845608028654);  // sqrt(2 / pi)
template <typename T>
constexpr T kGeluA = T(0.044715);
}  // namespace

template <typename T>
T gelu(T x) {
  return T(0.5) * x * (T(1) + std::tanh(kGeluC<T> * (x + kGeluA<T> * x * x * x)));
}

template <typename T>
T gelu_grad(T x) {
  const T th = std::tanh(kGeluC<T> * (x + kGeluA<T> * x * x * x));
  return T(0.5) * (T(1) + th) +
         T(0.5) * x * (T(1) - th * th) * kGeluC<T> * (T(1) + T(3) * kGeluA<T> * x * x);
}

template <typename T>
CrossEntropyResult<T> cross_entropy_grad(const BasicTensor<T>& logits, std::span<const int> targets,
                                         std::span<const std::uint8_t> mask) {
  const int rows = logits.rows();
  const int vocab = logits.cols();
  if (static_cast<int>(targets.size()) != rows || static_cast<int>(mask.size()) != rows) {
    throw ShapeError("cross_entropy_grad: targets/mask length must equal logits rows");
  }
  CrossEntropyResult<T> out;
  out.dlogits = BasicTensor<T>(logits.dims);
  for (int r = 0; r < rows; ++r) {
    if (!mask[r]) continue;
    if (targets[r] < 0 || targets[r] >= vocab) {
      throw InputError("cross_entropy_grad: target " + std::to_string(targets[r]) +
                       " outside vocabulary of " + std::to_string(vocab));
    }
    ++out.count;
  }
  if (out.count == 0) throw DegenerateInputError("cross_entropy_grad: every position is masked");

  // The reduction runs in double so the loss is smooth enough for 32-bit
  // finite-difference checks.
  const double inv_count = 1.0 / static_cast<double>(out.count);
  double total = 0.0;
  std::vector<double> e(static_cast<std::size_t>(vocab));
  for (int r = 0; r < rows; ++r) {
    if (!mask[r]) continue;
    auto src = logits.row(r);
    auto g = out.dlogits.row(r);
    const double mx = static_cast<double>(*std::max_element(src.begin(), src.end()));
    double sum = 0.0;
    for (int j = 0; j < vocab; ++j) {
      e[j] = std::exp(static_cast<double>(src[j]) - mx);
      sum += e[j];
    }
    total += std::log(sum) + mx - static_cast<double>(src[targets[r]]);
    const double scale = inv_count / sum;
    for (int j = 0; j < vocab; ++j) g[j] = static_cast<T>(e[j] * scale);
    g[targets[r]] = static_cast<T>(e[targets[r]] * scale - inv_count);
  }
  out.loss = total * inv_count;
  return out;
}

void adam_step(std::span<const ParamSlot> params, AdamState& state) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Tensor(p.value->dims));
      state.v.push_back(Tensor(p.value->dims));
    }
  }
  if (state.m.size() != params.size()) {
    throw ShapeError("adam_step: parameter list length changed between calls");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].value->dims != state.m[i].dims || params[i].grad->dims != params[i].value->dims) {
      throw ShapeError("adam_step: shape mismatch at parameter " + std::to_string(i) + ": " +
                       dims_to_string(params[i].value->dims) + " vs grad " +
                       dims_to_string(params[i].grad->dims));
    }
  }

  ++state.step;
  const auto& h = state.hyper;
  const double bc1 = 1.0 - std::pow(static_cast<double>(h.beta1), static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(static_cast<double>(h.beta2), static_cast<double>(state.step));
  const float step_size = static_cast<float>(h.lr / bc1);
  const float inv_sqrt_bc2 = static_cast<float>(1.0 / std::sqrt(bc2));

  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable) continue;
    float* w = params[i].value->data.data();
    const float* g = params[i].grad->data.data();
    float* m = state.m[i].data.data();
    float* v = state.v[i].data.data();
    const std::size_t n = params[i].value->size();
    for (std::size_t j = 0; j < n; ++j) {
      m[j] = h.beta1 * m[j] + (1.0f - h.beta1) * g[j];
      v[j] = h.beta2 * v[j] + (1.0f - h.beta2) * g[j] * g[j];
      w[j] -= step_size * m[j] / (std::sqrt(v[j]) * inv_sqrt_bc2 + h.eps);
    }
  }
}

#define LB_INSTANTIATE(T)                                                                          \
  template bool all_finite<T>(const BasicTensor<T>&);                                              \
  template BasicTensor<T> matmul<T>(const BasicTensor<T>&, const BasicTensor<T>&);                 \
  template BasicTensor<T> transpose<T>(const BasicTensor<T>&);                                     \
  template BasicTensor<T> softmax_rows<T>(const BasicTensor<T>&);                                  \
  template void softmax_inplace<T>(std::span<T>);                                                  \
  template BasicTensor<T> rmsnorm<T>(const BasicTensor<T>&, const BasicTensor<T>&, T);             \
  template T rmsnorm_row<T>(std::span<const T>, std::span<const T>, T, std::span<T>);              \
  template void rmsnorm_row_backward<T>(std::span<const T>, std::span<const T>, T,                 \
                                        std::span<const T>, std::span<T>, std::span<T>);           \
  template T gelu<T>(T);                                                                           \
  template T gelu_grad<T>(T);                                                                      \
  template CrossEntropyResult<T> cross_entropy_grad<T>(const BasicTensor<T>&, std::span<const int>, \
                                                       std::span<const std::uint8_t>);

LB_INSTANTIATE(float)
LB_INSTANTIATE(double)
#undef LB_INSTANTIATE

}  // namespace lb
