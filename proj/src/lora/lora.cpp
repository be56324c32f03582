// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#include "lb/lora.hpp"

#include <algorithm>
#include <random>

#include "lb/kernels.hpp"
#include "lb/numerics.hpp"

namespace lb {

template <typename T>
std::size_t BasicLoraSet<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [key, ad] : adapters) n += ad.a.size() + ad.b.size();
  return n;
}

LayerMask mask_all(int n_layers, bool active) { return LayerMask(static_cast<std::size_t>(n_layers), active ? 1 : 0); }

LayerMask mask_bottom(int n_layers, int k) {
  LayerMask m(static_cast<std::size_t>(n_layers), 0);
  for (int l = 0; l < std::min(k, n_layers); ++l) m[l] = 1;
  return m;
}

LoraSet init_adapters(const ModelConfig& cfg, const std::vector<Proj>& targets, int rank, float alpha,
                      std::uint64_t seed, int max_layer) {
  cfg.validate();
  if (targets.empty()) throw ConfigError("init_adapters: targets must not be empty");
  if (rank < 1) throw ConfigError("init_adapters: rank must be >= 1");
  if (max_layer < 0) max_layer = cfg.n_layers;
  if (max_layer > cfg.n_layers) throw ConfigError("init_adapters: max_layer exceeds n_layers");

  std::vector<Proj> sorted = targets;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (Proj p : sorted) {
    auto [din, dout] = proj_shape(cfg, p);
    if (rank > std::min(din, dout)) {
      throw ConfigError("init_adapters: rank " + std::to_string(rank) + " exceeds min dims of projection " +
                        std::string(proj_name(p)));
    }
  }

  LoraSet set;
  set.n_layers = cfg.n_layers;
  set.rank = rank;
  set.alpha = alpha;
  set.targets = sorted;
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 0.02f);
  for (int layer = 1; layer <= max_layer; ++layer) {
    for (Proj p : sorted) {
      auto [din, dout] = proj_shape(cfg, p);
      LoraAdapter ad{Tensor({rank, din}), Tensor({dout, rank}), rank, alpha};
      for (float& v : ad.a.data) v = normal(rng);
      set.adapters.emplace(AdapterKey{layer, p}, std::move(ad));
    }
  }
  return set;
}

template <typename T>
void adapted_projection(const BasicTensor<T>& w, const BasicLoraAdapter<T>* adapter, const BasicTensor<T>& x,
                        BasicTensor<T>& y, BasicTensor<T>* u) {
  const int n = x.rows();
  const int din = x.cols();
  if (w.rank() != 2 || w.dims[0] != din) {
    throw ShapeError("adapted_projection: input " + dims_to_string(x.dims) + " vs weight " + dims_to_string(w.dims));
  }
  const int dout = w.dims[1];
  if (y.dims != Dims{n, dout}) y = BasicTensor<T>({n, dout});
  kernels::gemm(x.data.data(), w.data.data(), y.data.data(), n, din, dout);
  if (adapter == nullptr) return;

  const int r = adapter->rank;
  if (adapter->a.dims != Dims{r, din} || adapter->b.dims != Dims{dout, r}) {
    throw ShapeError("adapted_projection: adapter A " + dims_to_string(adapter->a.dims) + " B " +
                     dims_to_string(adapter->b.dims) + " do not fit weight " + dims_to_string(w.dims));
  }
  BasicTensor<T> local_u;
  BasicTensor<T>& xa = u ? *u : local_u;
  if (xa.dims != Dims{n, r}) xa = BasicTensor<T>({n, r});
  kernels::gemm_nt(x.data.data(), adapter->a.data.data(), xa.data.data(), n, din, r);
  BasicTensor<T> delta({n, dout});
  kernels::gemm_nt(xa.data.data(), adapter->b.data.data(), delta.data.data(), n, r, dout);
  const T s = adapter->scale();
  for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += s * delta.data[i];
}

template <typename T>
BasicLoraSet<T> drop_above(const BasicLoraSet<T>& set, int k) {
  if (k < 0 || k > set.n_layers) {
    throw InputError("drop_above: K=" + std::to_string(k) + " outside [0, " + std::to_string(set.n_layers) + "]");
  }
  BasicLoraSet<T> out;
  out.n_layers = set.n_layers;
  out.rank = set.rank;
  out.alpha = set.alpha;
  out.targets = set.targets;
  out.fingerprint = set.fingerprint;
  for (const auto& [key, ad] : set.adapters) {
    if (key.layer <= k) out.adapters.emplace(key, ad);
  }
  return out;
}

template <typename T>
BasicTensor<T> materialize_delta(const BasicLoraAdapter<T>& adapter) {
  BasicTensor<T> delta = matmul(adapter.b, adapter.a);
  const T s = adapter.scale();
  for (T& v : delta.data) v *= s;
  return delta;
}

BaseWeights merge(const BaseWeights& base, const LoraSet& set, const std::string& base_fingerprint) {
  if (!set.fingerprint.empty() && !base_fingerprint.empty() && set.fingerprint != base_fingerprint) {
    throw CompatibilityError("merge: adapter fingerprint " + set.fingerprint + " does not match base " +
                             base_fingerprint);
  }
  if (!set.empty() && set.n_layers != base.config.n_layers) {
    throw CompatibilityError("merge: adapter set covers " + std::to_string(set.n_layers) + " layers, base has " +
                             std::to_string(base.config.n_layers));
  }
  BaseWeights out = base;
  for (const auto& [key, ad] : set.adapters) {
    Tensor& w = out.layers.at(key.layer - 1).proj(key.proj);
    const Tensor delta = materialize_delta(ad);  // [d_out x d_in]
    if (delta.dims[0] != w.dims[1] || delta.dims[1] != w.dims[0]) {
      throw ShapeError("merge: adapter delta " + dims_to_string(delta.dims) + " vs weight " + dims_to_string(w.dims));
    }
    for (int i = 0; i < w.dims[0]; ++i) {
      for (int j = 0; j < w.dims[1]; ++j) w.at(i, j) += delta.at(j, i);
    }
  }
  return out;
}

template <typename T>
BasicLoraSet<T> zeros_like(const BasicLoraSet<T>& s) {
  BasicLoraSet<T> out = s;
  for (auto& [key, ad] : out.adapters) {
    ad.a.fill(T(0));
    ad.b.fill(T(0));
  }
  return out;
}

template struct BasicLoraSet<float>;
template struct BasicLoraSet<double>;

#define LB_INSTANTIATE(T)                                                                                   \
  template void adapted_projection<T>(const BasicTensor<T>&, const BasicLoraAdapter<T>*, const BasicTensor<T>&, \
                                      BasicTensor<T>&, BasicTensor<T>*);                                    \
  template BasicLoraSet<T> drop_above<T>(const BasicLoraSet<T>&, int);                                      \
  template BasicTensor<T> materialize_delta<T>(const BasicLoraAdapter<T>&);                                 \
  template BasicLoraSet<T> zeros_like<T>(const BasicLoraSet<T>&);

LB_INSTANTIATE(float)
LB_INSTANTIATE(double)
#undef LB_INSTANTIATE

}  // namespace lb
