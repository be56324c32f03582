// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lb/weights.hpp"

namespace lb {

// Layers are 1-based: layer 1 is the block closest to the embeddings.
struct AdapterKey {
  int layer = 1;
  Proj proj = Proj::q;
  auto operator<=>(const AdapterKey&) const = default;
};

// delta = (alpha / rank) * B * A, with A [rank x d_in] and B [d_out x rank].
// With input-major base weights the adapted projection is
//   y = x * W + (alpha / rank) * (x * A^T) * B^T.
template <typename T>
struct BasicLoraAdapter {
  BasicTensor<T> a;
  BasicTensor<T> b;
  int rank = 0;
  float alpha = 0.0f;

  T scale() const { return static_cast<T>(alpha) / static_cast<T>(rank); }
  bool operator==(const BasicLoraAdapter&) const = default;
};

template <typename T>
struct BasicLoraSet {
  int n_layers = 0;
  int rank = 0;
  float alpha = 0.0f;
  std::vector<Proj> targets;
  std::string fingerprint;  // model fingerprint of the base it was trained against
  std::map<AdapterKey, BasicLoraAdapter<T>> adapters;

  const BasicLoraAdapter<T>* find(int layer, Proj p) const {
    auto it = adapters.find({layer, p});
    return it == adapters.end() ? nullptr : &it->second;
  }
  std::size_t size() const { return adapters.size(); }
  bool empty() const { return adapters.empty(); }
  // Sum over adapters of rank * (d_in + d_out).
  std::size_t parameter_count() const;
  int max_layer() const { return adapters.empty() ? 0 : adapters.rbegin()->first.layer; }

  bool operator==(const BasicLoraSet&) const = default;
};

using LoraAdapter = BasicLoraAdapter<float>;
using LoraSet = BasicLoraSet<float>;

// One entry per layer; nonzero means that layer's adapters are active.
using LayerMask = std::vector<std::uint8_t>;

LayerMask mask_all(int n_layers, bool active);
// Active on layers 1..k.
LayerMask mask_bottom(int n_layers, int k);

// A ~ N(0, 0.02^2) from the seeded generator, B = 0. Throws ConfigError when
// rank exceeds a projection dimension or targets is empty.
LoraSet init_adapters(const ModelConfig& cfg, const std::vector<Proj>& targets, int rank, float alpha,
                      std::uint64_t seed, int max_layer = -1);

// y[n x d_out] = x[n x d_in] * W + scale * (x * A^T) * B^T. Computed in
// factored order; B * A is never formed. When u is non-null it receives
// x * A^T, which the backward pass needs.
template <typename T>
void adapted_projection(const BasicTensor<T>& w, const BasicLoraAdapter<T>* adapter, const BasicTensor<T>& x,
                        BasicTensor<T>& y, BasicTensor<T>* u = nullptr);

template <typename T>
BasicTensor<T> adapted_projection(const BasicTensor<T>& w, const BasicLoraAdapter<T>& adapter,
                                  const BasicTensor<T>& x) {
  BasicTensor<T> y;
  adapted_projection(w, &adapter, x, y);
  return y;
}

// Adapters with layer <= k. The input is left untouched.
template <typename T>
BasicLoraSet<T> drop_above(const BasicLoraSet<T>& set, int k);

// Dense delta (alpha / rank) * B * A, [d_out x d_in].
template <typename T>
BasicTensor<T> materialize_delta(const BasicLoraAdapter<T>& adapter);

// Folds each adapter into its base matrix. Throws CompatibilityError on a
// fingerprint mismatch (an empty fingerprint on either side skips the check).
BaseWeights merge(const BaseWeights& base, const LoraSet& set, const std::string& base_fingerprint);

template <typename To, typename From>
BasicLoraSet<To> lora_cast(const BasicLoraSet<From>& s) {
  BasicLoraSet<To> out;
  out.n_layers = s.n_layers;
  out.rank = s.rank;
  out.alpha = s.alpha;
  out.targets = s.targets;
  out.fingerprint = s.fingerprint;
  for (const auto& [key, ad] : s.adapters) {
    out.adapters[key] = {tensor_cast<To>(ad.a), tensor_cast<To>(ad.b), ad.rank, ad.alpha};
  }
  return out;
}

// Same keys and shapes, all tensors zero. Used as a gradient accumulator.
template <typename T>
BasicLoraSet<T> zeros_like(const BasicLoraSet<T>& s);

}  // namespace lb
