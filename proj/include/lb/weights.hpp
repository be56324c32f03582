// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lb/tensor.hpp"

namespace lb {

// Reserved token ids shared by the model, the tasks and the vocabulary file.
inline constexpr int kPadToken = 0;
inline constexpr int kBosToken = 1;
inline constexpr int kEosToken = 2;
inline constexpr int kUnkToken = 3;
inline constexpr int kReservedTokens = 4;

struct ModelConfig {
  int n_layers = 12;
  int d_model = 64;
  int n_heads = 4;
  int d_ff = 256;
  int vocab = 512;
  int max_seq = 128;
  bool tied_embeddings = true;
  float norm_eps = 1e-5f;

  int head_dim() const { return d_model / n_heads; }
  // Throws ConfigError on any violated invariant.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Projections that can carry an adapter.
enum class Proj : std::uint8_t { q, k, v, o, up, down };

inline constexpr std::array<Proj, 6> kAllProjs = {Proj::q, Proj::k, Proj::v, Proj::o, Proj::up, Proj::down};

std::string_view proj_name(Proj p);
Proj parse_proj(std::string_view name);  // throws ConfigError

// (d_in, d_out) of a projection under cfg.
std::pair<int, int> proj_shape(const ModelConfig& cfg, Proj p);

// Weights are stored input-major: y = x * W with W of shape [d_in x d_out].
template <typename T>
struct BasicLayerWeights {
  BasicTensor<T> attn_norm;  // [d]
  BasicTensor<T> wq, wk, wv, wo;  // [d x d]
  BasicTensor<T> ffn_norm;   // [d]
  BasicTensor<T> w_up;       // [d x d_ff]
  BasicTensor<T> w_down;     // [d_ff x d]

  BasicTensor<T>& proj(Proj p);
  const BasicTensor<T>& proj(Proj p) const;
  bool operator==(const BasicLayerWeights&) const = default;
};

template <typename T>
struct BasicBaseWeights {
  ModelConfig config;
  BasicTensor<T> tok_emb;     // [V x d]
  BasicTensor<T> pos_emb;     // [max_seq x d]
  std::vector<BasicLayerWeights<T>> layers;
  BasicTensor<T> final_norm;  // [d]
  BasicTensor<T> head;        // [d x V]; empty when embeddings are tied

  // Visits every tensor in a fixed order with a stable name. Layer indices in
  // names are 1-based.
  template <typename F>
  void for_each(F&& f) {
    f(std::string("tok_emb"), tok_emb);
    f(std::string("pos_emb"), pos_emb);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const std::string p = "layers." + std::to_string(i + 1) + ".";
      auto& l = layers[i];
      f(p + "attn_norm", l.attn_norm);
      f(p + "wq", l.wq);
      f(p + "wk", l.wk);
      f(p + "wv", l.wv);
      f(p + "wo", l.wo);
      f(p + "ffn_norm", l.ffn_norm);
      f(p + "w_up", l.w_up);
      f(p + "w_down", l.w_down);
    }
    f(std::string("final_norm"), final_norm);
    if (!config.tied_embeddings) f(std::string("head"), head);
  }
  template <typename F>
  void for_each(F&& f) const {
    const_cast<BasicBaseWeights*>(this)->for_each(
        [&](const std::string& name, BasicTensor<T>& t) { f(name, static_cast<const BasicTensor<T>&>(t)); });
  }

  std::size_t parameter_count() const;
  bool operator==(const BasicBaseWeights&) const = default;
};

using BaseWeights = BasicBaseWeights<float>;

// Zero-filled weights with every shape derived from cfg (norm gains are zero
// too; use init_base_weights for a usable model).
template <typename T>
BasicBaseWeights<T> zero_weights(const ModelConfig& cfg);

// Gaussian(0, 0.02^2) matrices, unit norm gains, residual output projections
// scaled by 1/sqrt(2L).
BaseWeights init_base_weights(const ModelConfig& cfg, std::uint64_t seed);

template <typename To, typename From>
BasicBaseWeights<To> weights_cast(const BasicBaseWeights<From>& w) {
  BasicBaseWeights<To> out = zero_weights<To>(w.config);
  std::vector<const BasicTensor<From>*> src;
  w.for_each([&](const std::string&, const BasicTensor<From>& t) { src.push_back(&t); });
  std::size_t i = 0;
  out.for_each([&](const std::string&, BasicTensor<To>& t) { t = tensor_cast<To>(*src[i++]); });
  return out;
}

}  // namespace lb
