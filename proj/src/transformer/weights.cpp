// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#include "lb/weights.hpp"

#include <cmath>
#include <random>

namespace lb {

void ModelConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("model config: " + msg);
  };
  require(n_layers >= 1, "n_layers must be positive");
  require(d_model >= 1, "d_model must be positive");
  require(n_heads >= 1, "n_heads must be positive");
  require(d_model % n_heads == 0, "d_model must be divisible by n_heads");
  require(d_ff >= 1, "d_ff must be positive");
  require(vocab >= kReservedTokens, "vocab must hold the reserved tokens (>= 4)");
  require(max_seq >= 2, "max_seq must be at least 2");
  require(norm_eps > 0.0f, "norm_eps must be positive");
}

std::string_view proj_name(Proj p) {
  switch (p) {
    case Proj::q: return "q";
    case Proj::k: return "k";
    case Proj::v: return "v";
    case Proj::o: return "o";
    case Proj::up: return "up";
    case Proj::down: return "down";
  }
  return "?";
}

Proj parse_proj(std::string_view name) {
  for (Proj p : kAllProjs) {
    if (proj_name(p) == name) return p;
  }
  throw ConfigError("unknown projection '" + std::string(name) + "' (expected q,k,v,o,up,down)");
}

std::pair<int, int> proj_shape(const ModelConfig& cfg, Proj p) {
  switch (p) {
    case Proj::up: return {cfg.d_model, cfg.d_ff};
    case Proj::down: return {cfg.d_ff, cfg.d_model};
    default: return {cfg.d_model, cfg.d_model};
  }
}

template <typename T>
BasicTensor<T>& BasicLayerWeights<T>::proj(Proj p) {
  switch (p) {
    case Proj::q: return wq;
    case Proj::k: return wk;
    case Proj::v: return wv;
    case Proj::o: return wo;
    case Proj::up: return w_up;
    case Proj::down: return w_down;
  }
  return wq;
}

template <typename T>
const BasicTensor<T>& BasicLayerWeights<T>::proj(Proj p) const {
  return const_cast<BasicLayerWeights*>(this)->proj(p);
}

template <typename T>
std::size_t BasicBaseWeights<T>::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const BasicTensor<T>& t) { n += t.size(); });
  return n;
}

template <typename T>
BasicBaseWeights<T> zero_weights(const ModelConfig& cfg) {
  cfg.validate();
  const int d = cfg.d_model;
  BasicBaseWeights<T> w;
  w.config = cfg;
  w.tok_emb = BasicTensor<T>({cfg.vocab, d});
  w.pos_emb = BasicTensor<T>({cfg.max_seq, d});
  w.layers.resize(cfg.n_layers);
  for (auto& l : w.layers) {
    l.attn_norm = BasicTensor<T>({d});
    l.wq = BasicTensor<T>({d, d});
    l.wk = BasicTensor<T>({d, d});
    l.wv = BasicTensor<T>({d, d});
    l.wo = BasicTensor<T>({d, d});
    l.ffn_norm = BasicTensor<T>({d});
    l.w_up = BasicTensor<T>({d, cfg.d_ff});
    l.w_down = BasicTensor<T>({cfg.d_ff, d});
  }
  w.final_norm = BasicTensor<T>({d});
  if (!cfg.tied_embeddings) w.head = BasicTensor<T>({d, cfg.vocab});
  return w;
}

BaseWeights init_base_weights(const ModelConfig& cfg, std::uint64_t seed) {
  BaseWeights w = zero_weights<float>(cfg);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 0.02f);
  const float residual_scale = 1.0f / std::sqrt(2.0f * static_cast<float>(cfg.n_layers));
  w.for_each([&](const std::string& name, Tensor& t) {
    const bool is_gain = name.ends_with("norm");
    const bool is_residual_out = name.ends_with(".wo") || name.ends_with(".w_down");
    for (float& v : t.data) {
      if (is_gain) {
        v = 1.0f;
      } else {
        v = normal(rng);
        if (is_residual_out) v *= residual_scale;
      }
    }
  });
  return w;
}

template struct BasicLayerWeights<float>;
template struct BasicLayerWeights<double>;
template struct BasicBaseWeights<float>;
template struct BasicBaseWeights<double>;
template BasicBaseWeights<float> zero_weights<float>(const ModelConfig&);
template BasicBaseWeights<double> zero_weights<double>(const ModelConfig&);

}  // namespace lb
