// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

// Central finite-difference checks of the hand-written backward pass, grouped
// by parameter class.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "lb/transformer.hpp"

namespace lb::testing {

inline ModelConfig micro_config(bool tied) {
  ModelConfig cfg;
  cfg.n_layers = 2;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.d_ff = 16;
  cfg.vocab = 11;
  cfg.max_seq = 8;
  cfg.tied_embeddings = tied;
  return cfg;
}

// Random weights with enough spread that every gradient is well away from 0,
// and adapters on all six projections with non-zero A and B.
template <typename T>
struct MicroProblem {
  BasicBaseWeights<T> base;
  BasicLoraSet<T> lora;
  LayerMask mask;
  std::vector<int> tokens, targets;
  std::vector<std::uint8_t> loss_mask;
};

template <typename T>
MicroProblem<T> make_micro_problem(bool tied, std::uint64_t seed) {
  const ModelConfig cfg = micro_config(tied);
  MicroProblem<T> p;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.4);
  BaseWeights w = init_base_weights(cfg, seed);
  w.for_each([&](const std::string& name, Tensor& t) {
    for (float& v : t.data) v = static_cast<float>(name.ends_with("norm") ? 1.0 + 0.2 * normal(rng) : normal(rng));
  });
  LoraSet set = init_adapters(cfg, {kAllProjs.begin(), kAllProjs.end()}, 2, 4.0f, seed + 1);
  for (auto& [key, ad] : set.adapters) {
    for (float& v : ad.a.data) v = static_cast<float>(normal(rng));
    for (float& v : ad.b.data) v = static_cast<float>(normal(rng));
  }
  p.base = weights_cast<T>(w);
  p.lora = lora_cast<T>(set);
  p.mask = mask_all(cfg.n_layers, true);
  std::uniform_int_distribution<int> tok(0, cfg.vocab - 1);
  for (int i = 0; i < 6; ++i) {
    p.tokens.push_back(tok(rng));
    p.targets.push_back(tok(rng));
    p.loss_mask.push_back(i >= 1 ? 1 : 0);
  }
  return p;
}

inline std::string param_class(const std::string& name) {
  if (name == "tok_emb" || name == "pos_emb") return "embeddings";
  if (name == "head") return "head";
  if (name.ends_with("norm")) return "norms";
  if (name.ends_with(".wq") || name.ends_with(".wk") || name.ends_with(".wv") || name.ends_with(".wo")) {
    return "attention";
  }
  if (name.ends_with("w_up") || name.ends_with("w_down")) return "ffn";
  return "other";
}

struct ClassError {
  double analytic_norm = 0;
  double diff_norm = 0;
  double numeric_norm = 0;
  int checked = 0;
  double relative() const {
    const double denom = std::max(analytic_norm, numeric_norm);
    return denom == 0 ? 0 : diff_norm / denom;
  }
};

// Returns the norm-wise relative error per parameter class
// (embeddings, attention, ffn, norms, head, lora_A, lora_B).
template <typename T>
std::map<std::string, ClassError> gradient_check(MicroProblem<T> p, double eps) {
  const ModelConfig cfg = p.base.config;
  BasicBaseWeights<T> gbase = zero_weights<T>(cfg);
  BasicLoraSet<T> glora = zeros_like(p.lora);
  sequence_loss_grad<T>(p.base, p.lora, p.mask, p.tokens, p.targets, p.loss_mask, &gbase, &glora);

  auto loss = [&]() { return static_cast<double>(sequence_loss<T>(p.base, p.lora, p.mask, p.tokens, p.targets, p.loss_mask)); };

  std::map<std::string, ClassError> out;
  auto check_tensor = [&](const std::string& cls, BasicTensor<T>& value, const BasicTensor<T>& grad) {
    auto& e = out[cls];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const T saved = value.data[i];
      const T hi = saved + static_cast<T>(eps);
      const T lo = saved - static_cast<T>(eps);
      value.data[i] = hi;
      const double up = loss();
      value.data[i] = lo;
      const double down = loss();
      value.data[i] = saved;
      // Divide by the step that was actually representable in T.
      const double numeric = (up - down) / (static_cast<double>(hi) - static_cast<double>(lo));
      const double analytic = static_cast<double>(grad.data[i]);
      e.analytic_norm += analytic * analytic;
      e.numeric_norm += numeric * numeric;
      e.diff_norm += (analytic - numeric) * (analytic - numeric);
      ++e.checked;
    }
  };

  std::vector<BasicTensor<T>*> grads;
  gbase.for_each([&](const std::string&, BasicTensor<T>& t) { grads.push_back(&t); });
  std::size_t idx = 0;
  p.base.for_each([&](const std::string& name, BasicTensor<T>& t) { check_tensor(param_class(name), t, *grads[idx++]); });
  for (auto& [key, ad] : p.lora.adapters) {
    const auto& g = glora.adapters.at(key);
    check_tensor("lora_A", ad.a, g.a);
    check_tensor("lora_B", ad.b, g.b);
  }
  for (auto& [cls, e] : out) {
    e.analytic_norm = std::sqrt(e.analytic_norm);
    e.numeric_norm = std::sqrt(e.numeric_norm);
    e.diff_norm = std::sqrt(e.diff_norm);
  }
  return out;
}

}  // namespace lb::testing
