// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

// Pre-norm decoder-only transformer: learned absolute positions, RMSNorm,
// causal multi-head attention, GELU feed-forward. Any projection can carry a
// low-rank adapter; a layer mask switches adapters on or off per layer.

#pragma once

#include <memory>
#include <span>
#include <vector>

#include "lb/lora.hpp"

namespace lb {

template <typename T>
struct BasicLayerTrace {
  std::vector<BasicTensor<T>> hidden;  // L entries of [t x d], state after each block
  BasicTensor<T> final_logits;         // [t x V]
};

using LayerTrace = BasicLayerTrace<float>;

namespace detail {
template <typename T>
struct ForwardRecord;
}

// Incremental decoder with a key/value cache. Appending rows one at a time
// yields exactly the same numbers as appending them all at once, because each
// row is computed by the same per-row arithmetic.
template <typename T>
class BasicDecoder {
 public:
  BasicDecoder(const BasicBaseWeights<T>& base, const BasicLoraSet<T>& adapters, const LayerMask& active);
  ~BasicDecoder();
  BasicDecoder(const BasicDecoder&) = delete;
  BasicDecoder& operator=(const BasicDecoder&) = delete;

  void reset() { length_ = 0; }
  int length() const { return length_; }

  // Feeds tokens at positions length()..length()+n-1 and returns the logits
  // of the last one. When trace is non-null, hidden states and logits of every
  // appended row are written into it at their absolute positions (the trace
  // must already be sized for them).
  std::vector<T> append(std::span<const int> tokens, BasicLayerTrace<T>* trace = nullptr,
                        detail::ForwardRecord<T>* record = nullptr);

  const BasicBaseWeights<T>& base() const { return base_; }
  // Final norm + output head applied to one hidden row (the logit lens).
  void lens(std::span<const T> hidden_row, std::span<T> logits) const;

 private:
  const BasicLoraAdapter<T>* adapter(int layer0, Proj p) const;

  const BasicBaseWeights<T>& base_;
  const BasicLoraSet<T>& adapters_;
  LayerMask active_;
  BasicTensor<T> head_t_;  // [d x V]
  std::vector<BasicTensor<T>> k_cache_, v_cache_;
  int length_ = 0;
};

using Decoder = BasicDecoder<float>;

// Validates token ids, sequence length, mask length and adapter/base layer
// counts. Throws InputError or CompatibilityError.
template <typename T>
void check_forward_inputs(const BasicBaseWeights<T>& base, const BasicLoraSet<T>& adapters, const LayerMask& active,
                          std::span<const int> tokens);

template <typename T>
BasicLayerTrace<T> forward_collect(const BasicBaseWeights<T>& base, const BasicLoraSet<T>& adapters,
                                   const LayerMask& active, std::span<const int> tokens);

// Per-layer ground-truth probabilities (and the per-position maximum
// probability) of reference tokens under teacher forcing. Entry (l, i) reads
// the layer-l distribution at position prompt_len + i - 1.
struct LensProbs {
  Tensor ground_truth;  // [L x n]
  Tensor max_prob;      // [L x n]
};

LensProbs lens_probs(const BaseWeights& base, const LayerTrace& trace, std::span<const int> reference,
                     int prompt_len);

Tensor teacher_forced_probs(const BaseWeights& base, const LayerTrace& trace, std::span<const int> reference,
                            int prompt_len);

// Greedy decoding with a key/value cache. Lowest token id wins ties. Stops at
// `stop` (which is included in the output), after max_new tokens, or when the
// context is full.
std::vector<int> generate_greedy(const BaseWeights& base, const LoraSet& adapters, const LayerMask& active,
                                 std::span<const int> prompt, int max_new, int stop);

// Same contract, recomputing the whole sequence at every step. Kept as an
// independent route for tests and the sweep oracle.
std::vector<int> generate_greedy_uncached(const BaseWeights& base, const LoraSet& adapters,
                                          const LayerMask& active, std::span<const int> prompt, int max_new,
                                          int stop);

int argmax_lowest(std::span<const float> row);

// Mean cross-entropy of `targets` at rows where loss_mask is set, plus
// gradients accumulated into gbase / glora when they are non-null. gbase must
// come from zero_weights(cfg) and glora from zeros_like(adapters).
template <typename T>
double sequence_loss_grad(const BasicBaseWeights<T>& base, const BasicLoraSet<T>& adapters, const LayerMask& active,
                     std::span<const int> tokens, std::span<const int> targets,
                     std::span<const std::uint8_t> loss_mask, BasicBaseWeights<T>* gbase,
                     BasicLoraSet<T>* glora);

template <typename T>
double sequence_loss(const BasicBaseWeights<T>& base, const BasicLoraSet<T>& adapters, const LayerMask& active,
                std::span<const int> tokens, std::span<const int> targets, std::span<const std::uint8_t> loss_mask) {
  return sequence_loss_grad<T>(base, adapters, active, tokens, targets, loss_mask, nullptr, nullptr);
}

}  // namespace lb
