// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

// Boundary layer K: adapters on layers 1..K are kept at inference, the rest
// are dropped. K is picked either from the knee of a ground-truth probability
// curve or by decoding a validation subsample at every candidate K.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lb/metrics.hpp"
#include "lb/tasks.hpp"
#include "lb/transformer.hpp"
#include "lb/vocab.hpp"

namespace lb {

inline constexpr double kDefaultMinJumpRatio = 0.25;
inline constexpr int kDefaultSweepSamples = 500;
inline constexpr int kDefaultDecodeBudget = 48;

// K = the l (1-based, l < L) maximizing c(l+1) - c(l), smallest l on ties,
// provided that jump is at least min_jump_ratio * (max c - min c). Throws
// NoKneeError for a flat curve or a too-small jump, InputError when the curve
// has fewer than 3 entries or leaves [0, 1].
int detect_knee(const std::vector<double>& curve, double min_jump_ratio = kDefaultMinJumpRatio);

// round(L * 15 / 32): used when no knee is found.
int default_boundary(int n_layers);

struct BoundaryDecision {
  int k_star = 0;
  int n_layers = 0;
  std::map<int, double> per_k_scores;  // metric score in [0, 1]
  std::string metric;
  int m = 0;                           // samples scored per K
  std::string method;                  // "knee" or "sweep"
  std::uint64_t seed = 0;
  std::string fingerprint;             // of the base model the set belongs to

  bool operator==(const BoundaryDecision&) const = default;
};

// Greedy continuations decoded to text (stop token and anything after it
// removed), in sample order.
std::vector<std::string> decode_predictions(const BaseWeights& base, const LoraSet& adapters, const LayerMask& active,
                                            const std::vector<Sample>& samples, int max_new, const Vocab& vocab);

EvalReport score_predictions(Metric metric, const std::vector<std::string>& preds, const std::vector<Sample>& samples);

struct SweepOptions {
  std::vector<int> ks;          // empty means 0..L
  int decode_budget = kDefaultDecodeBudget;
  bool coarse_to_fine = false;  // every other K first, then the neighbours of the best
  std::uint64_t seed = 0;       // recorded only; the sweep itself is deterministic
};

// Decodes every sample at every K with drop_above(full_set, K) and keeps the
// smallest K with the best score. Throws ConfigError when the metric does not
// suit the samples' task, InputError on empty samples or K outside [0, L].
BoundaryDecision sweep_boundary(const BaseWeights& base, const std::string& base_fingerprint, const LoraSet& full_set,
                                const std::vector<Sample>& val, Metric metric, const SweepOptions& opts,
                                const Vocab& vocab);

// Picks K_star from an existing score table: smallest K with the best score.
int best_k(const std::map<int, double>& scores);

// drop_above(full_set, decision.k_star). Throws CompatibilityError when the
// decision was made for a different base model, InputError when K_star is out
// of range.
LoraSet apply_boundary(const LoraSet& full_set, const BoundaryDecision& decision);

}  // namespace lb
