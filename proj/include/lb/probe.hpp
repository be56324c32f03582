// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

// Layer-wise probability curves. For every layer l and each of the first
// n_tokens reference positions i, the layer-l hidden state is decoded through
// the final norm and output head (logit lens) under teacher forcing, and the
// probability of the reference token (gt) and the largest probability (max)
// are averaged over samples.

#pragma once

#include <string>
#include <vector>

#include "lb/tasks.hpp"
#include "lb/transformer.hpp"

namespace lb {

inline constexpr int kDefaultProbeTokens = 4;
inline constexpr int kDefaultProbeSamples = 100;

struct ProbeReport {
  int n_layers = 0;
  int n_tokens = 0;
  Tensor gt_curve;   // [L x n_tokens]
  Tensor max_curve;  // [L x n_tokens]
  int sample_count = 0;
  std::string config;      // model fingerprint, adapter layers and mask
  std::string sample_set;  // hash of the accepted samples' tokens
  std::vector<std::string> warnings;

  bool operator==(const ProbeReport&) const = default;
};

// Samples whose reference is shorter than n_tokens are skipped with a warning;
// throws InputError when none is left.
ProbeReport probe_ground_truth(const BaseWeights& base, const LoraSet& adapters, const LayerMask& active,
                               const std::vector<Sample>& samples, int n_tokens = kDefaultProbeTokens);

// One report per K with drop_above(full_set, K). Throws InputError for K
// outside [0, L].
std::vector<ProbeReport> probe_under_drop(const BaseWeights& base, const LoraSet& full_set, const std::vector<int>& ks,
                                          const std::vector<Sample>& samples, int n_tokens = kDefaultProbeTokens);

// ours.gt_curve - baseline.gt_curve. Throws ComparisonError when shapes or
// sample sets differ.
Tensor probe_difference(const ProbeReport& ours, const ProbeReport& baseline);

// The bottom-10/20/25-of-32 layer choices scaled to L layers (floor).
std::vector<int> scaled_drop_layers(int n_layers);

// Row means of gt_curve: the per-layer curve knee detection reads.
std::vector<double> gt_layer_curve(const ProbeReport& r);

}  // namespace lb
