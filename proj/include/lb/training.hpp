// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

// Pretraining of the base model and adapter-only fine-tuning. Each step
// averages per-sequence mean losses over a minibatch, clips the global
// gradient norm and applies one Adam update. Sample order is reshuffled every
// epoch from the configured seed, so runs are bit-reproducible.

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lb/lora.hpp"
#include "lb/tasks.hpp"

namespace lb {

struct TrainConfig {
  float lr = 1e-4f;
  int epochs = 3;
  int batch = 16;
  std::uint64_t seed = 0;
  bool loss_mask_prompt = true;
  float grad_clip = 1.0f;  // global L2 norm; 0 disables clipping

  void validate() const;  // throws ConfigError
};

struct TrainLogRow {
  int epoch = 0;          // 1-based
  std::int64_t step = 0;  // 1-based, counted across epochs
  double loss = 0;        // mean loss of the step's minibatch
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
  // Mean loss over the last epoch's steps.
  double final_loss() const;
  std::string tsv() const;
};

// Next-token inputs, targets and supervision mask for one sequence.
struct TrainExample {
  std::vector<int> inputs;
  std::vector<int> targets;
  std::vector<std::uint8_t> mask;
};

// inputs = seq[0..n-2], targets = seq[1..n-1], every position supervised.
TrainExample lm_example(const std::vector<int>& seq);
// prompt ++ reference. With mask_prompt only the positions that predict a
// reference token are supervised.
TrainExample sft_example(const Sample& s, bool mask_prompt);

struct PretrainResult {
  BaseWeights weights;
  TrainLog log;
  double final_loss = 0;
};

// Trains every parameter from init_base_weights(cfg, tcfg.seed). Throws
// InputError on an empty corpus or a sequence longer than max_seq + 1.
PretrainResult pretrain(const ModelConfig& cfg, const TrainConfig& tcfg, const std::vector<std::vector<int>>& corpus);

// Mean per-sequence loss of a corpus under fixed weights.
double corpus_loss(const BaseWeights& w, const std::vector<std::vector<int>>& corpus);

struct FinetuneResult {
  LoraSet set;
  TrainLog log;
};

// Updates only A and B. The base is taken by const reference and never
// written. A set with an empty fingerprint is stamped with base_fingerprint;
// any other mismatch throws CompatibilityError. Throws InputError when train
// is empty.
FinetuneResult finetune_lora(const BaseWeights& base, const std::string& base_fingerprint, LoraSet set,
                             const std::vector<Sample>& train, const TrainConfig& tcfg);

// Fresh adapters on layers 1..k only, then finetune_lora. Throws InputError
// unless 1 <= k <= L.
FinetuneResult finetune_partial(const BaseWeights& base, const std::string& base_fingerprint,
                                const std::vector<Sample>& train, const TrainConfig& tcfg, int k,
                                const std::vector<Proj>& targets, int rank, float alpha, std::uint64_t adapter_seed);

// Mean SFT loss over samples, adapters on every layer.
double sft_loss(const BaseWeights& base, const LoraSet& set, const std::vector<Sample>& samples, bool mask_prompt);

}  // namespace lb
