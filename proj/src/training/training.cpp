// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#include "lb/training.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "lb/error.hpp"
#include "lb/io.hpp"
#include "lb/numerics.hpp"
#include "lb/transformer.hpp"

namespace lb {

void TrainConfig::validate() const {
  if (!(lr >= 0.0f) || !std::isfinite(lr)) throw ConfigError("train.lr must be finite and >= 0");
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch < 1) throw ConfigError("train.batch must be >= 1");
  if (!(grad_clip >= 0.0f)) throw ConfigError("train.grad_clip must be >= 0");
}

double TrainLog::final_loss() const {
  if (rows.empty()) return 0.0;
  const int last = rows.back().epoch;
  double sum = 0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.epoch == last) {
      sum += r.loss;
      ++n;
    }
  }
  return sum / n;
}

std::string TrainLog::tsv() const {
  std::ostringstream os;
  os.precision(17);
  os << "epoch\tstep\tloss\n";
  for (const auto& r : rows) os << r.epoch << '\t' << r.step << '\t' << r.loss << '\n';
  return os.str();
}

TrainExample lm_example(const std::vector<int>& seq) {
  if (seq.size() < 2) throw InputError("training sequence needs at least two tokens");
  TrainExample ex;
  ex.inputs.assign(seq.begin(), seq.end() - 1);
  ex.targets.assign(seq.begin() + 1, seq.end());
  ex.mask.assign(ex.targets.size(), 1);
  return ex;
}

TrainExample sft_example(const Sample& s, bool mask_prompt) {
  if (s.prompt.empty() || s.reference.empty()) throw InputError("sample needs a prompt and a reference");
  std::vector<int> seq = s.prompt;
  seq.insert(seq.end(), s.reference.begin(), s.reference.end());
  TrainExample ex = lm_example(seq);
  if (mask_prompt) {
    // Position i predicts seq[i + 1]; the first reference token is predicted
    // from the last prompt position.
    for (std::size_t i = 0; i + 1 < s.prompt.size(); ++i) ex.mask[i] = 0;
  }
  return ex;
}

namespace {

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                   static_cast<std::uint32_t>(epoch)};
  std::mt19937_64 rng(ss);
  // Explicit Fisher-Yates so the order does not depend on the standard
  // library's shuffle.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

// Scales grads by 1/n, then clips their global norm.
void finish_gradients(std::vector<Tensor*>& grads, int n, float clip) {
  const float inv = 1.0f / static_cast<float>(n);
  double sq = 0;
  for (Tensor* g : grads) {
    for (float& x : g->data) {
      x *= inv;
      sq += static_cast<double>(x) * x;
    }
  }
  const double norm = std::sqrt(sq);
  if (clip > 0.0f && norm > clip) {
    const float s = static_cast<float>(clip / norm);
    for (Tensor* g : grads) {
      for (float& x : g->data) x *= s;
    }
  }
}

template <typename Step>
TrainLog run_epochs(std::size_t n_examples, const TrainConfig& tcfg, Step&& step) {
  TrainLog log;
  std::int64_t steps = 0;
  for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    const auto order = shuffled(n_examples, tcfg.seed, epoch);
    for (std::size_t start = 0; start < n_examples; start += static_cast<std::size_t>(tcfg.batch)) {
      const std::size_t end = std::min(n_examples, start + static_cast<std::size_t>(tcfg.batch));
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
      log.rows.push_back({epoch, ++steps, step(idx)});
    }
  }
  return log;
}

}  // namespace

PretrainResult pretrain(const ModelConfig& cfg, const TrainConfig& tcfg, const std::vector<std::vector<int>>& corpus) {
  cfg.validate();
  tcfg.validate();
  if (corpus.empty()) throw InputError("pretrain: empty corpus");
  std::vector<TrainExample> examples;
  examples.reserve(corpus.size());
  for (const auto& seq : corpus) {
    if (static_cast<int>(seq.size()) > cfg.max_seq) {
      throw InputError("pretrain: sequence of " + std::to_string(seq.size()) + " tokens exceeds max_seq " +
                       std::to_string(cfg.max_seq));
    }
    examples.push_back(lm_example(seq));
  }

  PretrainResult out;
  out.weights = init_base_weights(cfg, tcfg.seed);
  BaseWeights grad = zero_weights<float>(cfg);
  const LoraSet no_adapters;
  const LayerMask none = mask_all(cfg.n_layers, false);

  std::vector<Tensor*> grads;
  grad.for_each([&](const std::string&, Tensor& t) { grads.push_back(&t); });
  std::vector<ParamSlot> slots;
  std::size_t gi = 0;
  out.weights.for_each([&](const std::string&, Tensor& t) { slots.push_back({&t, grads[gi++], true}); });
  AdamState adam;
  adam.hyper.lr = tcfg.lr;

  out.log = run_epochs(examples.size(), tcfg, [&](const std::vector<std::size_t>& idx) {
    for (Tensor* g : grads) g->fill(0.0f);
    double loss = 0;
    for (std::size_t i : idx) {
      const auto& ex = examples[i];
      loss += sequence_loss_grad<float>(out.weights, no_adapters, none, ex.inputs, ex.targets, ex.mask, &grad,
                                        nullptr);
    }
    finish_gradients(grads, static_cast<int>(idx.size()), tcfg.grad_clip);
    adam_step(slots, adam);
    return loss / static_cast<double>(idx.size());
  });
  out.final_loss = out.log.final_loss();
  return out;
}

double corpus_loss(const BaseWeights& w, const std::vector<std::vector<int>>& corpus) {
  if (corpus.empty()) throw InputError("corpus_loss: empty corpus");
  const LoraSet no_adapters;
  const LayerMask none = mask_all(w.config.n_layers, false);
  double sum = 0;
  for (const auto& seq : corpus) {
    const auto ex = lm_example(seq);
    sum += sequence_loss<float>(w, no_adapters, none, ex.inputs, ex.targets, ex.mask);
  }
  return sum / static_cast<double>(corpus.size());
}

FinetuneResult finetune_lora(const BaseWeights& base, const std::string& base_fingerprint, LoraSet set,
                             const std::vector<Sample>& train, const TrainConfig& tcfg) {
  tcfg.validate();
  if (set.fingerprint.empty()) set.fingerprint = base_fingerprint;
  check_fingerprint(set, base_fingerprint);
  if (set.n_layers != base.config.n_layers) {
    throw CompatibilityError("adapter set has " + std::to_string(set.n_layers) + " layers, model has " +
                             std::to_string(base.config.n_layers));
  }
  if (train.empty()) throw InputError("finetune: no training samples");
  std::vector<TrainExample> examples;
  examples.reserve(train.size());
  for (const auto& s : train) examples.push_back(sft_example(s, tcfg.loss_mask_prompt));

  FinetuneResult out;
  LoraSet grad = zeros_like(set);
  const LayerMask all = mask_all(base.config.n_layers, true);
  std::vector<Tensor*> grads;
  std::vector<ParamSlot> slots;
  for (auto& [key, ad] : set.adapters) {
    auto& g = grad.adapters.at(key);
    grads.push_back(&g.a);
    grads.push_back(&g.b);
    slots.push_back({&ad.a, &g.a, true});
    slots.push_back({&ad.b, &g.b, true});
  }
  AdamState adam;
  adam.hyper.lr = tcfg.lr;

  out.log = run_epochs(examples.size(), tcfg, [&](const std::vector<std::size_t>& idx) {
    for (Tensor* g : grads) g->fill(0.0f);
    double loss = 0;
    for (std::size_t i : idx) {
      const auto& ex = examples[i];
      loss += sequence_loss_grad<float>(base, set, all, ex.inputs, ex.targets, ex.mask, nullptr, &grad);
    }
    if (!slots.empty()) {
      finish_gradients(grads, static_cast<int>(idx.size()), tcfg.grad_clip);
      adam_step(slots, adam);
    }
    return loss / static_cast<double>(idx.size());
  });
  out.set = std::move(set);
  return out;
}

FinetuneResult finetune_partial(const BaseWeights& base, const std::string& base_fingerprint,
                                const std::vector<Sample>& train, const TrainConfig& tcfg, int k,
                                const std::vector<Proj>& targets, int rank, float alpha, std::uint64_t adapter_seed) {
  const int L = base.config.n_layers;
  if (k < 1 || k > L) {
    throw InputError("finetune-partial: k = " + std::to_string(k) + " outside 1.." + std::to_string(L));
  }
  LoraSet set = init_adapters(base.config, targets, rank, alpha, adapter_seed, k);
  set.fingerprint = base_fingerprint;
  return finetune_lora(base, base_fingerprint, std::move(set), train, tcfg);
}

double sft_loss(const BaseWeights& base, const LoraSet& set, const std::vector<Sample>& samples, bool mask_prompt) {
  if (samples.empty()) throw InputError("sft_loss: no samples");
  const LayerMask all = mask_all(base.config.n_layers, true);
  double sum = 0;
  for (const auto& s : samples) {
    const auto ex = sft_example(s, mask_prompt);
    sum += sequence_loss<float>(base, set, all, ex.inputs, ex.targets, ex.mask);
  }
  return sum / static_cast<double>(samples.size());
}

}  // namespace lb
