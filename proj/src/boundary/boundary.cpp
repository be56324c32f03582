// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#include "lb/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <set>

#include "lb/error.hpp"

namespace lb {

int detect_knee(const std::vector<double>& curve, double min_jump_ratio) {
  const int L = static_cast<int>(curve.size());
  if (L < 3) throw InputError("detect_knee: curve needs at least 3 layers, got " + std::to_string(L));
  for (double c : curve) {
    if (!(c >= 0.0 && c <= 1.0)) throw InputError("detect_knee: curve entries must lie in [0, 1]");
  }
  const auto [lo, hi] = std::minmax_element(curve.begin(), curve.end());
  const double range = *hi - *lo;
  if (range < 1e-6) throw NoKneeError("detect_knee: curve is flat (range " + std::to_string(range) + ")");
  int best = 1;
  double jump = curve[1] - curve[0];
  for (int l = 2; l < L; ++l) {
    const double d = curve[static_cast<std::size_t>(l)] - curve[static_cast<std::size_t>(l - 1)];
    if (d > jump) {
      jump = d;
      best = l;
    }
  }
  if (jump < min_jump_ratio * range) {
    throw NoKneeError("detect_knee: largest rise " + std::to_string(jump) + " is below " +
                      std::to_string(min_jump_ratio) + " of the curve range " + std::to_string(range));
  }
  return best;
}

int default_boundary(int n_layers) { return static_cast<int>(std::lround(n_layers * 15.0 / 32.0)); }

std::vector<std::string> decode_predictions(const BaseWeights& base, const LoraSet& adapters, const LayerMask& active,
                                            const std::vector<Sample>& samples, int max_new, const Vocab& vocab) {
  std::vector<std::string> out(samples.size());
  std::vector<std::exception_ptr> errors(samples.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < samples.size(); ++i) {
    try {
      std::vector<int> gen = generate_greedy(base, adapters, active, samples[i].prompt, max_new, kEosToken);
      if (!gen.empty() && gen.back() == kEosToken) gen.pop_back();
      out[i] = vocab.decode(gen);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

EvalReport score_predictions(Metric metric, const std::vector<std::string>& preds, const std::vector<Sample>& samples) {
  std::vector<std::string> golds;
  golds.reserve(samples.size());
  for (const auto& s : samples) golds.push_back(s.label);
  return evaluate(metric, preds, golds);
}

int best_k(const std::map<int, double>& scores) {
  if (scores.empty()) throw InputError("best_k: empty score table");
  int k = scores.begin()->first;
  double best = scores.begin()->second;
  for (const auto& [kk, s] : scores) {
    if (s > best) {
      best = s;
      k = kk;
    }
  }
  return k;
}

BoundaryDecision sweep_boundary(const BaseWeights& base, const std::string& base_fingerprint, const LoraSet& full_set,
                                const std::vector<Sample>& val, Metric metric, const SweepOptions& opts,
                                const Vocab& vocab) {
  const int L = base.config.n_layers;
  if (val.empty()) throw InputError("sweep: no validation samples");
  const Task task = val.front().task;
  if (!metric_compatible(metric, task)) {
    throw ConfigError("metric " + std::string(metric_name(metric)) + " does not apply to task " +
                      std::string(task_name(task)));
  }
  std::set<int> candidates(opts.ks.begin(), opts.ks.end());
  if (opts.ks.empty()) {
    for (int k = 0; k <= L; ++k) candidates.insert(k);
  }
  for (int k : candidates) {
    if (k < 0 || k > L) throw InputError("sweep: K = " + std::to_string(k) + " outside 0.." + std::to_string(L));
  }
  if (opts.decode_budget < 1) throw InputError("sweep: decode budget must be >= 1");

  BoundaryDecision d;
  d.n_layers = L;
  d.metric = std::string(metric_name(metric));
  d.m = static_cast<int>(val.size());
  d.method = "sweep";
  d.seed = opts.seed;
  d.fingerprint = base_fingerprint;
  const LayerMask all = mask_all(L, true);
  auto score = [&](int k) {
    if (d.per_k_scores.count(k)) return;
    const auto preds = decode_predictions(base, drop_above(full_set, k), all, val, opts.decode_budget, vocab);
    d.per_k_scores[k] = score_predictions(metric, preds, val).score;
  };

  if (!opts.coarse_to_fine) {
    for (int k : candidates) score(k);
  } else {
    const std::vector<int> sorted(candidates.begin(), candidates.end());
    for (std::size_t i = 0; i < sorted.size(); i += 2) score(sorted[i]);
    score(sorted.back());
    const int coarse_best = best_k(d.per_k_scores);
    for (int k : {coarse_best - 1, coarse_best + 1}) {
      if (candidates.count(k)) score(k);
    }
  }
  d.k_star = best_k(d.per_k_scores);
  return d;
}

LoraSet apply_boundary(const LoraSet& full_set, const BoundaryDecision& decision) {
  if (!decision.fingerprint.empty() && !full_set.fingerprint.empty() && decision.fingerprint != full_set.fingerprint) {
    throw CompatibilityError("boundary decision was made for model " + decision.fingerprint +
                             ", adapter set belongs to " + full_set.fingerprint);
  }
  if (decision.k_star < 0 || decision.k_star > full_set.n_layers) {
    throw InputError("boundary K = " + std::to_string(decision.k_star) + " outside 0.." +
                     std::to_string(full_set.n_layers));
  }
  return drop_above(full_set, decision.k_star);
}

}  // namespace lb
