// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#include "lb/probe.hpp"

#include <exception>

#include "lb/error.hpp"
#include "lb/io.hpp"

namespace lb {

namespace {

std::string describe(const BaseWeights& base, const LoraSet& adapters, const LayerMask& active) {
  std::string layers;
  int last = 0;
  for (const auto& [key, ad] : adapters.adapters) {
    if (key.layer != last) {
      layers += (layers.empty() ? "" : ",") + std::to_string(key.layer);
      last = key.layer;
    }
  }
  std::string mask;
  for (auto m : active) mask += m ? '1' : '0';
  return "model=" + model_fingerprint(base) + ";adapters=" + (layers.empty() ? "none" : layers) +
         ";targets=" + std::to_string(adapters.targets.size()) + ";mask=" + mask;
}

std::string hash_samples(const std::vector<const Sample*>& samples, int n_tokens) {
  std::string bytes = std::to_string(n_tokens) + ";";
  for (const Sample* s : samples) {
    for (int t : s->prompt) bytes += std::to_string(t) + ",";
    bytes += "|";
    for (int t : s->reference) bytes += std::to_string(t) + ",";
    bytes += ";";
  }
  return sha256_hex(bytes);
}

}  // namespace

ProbeReport probe_ground_truth(const BaseWeights& base, const LoraSet& adapters, const LayerMask& active,
                               const std::vector<Sample>& samples, int n_tokens) {
  const int L = base.config.n_layers;
  if (n_tokens < 1) throw InputError("probe: n_tokens must be >= 1");
  ProbeReport r;
  r.n_layers = L;
  r.n_tokens = n_tokens;
  std::vector<const Sample*> kept;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (static_cast<int>(s.reference.size()) < n_tokens) {
      r.warnings.push_back("sample " + std::to_string(i) + " rejected: reference has " +
                           std::to_string(s.reference.size()) + " tokens, probe needs " + std::to_string(n_tokens));
      continue;
    }
    kept.push_back(&s);
  }
  if (kept.empty()) throw InputError("probe: every sample was rejected (references shorter than n_tokens)");

  // Per-sample curves land in fixed slots; the reduction below runs in sample
  // order so the report does not depend on scheduling.
  std::vector<LensProbs> per(kept.size());
  std::vector<std::exception_ptr> errors(kept.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < kept.size(); ++i) {
    try {
      const Sample& s = *kept[i];
      std::vector<int> seq = s.prompt;
      seq.insert(seq.end(), s.reference.begin(), s.reference.begin() + (n_tokens - 1));
      const LayerTrace trace = forward_collect(base, adapters, active, seq);
      per[i] = lens_probs(base, trace, std::span<const int>(s.reference.data(), static_cast<std::size_t>(n_tokens)),
                          static_cast<int>(s.prompt.size()));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<double> gt(static_cast<std::size_t>(L * n_tokens), 0.0), mx(gt.size(), 0.0);
  for (const auto& p : per) {
    for (std::size_t j = 0; j < gt.size(); ++j) {
      gt[j] += p.ground_truth.data[j];
      mx[j] += p.max_prob.data[j];
    }
  }
  r.gt_curve = Tensor({L, n_tokens});
  r.max_curve = Tensor({L, n_tokens});
  const double n = static_cast<double>(kept.size());
  for (std::size_t j = 0; j < gt.size(); ++j) {
    r.gt_curve.data[j] = static_cast<float>(gt[j] / n);
    r.max_curve.data[j] = static_cast<float>(mx[j] / n);
  }
  r.sample_count = static_cast<int>(kept.size());
  r.config = describe(base, adapters, active);
  r.sample_set = hash_samples(kept, n_tokens);
  return r;
}

std::vector<ProbeReport> probe_under_drop(const BaseWeights& base, const LoraSet& full_set, const std::vector<int>& ks,
                                          const std::vector<Sample>& samples, int n_tokens) {
  const int L = base.config.n_layers;
  for (int k : ks) {
    if (k < 0 || k > L) throw InputError("probe: K = " + std::to_string(k) + " outside 0.." + std::to_string(L));
  }
  const LayerMask all = mask_all(L, true);
  std::vector<ProbeReport> out;
  for (int k : ks) out.push_back(probe_ground_truth(base, drop_above(full_set, k), all, samples, n_tokens));
  return out;
}

Tensor probe_difference(const ProbeReport& ours, const ProbeReport& baseline) {
  if (ours.n_layers != baseline.n_layers || ours.n_tokens != baseline.n_tokens ||
      ours.gt_curve.dims != baseline.gt_curve.dims) {
    throw ComparisonError("probe reports differ in shape: " + dims_to_string(ours.gt_curve.dims) + " vs " +
                          dims_to_string(baseline.gt_curve.dims));
  }
  if (ours.sample_set != baseline.sample_set) {
    throw ComparisonError("probe reports were computed on different sample sets (" + ours.sample_set + " vs " +
                          baseline.sample_set + ")");
  }
  Tensor d(ours.gt_curve.dims);
  for (std::size_t j = 0; j < d.size(); ++j) d.data[j] = ours.gt_curve.data[j] - baseline.gt_curve.data[j];
  return d;
}

std::vector<int> scaled_drop_layers(int n_layers) {
  return {n_layers * 10 / 32, n_layers * 20 / 32, n_layers * 25 / 32};
}

std::vector<double> gt_layer_curve(const ProbeReport& r) {
  std::vector<double> c(static_cast<std::size_t>(r.n_layers), 0.0);
  for (int l = 0; l < r.n_layers; ++l) {
    double s = 0;
    for (int i = 0; i < r.n_tokens; ++i) s += r.gt_curve.at(l, i);
    c[static_cast<std::size_t>(l)] = s / r.n_tokens;
  }
  return c;
}

}  // namespace lb
