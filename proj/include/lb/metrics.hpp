// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

// Text metrics over whitespace tokens after a frozen normalization: lowercase,
// punctuation characters . , ? ! ; : = ( ) " ' * + - < > stripped from every token,
// tokens that become empty (including "->", "+" and "-") dropped. Changing
// the table is a breaking change and must bump kNormalizationVersion.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lb/tasks.hpp"

namespace lb {

inline constexpr std::string_view kNormalizationVersion = "v1";

std::vector<std::string> normalize_tokens(std::string_view text);

// 1 when the normalized gold occurs contiguously in the normalized
// prediction. Throws InputError when gold normalizes to nothing.
int em_contains(std::string_view pred, std::string_view gold);
// 1 when the normalized token sequences are equal.
int em_strict(std::string_view pred, std::string_view gold);
// 1 when the last number token of pred equals gold. Throws InputError when
// gold is not a number.
int em_final_answer(std::string_view pred, std::string_view gold);

double token_f1(std::string_view pred, std::string_view gold);

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);
double rouge_l(std::string_view pred, std::string_view gold);

// Corpus BLEU on the 0..100 scale: clipped n-gram precisions for n = 1..4
// summed over the corpus, geometric mean, brevity penalty. A higher order
// with no match gets (0 + 1) / (count + 1).
double bleu_corpus(const std::vector<std::string>& preds, const std::vector<std::string>& golds);

// Mean equality of the first normalized prediction word with the normalized
// label.
double accuracy(const std::vector<std::string>& preds, const std::vector<std::string>& golds);

enum class Metric { em, em_strict, em_final, f1, rouge_l, bleu, accuracy };

std::string_view metric_name(Metric m);
Metric parse_metric(std::string_view s);  // throws ConfigError
Metric default_metric(Task t);
bool metric_compatible(Metric m, Task t);

// score is in [0, 1]; reporting multiplies by 100. For BLEU the per-sample
// entries are sentence-level BLEU / 100 while score is corpus BLEU / 100;
// every other metric's score is the mean of its per-sample entries.
struct EvalReport {
  Metric metric = Metric::em;
  double score = 0;
  std::vector<double> per_sample;
  int sample_count = 0;
};

EvalReport evaluate(Metric m, const std::vector<std::string>& preds, const std::vector<std::string>& golds);

struct ContainmentStats {
  double contained = 0;               // fraction of samples where ours contains baseline
  double contained_both_correct = 0;  // same fraction among samples both systems get right
  int both_correct = 0;
  double length_ratio = 0;            // mean |ours| / |baseline| over non-empty baselines
  int samples = 0;
};

// Correctness is judged with `em_variant` (em, em_strict or em_final).
ContainmentStats containment_stats(const std::vector<std::string>& ours, const std::vector<std::string>& baseline,
                                   const std::vector<std::string>& golds, Metric em_variant);

}  // namespace lb
