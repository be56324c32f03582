// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#include "lb/metrics.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "lb/error.hpp"

namespace lb {

namespace {

constexpr std::string_view kStripped = ".,?!;:=()\"'*+-<>";

bool is_number(const std::string& w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); });
}

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw InputError(std::string(what) + ": " + std::to_string(a) + " predictions vs " + std::to_string(b) +
                     " references");
  }
}

bool contains_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty()) return true;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

using Ngram = std::vector<std::string>;

std::map<Ngram, int> ngram_counts(const std::vector<std::string>& toks, std::size_t n) {
  std::map<Ngram, int> out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) ++out[Ngram(toks.begin() + i, toks.begin() + i + n)];
  return out;
}

struct BleuCounts {
  std::array<double, 4> match{}, total{};
  double hyp_len = 0, ref_len = 0;
  void add(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
    hyp_len += static_cast<double>(hyp.size());
    ref_len += static_cast<double>(ref.size());
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto h = ngram_counts(hyp, n);
      const auto r = ngram_counts(ref, n);
      for (const auto& [g, c] : h) {
        auto it = r.find(g);
        match[n - 1] += std::min(c, it == r.end() ? 0 : it->second);
        total[n - 1] += c;
      }
    }
  }
  double score() const {
    if (hyp_len == 0 || match[0] == 0) return 0.0;
    double log_p = 0;
    for (int n = 0; n < 4; ++n) {
      const double p = (n > 0 && match[n] == 0) ? 1.0 / (total[n] + 1.0) : match[n] / total[n];
      log_p += std::log(p) / 4.0;
    }
    const double bp = hyp_len < ref_len ? std::exp(1.0 - ref_len / hyp_len) : 1.0;
    return 100.0 * bp * std::exp(log_p);
  }
};

}  // namespace

std::vector<std::string> normalize_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream is{std::string(text)};
  std::string w;
  while (is >> w) {
    std::string clean;
    for (char c : w) {
      if (kStripped.find(c) != std::string_view::npos) continue;
      clean += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (!clean.empty()) out.push_back(std::move(clean));
  }
  return out;
}

int em_contains(std::string_view pred, std::string_view gold) {
  const auto g = normalize_tokens(gold);
  if (g.empty()) throw InputError("em_contains: gold answer is empty after normalization");
  return contains_run(normalize_tokens(pred), g) ? 1 : 0;
}

int em_strict(std::string_view pred, std::string_view gold) {
  return normalize_tokens(pred) == normalize_tokens(gold) ? 1 : 0;
}

int em_final_answer(std::string_view pred, std::string_view gold) {
  const auto g = normalize_tokens(gold);
  if (g.size() != 1 || !is_number(g[0])) {
    throw InputError("em_final_answer: gold '" + std::string(gold) + "' is not a number");
  }
  const auto p = normalize_tokens(pred);
  for (auto it = p.rbegin(); it != p.rend(); ++it) {
    if (is_number(*it)) return *it == g[0] ? 1 : 0;
  }
  return 0;
}

double token_f1(std::string_view pred, std::string_view gold) {
  const auto p = normalize_tokens(pred);
  const auto g = normalize_tokens(gold);
  if (p.empty() && g.empty()) return 1.0;
  if (p.empty() || g.empty()) return 0.0;
  std::map<std::string, int> gc;
  for (const auto& w : g) ++gc[w];
  int common = 0;
  for (const auto& w : p) {
    auto it = gc.find(w);
    if (it != gc.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(p.size());
  const double recall = static_cast<double>(common) / static_cast<double>(g.size());
  return 2 * precision * recall / (precision + recall);
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(std::string_view pred, std::string_view gold) {
  const auto p = normalize_tokens(pred);
  const auto g = normalize_tokens(gold);
  if (p.empty() && g.empty()) return 1.0;
  if (p.empty() || g.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(p, g));
  if (lcs == 0) return 0.0;
  const double precision = lcs / static_cast<double>(p.size());
  const double recall = lcs / static_cast<double>(g.size());
  return 2 * precision * recall / (precision + recall);
}

double bleu_corpus(const std::vector<std::string>& preds, const std::vector<std::string>& golds) {
  check_lengths(preds.size(), golds.size(), "bleu_corpus");
  if (preds.empty()) throw InputError("bleu_corpus: empty corpus");
  BleuCounts counts;
  for (std::size_t i = 0; i < preds.size(); ++i) counts.add(normalize_tokens(preds[i]), normalize_tokens(golds[i]));
  return counts.score();
}

double accuracy(const std::vector<std::string>& preds, const std::vector<std::string>& golds) {
  check_lengths(preds.size(), golds.size(), "accuracy");
  if (preds.empty()) throw InputError("accuracy: no samples");
  int hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto p = normalize_tokens(preds[i]);
    const auto g = normalize_tokens(golds[i]);
    if (!p.empty() && !g.empty() && p.front() == g.front()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

namespace {
constexpr std::string_view kMetricNames[] = {"em", "em-strict", "em-final", "f1", "rouge-l", "bleu", "accuracy"};
}

std::string_view metric_name(Metric m) { return kMetricNames[static_cast<int>(m)]; }

Metric parse_metric(std::string_view s) {
  for (std::size_t i = 0; i < std::size(kMetricNames); ++i) {
    if (kMetricNames[i] == s) return static_cast<Metric>(i);
  }
  throw ConfigError("unknown metric '" + std::string(s) + "'");
}

Metric default_metric(Task t) {
  switch (t) {
    case Task::kvqa: return Metric::em;
    case Task::arith: return Metric::em_final;
    case Task::cipher: return Metric::bleu;
    case Task::summary: return Metric::rouge_l;
    case Task::respsel: return Metric::accuracy;
  }
  return Metric::em;
}

bool metric_compatible(Metric m, Task t) {
  switch (m) {
    case Metric::em_final: return t == Task::arith;  // needs numeric labels
    case Metric::accuracy: return t == Task::respsel || t == Task::kvqa;  // single-word labels
    case Metric::em:
    case Metric::em_strict:
    case Metric::f1:
    case Metric::rouge_l:
    case Metric::bleu: return true;
  }
  return false;
}

EvalReport evaluate(Metric m, const std::vector<std::string>& preds, const std::vector<std::string>& golds) {
  check_lengths(preds.size(), golds.size(), "evaluate");
  if (preds.empty()) throw InputError("evaluate: no samples");
  EvalReport r;
  r.metric = m;
  r.sample_count = static_cast<int>(preds.size());
  r.per_sample.resize(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    double s = 0;
    switch (m) {
      case Metric::em: s = em_contains(preds[i], golds[i]); break;
      case Metric::em_strict: s = em_strict(preds[i], golds[i]); break;
      case Metric::em_final: s = em_final_answer(preds[i], golds[i]); break;
      case Metric::f1: s = token_f1(preds[i], golds[i]); break;
      case Metric::rouge_l: s = rouge_l(preds[i], golds[i]); break;
      case Metric::bleu: s = bleu_corpus({preds[i]}, {golds[i]}) / 100.0; break;
      case Metric::accuracy: s = accuracy({preds[i]}, {golds[i]}); break;
    }
    r.per_sample[i] = s;
  }
  if (m == Metric::bleu) {
    r.score = bleu_corpus(preds, golds) / 100.0;
  } else {
    double sum = 0;
    for (double s : r.per_sample) sum += s;
    r.score = sum / static_cast<double>(preds.size());
  }
  return r;
}

ContainmentStats containment_stats(const std::vector<std::string>& ours, const std::vector<std::string>& baseline,
                                   const std::vector<std::string>& golds, Metric em_variant) {
  check_lengths(ours.size(), baseline.size(), "containment_stats");
  check_lengths(ours.size(), golds.size(), "containment_stats");
  if (em_variant != Metric::em && em_variant != Metric::em_strict && em_variant != Metric::em_final) {
    throw ConfigError("containment_stats judges correctness with an exact-match metric, got " +
                      std::string(metric_name(em_variant)));
  }
  auto correct = [&](const std::string& p, const std::string& g) {
    if (em_variant == Metric::em) return em_contains(p, g);
    if (em_variant == Metric::em_strict) return em_strict(p, g);
    return em_final_answer(p, g);
  };
  ContainmentStats st;
  st.samples = static_cast<int>(ours.size());
  int contained = 0, contained_bc = 0, ratio_n = 0;
  double ratio_sum = 0;
  for (std::size_t i = 0; i < ours.size(); ++i) {
    const auto o = normalize_tokens(ours[i]);
    const auto b = normalize_tokens(baseline[i]);
    const bool c = contains_run(o, b);
    contained += c;
    if (correct(ours[i], golds[i]) && correct(baseline[i], golds[i])) {
      ++st.both_correct;
      contained_bc += c;
    }
    if (!b.empty()) {
      ratio_sum += static_cast<double>(o.size()) / static_cast<double>(b.size());
      ++ratio_n;
    }
  }
  if (st.samples > 0) st.contained = static_cast<double>(contained) / st.samples;
  if (st.both_correct > 0) st.contained_both_correct = static_cast<double>(contained_bc) / st.both_correct;
  if (ratio_n > 0) st.length_ratio = ratio_sum / ratio_n;
  return st;
}

}  // namespace lb
