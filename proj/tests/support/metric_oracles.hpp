// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

// Slow, obviously-correct re-implementations of the text metrics, used to
// cross-check the library on small random inputs.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "lb/metrics.hpp"

namespace lb::testing {

using Words = std::vector<std::string>;

inline std::string join_words(const Words& w) {
  std::string s;
  for (const auto& x : w) s += (s.empty() ? "" : " ") + x;
  return s;
}

// Longest common subsequence by enumerating every subsequence of a.
inline std::size_t lcs_brute(const Words& a, const Words& b) {
  std::size_t best = 0;
  const std::size_t n = a.size();
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    Words sub;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) sub.push_back(a[i]);
    }
    std::size_t j = 0;
    for (const auto& w : b) {
      if (j < sub.size() && sub[j] == w) ++j;
    }
    if (j == sub.size()) best = std::max(best, sub.size());
  }
  return best;
}

inline double rouge_brute(const Words& p, const Words& g) {
  if (p.empty() && g.empty()) return 1.0;
  if (p.empty() || g.empty()) return 0.0;
  const double l = static_cast<double>(lcs_brute(p, g));
  if (l == 0) return 0.0;
  const double pr = l / p.size(), rc = l / g.size();
  return 2 * pr * rc / (pr + rc);
}

inline double f1_brute(Words p, Words g) {
  if (p.empty() && g.empty()) return 1.0;
  if (p.empty() || g.empty()) return 0.0;
  std::sort(p.begin(), p.end());
  std::sort(g.begin(), g.end());
  std::size_t i = 0, j = 0, common = 0;
  while (i < p.size() && j < g.size()) {
    if (p[i] == g[j]) ++common, ++i, ++j;
    else if (p[i] < g[j]) ++i;
    else ++j;
  }
  if (common == 0) return 0.0;
  const double pr = static_cast<double>(common) / p.size(), rc = static_cast<double>(common) / g.size();
  return 2 * pr * rc / (pr + rc);
}

inline int contains_brute(const Words& hay, const Words& needle) {
  if (needle.size() > hay.size()) return 0;
  for (std::size_t s = 0; s + needle.size() <= hay.size(); ++s) {
    bool ok = true;
    for (std::size_t k = 0; k < needle.size() && ok; ++k) ok = hay[s + k] == needle[k];
    if (ok) return 1;
  }
  return 0;
}

inline int final_answer_brute(const Words& p, const std::string& gold) {
  std::string last;
  for (const auto& w : p) {
    if (!w.empty() && std::all_of(w.begin(), w.end(), [](char c) { return c >= '0' && c <= '9'; })) last = w;
  }
  return !last.empty() && last == gold ? 1 : 0;
}

// Clipped n-gram counting with plain scans (no maps), summed over the corpus.
inline double bleu_brute(const std::vector<Words>& hyps, const std::vector<Words>& refs) {
  double match[4] = {0, 0, 0, 0}, total[4] = {0, 0, 0, 0}, hl = 0, rl = 0;
  auto count = [](const Words& toks, const Words& gram) {
    int c = 0;
    for (std::size_t i = 0; i + gram.size() <= toks.size(); ++i) {
      if (std::equal(gram.begin(), gram.end(), toks.begin() + i)) ++c;
    }
    return c;
  };
  for (std::size_t s = 0; s < hyps.size(); ++s) {
    const Words& h = hyps[s];
    const Words& r = refs[s];
    hl += h.size();
    rl += r.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      std::vector<Words> seen;
      for (std::size_t i = 0; i + n <= h.size(); ++i) {
        Words gram(h.begin() + i, h.begin() + i + n);
        total[n - 1] += 1;
        if (std::find(seen.begin(), seen.end(), gram) != seen.end()) continue;
        seen.push_back(gram);
        match[n - 1] += std::min(count(h, gram), count(r, gram));
      }
    }
  }
  if (hl == 0 || match[0] == 0) return 0.0;
  double prod = 1;
  for (int n = 0; n < 4; ++n) {
    const double p = (n > 0 && match[n] == 0) ? 1.0 / (total[n] + 1) : match[n] / total[n];
    prod *= p;
  }
  const double bp = hl < rl ? std::exp(1 - rl / hl) : 1.0;
  return 100.0 * bp * std::pow(prod, 0.25);
}

// Random token strings over a tiny alphabet so that matches are common, with
// punctuation sprinkled in to exercise normalization.
inline Words random_words(std::mt19937_64& rng, int max_len, bool digits = false) {
  static const Words letters = {"a", "b", "c", "d", "e"};
  static const Words numbers = {"1", "2", "3", "17"};
  std::uniform_int_distribution<int> len(0, max_len);
  std::uniform_int_distribution<int> pick(0, 99);
  Words out(static_cast<std::size_t>(len(rng)));
  for (auto& w : out) {
    const int r = pick(rng);
    const Words& src = digits && r < 40 ? numbers : letters;
    w = src[static_cast<std::size_t>(r) % src.size()];
  }
  return out;
}

inline std::string with_noise(const Words& w, std::mt19937_64& rng) {
  static const std::vector<std::string> marks = {"", "", "", ".", ",", "?"};
  std::uniform_int_distribution<int> pick(0, static_cast<int>(marks.size()) - 1);
  std::string s;
  for (const auto& x : w) {
    std::string tok = x;
    if (pick(rng) == 3) tok[0] = static_cast<char>(std::toupper(tok[0]));
    s += (s.empty() ? "" : " ") + tok + marks[static_cast<std::size_t>(pick(rng))];
  }
  return s;
}

}  // namespace lb::testing
