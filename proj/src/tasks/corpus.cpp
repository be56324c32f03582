// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "lb/error.hpp"
#include "lb/tasks.hpp"
#include "lb/weights.hpp"

namespace lb {

namespace {

using Rng = std::mt19937_64;

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

template <typename V>
const auto& pick(Rng& rng, const V& v) {
  return v[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(v.size()) - 1))];
}

class Segments {
 public:
  explicit Segments(Rng& rng) : rng_(rng), lex_(default_lexicon()) {}

  std::string next() {
    switch (uniform(rng_, 0, 11)) {
      case 0:
      case 1: return sentence();
      case 2:
      case 3: return stanza();
      case 4:
      case 5: return quiz();
      case 6: return arithmetic();
      case 7: return comparison();
      case 8:
      case 9: return glossary();
      default: return dialogue();
    }
  }

 private:
  const std::string& noun() {
    const int r = uniform(rng_, 0, 3);
    return pick(rng_, r < 2 ? lex_.nouns_home : r == 2 ? lex_.nouns_general : lex_.nouns_bio);
  }
  std::string phrase() {
    std::string s = pick(rng_, lex_.determiners);
    if (uniform(rng_, 0, 1)) s += " " + pick(rng_, lex_.adjectives);
    return s + " " + noun();
  }
  std::string num() { return number_word(uniform(rng_, 0, kMaxNumber)); }

  std::string sentence() { return phrase() + " " + pick(rng_, lex_.verbs) + " " + phrase() + " ."; }

  // Key/value facts, then one of them restated so the model learns to copy a
  // value from earlier in the context.
  std::string stanza() {
    const int n = uniform(rng_, 2, 4);
    std::vector<std::string> keys, vals;
    std::string s = "doc :";
    for (int i = 0; i < n; ++i) {
      keys.push_back(pick(rng_, lex_.keys));
      vals.push_back(uniform(rng_, 0, 4) == 0 && i > 0 ? keys[i - 1] : num());
      s += " " + keys[i] + " = " + vals[i] + (i + 1 < n ? " ;" : " .");
    }
    const int q = uniform(rng_, 0, n - 1);
    return s + " " + keys[q] + " = " + vals[q] + " .";
  }

  // Distinct keys, then a direct lookup question in the "answer = v" form.
  std::string quiz() {
    const int n = uniform(rng_, 2, 4);
    std::vector<std::string> keys, vals;
    std::string s = "doc :";
    for (int i = 0; i < n; ++i) {
      std::string k;
      do k = pick(rng_, lex_.keys);
      while (std::find(keys.begin(), keys.end(), k) != keys.end());
      keys.push_back(k);
      vals.push_back(num());
      s += " " + keys[i] + " = " + vals[i] + (i + 1 < n ? " ;" : " .");
    }
    const int q = uniform(rng_, 0, n - 1);
    return s + " question : what is " + keys[q] + " ? answer = " + vals[q] + " .";
  }

  std::string arithmetic() {
    const int a = uniform(rng_, 0, kMaxNumber);
    if (uniform(rng_, 0, 1)) {
      const int b = uniform(rng_, 0, kMaxNumber - a);
      return std::to_string(a) + " + " + std::to_string(b) + " = " + std::to_string(a + b) + " .";
    }
    const int b = uniform(rng_, 0, a);
    return std::to_string(a) + " - " + std::to_string(b) + " = " + std::to_string(a - b) + " .";
  }

  std::string comparison() {
    int a = uniform(rng_, 0, kMaxNumber), b = uniform(rng_, 0, kMaxNumber);
    if (a == b) b = (b + 1) % (kMaxNumber + 1);
    if (a < b) std::swap(a, b);
    return std::to_string(a) + " is larger than " + std::to_string(b) + " .";
  }

  std::string glossary() {
    const int n = uniform(rng_, 2, 4);
    std::string s;
    for (int i = 0; i < n; ++i) {
      auto it = lex_.cipher.begin();
      std::advance(it, uniform(rng_, 0, static_cast<int>(lex_.cipher.size()) - 1));
      s += (i ? " " : "") + it->first + " -> " + it->second + (i + 1 < n ? " ;" : " .");
    }
    return s;
  }

  std::string dialogue() {
    const std::string& a = pick(rng_, lex_.names);
    const std::string& b = pick(rng_, lex_.names);
    const std::string& n = pick(rng_, lex_.nouns_home);
    switch (uniform(rng_, 0, 2)) {
      case 0: return a + " : " + pick(rng_, lex_.verbs) + " " + phrase() + " ; " + b + " : ok thanks ;";
      case 1: {
        const std::string c = number_word(uniform(rng_, 1, 20));
        return a + " : needs " + c + " " + n + " ; " + b + " : how many " + n + " ? " + a + " : " + c + " " + n + " .";
      }
      default: return a + " : hello ; " + b + " : " + pick(rng_, lex_.verbs) + " " + n + " ;";
    }
  }

  Rng& rng_;
  const Lexicon& lex_;
};

}  // namespace

std::vector<std::vector<int>> gen_pretrain_corpus(std::uint64_t seed, long n_tokens, int seq_len) {
  if (seq_len < 16) throw InputError("pretraining sequence length must be at least 16");
  if (n_tokens < 10L * seq_len) throw InputError("pretraining corpus needs at least 10 * seq_len tokens");
  std::seed_seq sseq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x70726574u};
  Rng rng(sseq);
  Segments segments(rng);
  const Vocab& vocab = default_vocab();
  std::vector<std::vector<int>> corpus;
  long total = 0;
  std::vector<int> pending;
  while (total < n_tokens) {
    std::vector<int> seq{kBosToken};
    for (;;) {
      if (pending.empty()) pending = vocab.encode(segments.next());
      if (seq.size() + pending.size() + 1 > static_cast<std::size_t>(seq_len)) break;
      seq.insert(seq.end(), pending.begin(), pending.end());
      pending.clear();
    }
    if (seq.size() == 1) {
      pending.clear();  // a segment longer than the window; drop it
      continue;
    }
    seq.push_back(kEosToken);
    total += static_cast<long>(seq.size());
    corpus.push_back(std::move(seq));
  }
  return corpus;
}

}  // namespace lb
