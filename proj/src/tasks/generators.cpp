// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "lb/error.hpp"
#include "lb/tasks.hpp"
#include "lb/weights.hpp"

namespace lb {

namespace {

constexpr std::string_view kTaskNames[] = {"kvqa", "arith", "cipher", "summary", "respsel"};
constexpr std::string_view kDomainNames[] = {"in", "ood-a", "ood-b"};
constexpr std::string_view kQTypeNames[] = {"none", "bridge", "comparison"};

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::string_view (&names)[N], const char* what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<E>(i);
  }
  std::string known;
  for (auto n : names) known += (known.empty() ? "" : ", ") + std::string(n);
  throw ConfigError("unknown " + std::string(what) + " '" + std::string(s) + "' (expected one of " + known + ")");
}

using Rng = std::mt19937_64;

Rng split_rng(std::uint64_t seed, Task task, int split) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(task), static_cast<std::uint32_t>(split)};
  return Rng(seq);
}

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

template <typename V>
const auto& pick(Rng& rng, const V& v) {
  return v[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(v.size()) - 1))];
}

// k distinct indices from [0, n).
std::vector<int> distinct(Rng& rng, int n, int k) {
  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  for (int i = 0; i < k; ++i) std::swap(all[i], all[uniform(rng, i, n - 1)]);
  all.resize(k);
  return all;
}

std::string join(const std::vector<std::string>& words, std::string_view sep = " ") {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += sep;
    out += w;
  }
  return out;
}

struct Draft {
  std::string prompt, reference, label;
  QType qtype = QType::none;
};

// Fills the three splits in order, skipping any prompt already produced so
// that no prompt string appears twice across the dataset.
Dataset fill_splits(const TaskConfig& cfg, std::uint64_t seed,
                    const std::function<Draft(Rng&, int index, int split_size)>& make) {
  cfg.validate();
  Dataset ds;
  ds.config = cfg;
  ds.seed = seed;
  const Vocab& vocab = default_vocab();
  std::unordered_set<std::string> seen;
  const int sizes[3] = {cfg.sizes.train, cfg.sizes.validation, cfg.sizes.test};
  std::vector<Sample>* outs[3] = {&ds.train, &ds.validation, &ds.test};
  for (int split = 0; split < 3; ++split) {
    Rng rng = split_rng(seed, cfg.task, split);
    const int n = sizes[split];
    int attempts = 0;
    while (static_cast<int>(outs[split]->size()) < n) {
      if (++attempts > 50 * n + 1000) {
        throw ConfigError("cannot draw " + std::to_string(n) + " distinct " + std::string(task_name(cfg.task)) +
                          " prompts; the template space is too small");
      }
      Draft d = make(rng, static_cast<int>(outs[split]->size()), n);
      if (!seen.insert(d.prompt).second) continue;
      Sample s = make_sample(vocab, d.prompt, d.reference, d.label, cfg.task, cfg.domain, d.qtype);
      if (static_cast<int>(s.prompt.size() + s.reference.size()) > cfg.max_seq) {
        throw ConfigError("generated sample exceeds max_seq " + std::to_string(cfg.max_seq));
      }
      outs[split]->push_back(std::move(s));
    }
  }
  return ds;
}

// Question-type plan for a split: exact counts from the ratios, interleaved
// by a fixed stride so every prefix of the split is roughly balanced.
QType planned_qtype(const TaskConfig& cfg, int index, int n) {
  const int n_bridge = static_cast<int>(std::lround(cfg.bridge_ratio * n));
  const int n_comp = static_cast<int>(std::lround(cfg.comparison_ratio * n));
  // Position in a permutation of 0..n-1 built from a stride coprime with n.
  int stride = 7919 % std::max(n, 1);
  while (n > 1 && std::gcd(stride, n) != 1) ++stride;
  const long slot = n > 1 ? (static_cast<long>(index) * stride) % n : 0;
  if (slot < n_bridge) return QType::bridge;
  if (slot < n_bridge + n_comp) return QType::comparison;
  return QType::none;
}

}  // namespace

std::string_view task_name(Task t) { return kTaskNames[static_cast<int>(t)]; }
Task parse_task(std::string_view s) { return parse_enum<Task>(s, kTaskNames, "task"); }
std::string_view domain_name(Domain d) { return kDomainNames[static_cast<int>(d)]; }
Domain parse_domain(std::string_view s) { return parse_enum<Domain>(s, kDomainNames, "domain"); }
std::string_view qtype_name(QType q) { return kQTypeNames[static_cast<int>(q)]; }
QType parse_qtype(std::string_view s) { return parse_enum<QType>(s, kQTypeNames, "question type"); }

void TaskConfig::validate() const {
  if (sizes.train < 1 || sizes.validation < 1 || sizes.test < 1) throw ConfigError("task split sizes must be positive");
  if (facts_per_doc < 2 || facts_per_doc > 8) throw ConfigError("facts_per_doc must be in 2..8");
  if (hops < 2 || hops > 3) throw ConfigError("hops must be 2 or 3");
  if (bridge_ratio < 0 || comparison_ratio < 0 || bridge_ratio + comparison_ratio > 1) {
    throw ConfigError("bridge_ratio and comparison_ratio must be non-negative and sum to at most 1");
  }
  if (min_turns < 2 || max_turns < min_turns || max_turns > 8) throw ConfigError("turn bounds must satisfy 2 <= min <= max <= 8");
  if (max_seq < 2) throw ConfigError("max_seq must be at least 2");
}

const std::vector<Sample>& Dataset::split(std::string_view name) const {
  if (name == "train") return train;
  if (name == "validation") return validation;
  if (name == "test") return test;
  throw ConfigError("unknown split '" + std::string(name) + "'");
}

std::vector<Sample>& Dataset::split(std::string_view name) {
  return const_cast<std::vector<Sample>&>(std::as_const(*this).split(name));
}

Sample make_sample(const Vocab& vocab, std::string prompt_text, std::string reference_text, std::string label,
                   Task task, Domain domain, QType qtype) {
  Sample s;
  s.prompt.push_back(kBosToken);
  for (int t : vocab.encode(prompt_text)) s.prompt.push_back(t);
  s.reference = vocab.encode(reference_text);
  s.reference.push_back(kEosToken);
  s.prompt_text = std::move(prompt_text);
  s.reference_text = std::move(reference_text);
  s.label = std::move(label);
  s.task = task;
  s.domain = domain;
  s.qtype = qtype;
  return s;
}

// ---------------------------------------------------------------- kvqa

Dataset gen_kvqa(const TaskConfig& cfg, std::uint64_t seed) {
  const Lexicon& lex = default_lexicon();
  const int f = cfg.facts_per_doc;
  return fill_splits(cfg, seed, [&](Rng& rng, int index, int n) {
    Draft d;
    d.qtype = planned_qtype(cfg, index, n);
    const auto key_idx = distinct(rng, static_cast<int>(lex.keys.size()), 2 * f);
    std::vector<std::string> keys;
    for (int i : key_idx) keys.push_back(lex.keys[i]);
    // Numeric values, distinct within the sample so comparisons never tie.
    const auto num_idx = distinct(rng, kMaxNumber + 1, 2 * f);
    std::vector<std::string> values;
    for (int v : num_idx) values.push_back(number_word(v));
    // keys[0..f) live in doc 1, keys[f..2f) in doc 2.
    std::string question;
    if (d.qtype == QType::none) {
      const int q = uniform(rng, 0, 2 * f - 1);
      question = "what is " + keys[q] + " ?";
      d.label = values[q];
    } else if (d.qtype == QType::bridge) {
      // Chain alternates documents: doc1 key -> doc2 key [-> doc1 key] -> number.
      const int a = uniform(rng, 0, f - 1);
      int b = uniform(rng, f, 2 * f - 1);
      values[a] = keys[b];
      int last = b;
      if (cfg.hops == 3) {
        int c = uniform(rng, 0, f - 2);
        if (c >= a) ++c;
        values[b] = keys[c];
        last = c;
      }
      question = "follow " + keys[a] + " ?";
      d.label = values[last];
    } else {
      const int a = uniform(rng, 0, f - 1);
      const int b = uniform(rng, f, 2 * f - 1);
      const int x = uniform(rng, 0, 1) ? a : b;
      const int y = x == a ? b : a;
      const bool x_larger = std::stoi(values[x]) > std::stoi(values[y]);
      if (index % 2 == 0) {
        question = "is " + keys[x] + " larger than " + keys[y] + " ?";
        d.label = x_larger ? "yes" : "no";
      } else {
        question = "which is larger " + keys[x] + " or " + keys[y] + " ?";
        d.label = x_larger ? keys[x] : keys[y];
      }
    }
    std::ostringstream p;
    for (int doc = 0; doc < 2; ++doc) {
      p << (doc ? " " : "") << "doc :";
      for (int i = 0; i < f; ++i) p << ' ' << keys[doc * f + i] << " = " << values[doc * f + i] << (i + 1 < f ? " ;" : " .");
    }
    p << " question : " << question;
    d.prompt = p.str();
    d.reference = "answer = " + d.label;
    return d;
  });
}

// ---------------------------------------------------------------- arith

Dataset gen_arith(const TaskConfig& cfg, std::uint64_t seed) {
  return fill_splits(cfg, seed, [&](Rng& rng, int, int) {
    // a op1 b = r1 ; r1 op2 c = r2, every intermediate kept in 0..kMaxNumber.
    auto step = [&](int lhs, char& op, int& rhs) {
      op = uniform(rng, 0, 1) ? '+' : '-';
      if (op == '+') {
        rhs = uniform(rng, 0, kMaxNumber - lhs);
        return lhs + rhs;
      }
      rhs = uniform(rng, 0, lhs);
      return lhs - rhs;
    };
    const int a = uniform(rng, 0, kMaxNumber);
    char op1, op2;
    int b, c;
    const int r1 = step(a, op1, b);
    const int r2 = step(r1, op2, c);
    std::ostringstream p, r;
    p << a << ' ' << op1 << ' ' << b << ' ' << op2 << ' ' << c << " = ?";
    r << a << ' ' << op1 << ' ' << b << " = " << r1 << " ; " << r1 << ' ' << op2 << ' ' << c << " = " << r2
      << " ; answer = " << r2;
    return Draft{p.str(), r.str(), std::to_string(r2), QType::none};
  });
}

// ---------------------------------------------------------------- cipher

namespace {

// Source sentence "det [adj] noun verb det [adj] noun" with the noun topic
// mix set by the domain.
std::vector<std::string> source_sentence(Rng& rng, Domain domain) {
  const Lexicon& lex = default_lexicon();
  const std::vector<std::string>* topics[3] = {&lex.nouns_home, &lex.nouns_general, &lex.nouns_bio};
  const int main_topic = static_cast<int>(domain);
  auto noun = [&]() -> const std::string& {
    const int r = uniform(rng, 0, 99);
    int t = main_topic;
    if (r >= 85) t = (main_topic + (r < 95 ? 1 : 2)) % 3;
    return pick(rng, *topics[t]);
  };
  std::vector<std::string> words;
  for (int part = 0; part < 2; ++part) {
    words.push_back(pick(rng, lex.determiners));
    if (uniform(rng, 0, 1)) words.push_back(pick(rng, lex.adjectives));
    words.push_back(noun());
    if (part == 0) words.push_back(pick(rng, lex.verbs));
  }
  return words;
}

bool is_adjective(const std::string& w) {
  const auto& adj = default_lexicon().adjectives;
  return std::find(adj.begin(), adj.end(), w) != adj.end();
}

// Word-by-word substitution, with each adjective moved after its noun.
std::vector<std::string> encipher(const std::vector<std::string>& src) {
  const auto& cipher = default_lexicon().cipher;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (is_adjective(src[i]) && i + 1 < src.size()) {
      out.push_back(cipher.at(src[i + 1]));
      out.push_back(cipher.at(src[i]));
      ++i;
    } else {
      out.push_back(cipher.at(src[i]));
    }
  }
  return out;
}

}  // namespace

Dataset gen_cipher_mt(const TaskConfig& cfg, std::uint64_t seed) {
  return fill_splits(cfg, seed, [&](Rng& rng, int, int) {
    const auto src = source_sentence(rng, cfg.domain);
    const std::string target = join(encipher(src));
    return Draft{"translate : " + join(src) + " ->", target, target, QType::none};
  });
}

// ---------------------------------------------------------------- summary

Dataset gen_salient_summary(const TaskConfig& cfg, std::uint64_t seed) {
  const Lexicon& lex = default_lexicon();
  return fill_splits(cfg, seed, [&](Rng& rng, int, int) {
    const int turns = uniform(rng, cfg.min_turns, cfg.max_turns);
    const int salient = uniform(rng, 1, std::min(3, turns - 1));
    // Which turns carry a marked fact.
    auto marked = distinct(rng, turns, salient);
    std::sort(marked.begin(), marked.end());
    const auto speakers = distinct(rng, static_cast<int>(lex.names.size()), 2);
    std::vector<std::string> turn_text, facts;
    for (int t = 0; t < turns; ++t) {
      const std::string& who = lex.names[speakers[t % 2]];
      const bool is_marked = std::binary_search(marked.begin(), marked.end(), t);
      auto fact = [&]() {
        std::string s = pick(rng, lex.verbs);
        if (uniform(rng, 0, 1)) s += " " + pick(rng, lex.adjectives);
        return s + " " + pick(rng, lex.nouns_home);
      };
      if (is_marked) {
        const std::string f = fact();
        turn_text.push_back(who + " : * " + f + " ;");
        facts.push_back(who + " " + f);
        continue;
      }
      switch (uniform(rng, 0, 3)) {
        case 0: turn_text.push_back(who + " : hello ;"); break;
        case 1: turn_text.push_back(who + " : ok thanks ;"); break;
        case 2: turn_text.push_back(who + " : how many " + pick(rng, lex.nouns_home) + " ?"); break;
        default: turn_text.push_back(who + " : " + fact() + " ;"); break;  // unmarked distractor
      }
    }
    const std::string reference = join(facts, " , ");
    return Draft{"dialogue : " + join(turn_text) + " summary :", reference, reference, QType::none};
  });
}

// ---------------------------------------------------------------- respsel

Dataset gen_resp_select(const TaskConfig& cfg, std::uint64_t seed) {
  const Lexicon& lex = default_lexicon();
  struct Dialogue {
    std::string context;
    std::string noun;
    int count;
  };
  auto dialogue = [&](Rng& rng) {
    const auto sp = distinct(rng, static_cast<int>(lex.names.size()), 2);
    Dialogue d{"", pick(rng, lex.nouns_home), uniform(rng, 1, 20)};
    d.context = "dialogue : " + lex.names[sp[0]] + " : needs " + std::to_string(d.count) + " " + d.noun + " ; " +
                lex.names[sp[1]] + " : how many " + d.noun + " ?";
    return d;
  };
  return fill_splits(cfg, seed, [&](Rng& rng, int index, int) {
    const Dialogue d = dialogue(rng);
    std::string noun = d.noun;
    int count = d.count;
    const bool positive = index % 2 == 0;
    if (!positive) {
      // Swap in the reply of another dialogue that does not fit this one.
      Dialogue other = dialogue(rng);
      while (other.noun == d.noun && other.count == d.count) other = dialogue(rng);
      noun = other.noun;
      count = other.count;
    }
    const std::string label = positive ? "yes" : "no";
    return Draft{d.context + " reply : " + std::to_string(count) + " " + noun + " . fit ?", label, label,
                 QType::none};
  });
}

Dataset generate_dataset(const TaskConfig& cfg, std::uint64_t seed) {
  switch (cfg.task) {
    case Task::kvqa: return gen_kvqa(cfg, seed);
    case Task::arith: return gen_arith(cfg, seed);
    case Task::cipher: return gen_cipher_mt(cfg, seed);
    case Task::summary: return gen_salient_summary(cfg, seed);
    case Task::respsel: return gen_resp_select(cfg, seed);
  }
  throw ConfigError("unknown task");
}

// ---------------------------------------------------------------- oracles

namespace {

std::vector<std::string> words_of(const std::string& text) {
  std::istringstream is(text);
  std::vector<std::string> out;
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

bool is_number(const std::string& w) {
  return !w.empty() && w.size() <= 3 && std::all_of(w.begin(), w.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string kvqa_oracle(const std::vector<std::string>& w) {
  std::map<std::string, std::string> facts;
  std::size_t q = 0;
  for (std::size_t i = 0; i + 2 < w.size(); ++i) {
    if (w[i] == "question") {
      q = i + 2;
      break;
    }
    if (w[i + 1] == "=") facts[w[i]] = w[i + 2];
  }
  if (q == 0 || q >= w.size()) throw InputError("kvqa prompt has no question");
  std::string ans;
  if (w[q] == "what") {
    ans = facts.at(w[q + 2]);
  } else if (w[q] == "follow") {
    ans = facts.at(w[q + 1]);
    for (int guard = 0; !is_number(ans) && guard < 8; ++guard) ans = facts.at(ans);
  } else if (w[q] == "is") {
    ans = std::stoi(facts.at(w[q + 1])) > std::stoi(facts.at(w[q + 4])) ? "yes" : "no";
  } else {
    const auto& x = w[q + 3];
    const auto& y = w[q + 5];
    ans = std::stoi(facts.at(x)) > std::stoi(facts.at(y)) ? x : y;
  }
  return "answer = " + ans;
}

std::string arith_oracle(const std::vector<std::string>& w) {
  if (w.size() < 7) throw InputError("arith prompt too short");
  auto apply = [](int l, const std::string& op, int r) { return op == "+" ? l + r : l - r; };
  const int a = std::stoi(w[0]), b = std::stoi(w[2]), c = std::stoi(w[4]);
  const int r1 = apply(a, w[1], b);
  const int r2 = apply(r1, w[3], c);
  std::ostringstream r;
  r << a << ' ' << w[1] << ' ' << b << " = " << r1 << " ; " << r1 << ' ' << w[3] << ' ' << c << " = " << r2
    << " ; answer = " << r2;
  return r.str();
}

std::string cipher_oracle(const std::vector<std::string>& w) {
  std::vector<std::string> src;
  for (std::size_t i = 2; i < w.size() && w[i] != "->"; ++i) src.push_back(w[i]);
  return join(encipher(src));
}

std::string summary_oracle(const std::vector<std::string>& w) {
  // Turns look like "name : body ;". A body starting with "*" is a fact.
  std::vector<std::string> facts;
  for (std::size_t i = 2; i + 2 < w.size(); ++i) {
    if (w[i + 1] != ":" || w[i + 2] != "*") continue;
    std::string fact = w[i];
    for (std::size_t j = i + 3; j < w.size() && w[j] != ";" && w[j] != "?"; ++j) fact += " " + w[j];
    facts.push_back(fact);
  }
  return join(facts, " , ");
}

std::string respsel_oracle(const std::vector<std::string>& w) {
  auto need = std::find(w.begin(), w.end(), "needs");
  auto reply = std::find(w.begin(), w.end(), "reply");
  if (need == w.end() || reply == w.end() || need + 2 >= w.end() || reply + 3 >= w.end()) {
    throw InputError("respsel prompt missing need or reply");
  }
  return (need[1] == reply[2] && need[2] == reply[3]) ? "yes" : "no";
}

}  // namespace

std::string oracle_output(const Sample& s) {
  const auto w = words_of(s.prompt_text);
  switch (s.task) {
    case Task::kvqa: return kvqa_oracle(w);
    case Task::arith: return arith_oracle(w);
    case Task::cipher: return cipher_oracle(w);
    case Task::summary: return summary_oracle(w);
    case Task::respsel: return respsel_oracle(w);
  }
  throw InputError("unknown task");
}

}  // namespace lb
