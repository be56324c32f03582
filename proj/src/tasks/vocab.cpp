// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#include "lb/vocab.hpp"

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "lb/error.hpp"
#include "lb/weights.hpp"

namespace lb {

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (int i = 0; i < size(); ++i) {
    const std::string& t = tokens_[i];
    if (t.empty() || t.find_first_of(" \t\r\n") != std::string::npos) {
      throw InputError("vocabulary entry " + std::to_string(i) + " is empty or contains whitespace");
    }
    if (!ids_.emplace(t, i).second) throw InputError("duplicate vocabulary entry '" + t + "'");
  }
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size()) throw InputError("token id " + std::to_string(id) + " outside vocabulary");
  return tokens_[id];
}

int Vocab::id(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  if (it == ids_.end()) throw InputError("word '" + std::string(word) + "' is not in the vocabulary");
  return it->second;
}

std::vector<int> Vocab::encode(std::string_view text) const {
  std::vector<int> out;
  std::istringstream is{std::string(text)};
  std::string w;
  while (is >> w) out.push_back(id(w));
  return out;
}

std::string Vocab::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int t : ids) {
    if (t == kPadToken || t == kBosToken || t == kEosToken) continue;
    if (!out.empty()) out += ' ';
    out += token(t);
  }
  return out;
}

namespace {

// Scaffolding shared by the task templates and the corpus grammar.
const std::vector<std::string> kFormatWords = {
    ":",     ";",     ",",       ".",        "?",        "=",     "+",      "-",    "->",
    "*",     "doc",   "question", "answer",  "what",     "is",    "follow", "larger", "than",
    "which", "or",    "yes",     "no",       "translate", "dialogue", "summary", "reply", "fit",
    "hello", "thanks", "ok",     "how",      "many",     "and",   "at",     "step", "link"};

const std::vector<std::string> kNames = {"anna", "ben",  "carl", "dina", "emma", "finn", "gina", "hugo",
                                         "ivan", "jade", "kai",  "lena", "mia",  "nora", "otto", "pia",
                                         "quinn", "rosa", "sam", "tara", "uma",  "vera", "will", "zoe"};

const std::vector<std::string> kDeterminers = {"the", "a", "this", "every"};

const std::vector<std::string> kNounsHome = {
    "cat",   "dog",  "bird",  "fish",   "horse", "cow",   "mouse",  "rabbit", "table", "chair",
    "door",  "window", "bed", "cup",    "plate", "spoon", "bread",  "milk",   "apple", "egg",
    "garden", "house", "kitchen", "car", "boat", "book",  "lamp",   "box",    "bag",   "hat"};

const std::vector<std::string> kNounsGeneral = {"idea",   "plan",  "rule",   "market", "city",   "law",   "report",
                                                "change", "goal",  "price",  "team",   "nation", "system", "method",
                                                "result", "story", "policy", "trade",  "event",  "budget"};

const std::vector<std::string> kNounsBio = {"cell",     "gene",     "protein",  "virus",  "enzyme", "tissue", "organ",
                                            "blood",    "neuron",   "membrane", "receptor", "bacteria", "dose", "tumor",
                                            "antibody", "molecule", "liver",    "kidney", "lung",   "muscle"};

const std::vector<std::string> kVerbs = {"sees",  "likes", "takes",   "finds",   "makes", "holds", "moves",
                                         "needs", "wants", "keeps",   "opens",   "breaks", "builds", "carries",
                                         "follows", "shows", "tests", "binds",   "blocks", "changes"};

const std::vector<std::string> kAdjectives = {"red",  "big",  "small", "old",   "new",  "green", "fast",
                                              "slow", "bright", "dark", "warm", "cold", "soft",  "hard",
                                              "long", "short", "clean", "rare", "strong", "weak"};

// Deterministic Fisher-Yates on raw mt19937 output, so the frozen word lists
// do not depend on a standard library's distribution implementation.
template <typename V>
void fixed_shuffle(V& v, std::uint32_t seed) {
  std::mt19937 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

}  // namespace

Vocab build_vocab(int size, Lexicon* lexicon) {
  std::vector<std::string> tokens = {"<pad>", "<bos>", "<eos>", "<unk>"};
  std::set<std::string> used(tokens.begin(), tokens.end());
  auto add = [&](const std::string& w) {
    if (!used.insert(w).second) throw ConfigError("vocabulary word '" + w + "' listed twice");
    tokens.push_back(w);
  };
  Lexicon lex;
  for (const auto& w : kFormatWords) add(w);
  for (int n = 0; n <= kMaxNumber; ++n) add(number_word(n));
  for (const auto& w : kNames) add(w);
  lex.names = kNames;
  lex.determiners = kDeterminers;
  lex.nouns_home = kNounsHome;
  lex.nouns_general = kNounsGeneral;
  lex.nouns_bio = kNounsBio;
  lex.verbs = kVerbs;
  lex.adjectives = kAdjectives;
  std::vector<std::string> source;
  for (const auto* list : {&kDeterminers, &kNounsHome, &kNounsGeneral, &kNounsBio, &kVerbs, &kAdjectives}) {
    for (const auto& w : *list) {
      add(w);
      source.push_back(w);
    }
  }

  // Target-side words: consonant-vowel-consonant-vowel pseudo-words.
  const std::string cons = "bdfgklmnprstvz";
  const std::string vows = "aeiou";
  std::vector<std::string> cvcv;
  for (char c1 : cons)
    for (char v1 : vows)
      for (char c2 : cons)
        for (char v2 : vows) cvcv.push_back(std::string{c1, v1, c2, v2});
  fixed_shuffle(cvcv, 20261017u);
  std::size_t next = 0;
  for (const auto& w : source) {
    while (used.count(cvcv[next])) ++next;
    lex.cipher[w] = cvcv[next];
    add(cvcv[next++]);
  }

  // Keys: consonant-vowel-consonant pseudo-words fill the remaining slots.
  std::vector<std::string> cvc;
  for (char c1 : cons)
    for (char v1 : vows)
      for (char c2 : cons) cvc.push_back(std::string{c1, v1, c2});
  fixed_shuffle(cvc, 7u);
  for (const auto& w : cvc) {
    if (static_cast<int>(tokens.size()) >= size) break;
    if (used.count(w)) continue;
    add(w);
    lex.keys.push_back(w);
  }
  if (static_cast<int>(tokens.size()) != size || lex.keys.size() < 32) {
    throw ConfigError("vocabulary of " + std::to_string(size) + " cannot hold the task word lists");
  }
  if (lexicon) *lexicon = std::move(lex);
  return Vocab(std::move(tokens));
}

namespace {
struct Defaults {
  Lexicon lexicon;
  Vocab vocab;
  Defaults() { vocab = build_vocab(ModelConfig{}.vocab, &lexicon); }
};
const Defaults& defaults() {
  static const Defaults d;
  return d;
}
}  // namespace

const Vocab& default_vocab() { return defaults().vocab; }
const Lexicon& default_lexicon() { return defaults().lexicon; }

void save_vocab(const Vocab& v, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write vocabulary to " + path);
  for (const auto& t : v.tokens()) os << t << '\n';
  if (!os) throw IoError("failed writing vocabulary to " + path);
}

Vocab load_vocab(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read vocabulary from " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(is, line)) tokens.push_back(line);
  return Vocab(std::move(tokens));
}

}  // namespace lb
