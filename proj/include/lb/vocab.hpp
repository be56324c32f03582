// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

// Frozen word-level vocabulary shared by the pretraining corpus and every
// task. Tokens are lowercase and contain no whitespace, so text forms are
// plain space-joined token strings.

#pragma once

#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lb {

class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const;
  // Throws InputError for an unknown word.
  int id(std::string_view word) const;
  bool contains(std::string_view word) const { return ids_.count(std::string(word)) != 0; }

  std::vector<int> encode(std::string_view text) const;
  // Skips pad, bos and eos.
  std::string decode(const std::vector<int>& ids) const;

  const std::vector<std::string>& tokens() const { return tokens_; }
  bool operator==(const Vocab& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// Word classes the generators draw from. Every word is a vocabulary token.
struct Lexicon {
  std::vector<std::string> names;
  std::vector<std::string> keys;
  std::vector<std::string> determiners;
  std::vector<std::string> nouns_home;     // in-domain topic
  std::vector<std::string> nouns_general;  // ood-a topic
  std::vector<std::string> nouns_bio;      // ood-b topic
  std::vector<std::string> verbs;
  std::vector<std::string> adjectives;
  std::map<std::string, std::string> cipher;  // source word -> target word
};

// The vocabulary has exactly `size` entries (512 for the desk config); key
// pseudo-words fill whatever the fixed word lists leave over.
const Vocab& default_vocab();
const Lexicon& default_lexicon();
Vocab build_vocab(int size, Lexicon* lexicon);

inline std::string number_word(int n) { return std::to_string(n); }
inline constexpr int kMaxNumber = 99;

// One token per line.
void save_vocab(const Vocab& v, const std::string& path);
Vocab load_vocab(const std::string& path);

}  // namespace lb
