// Copyright 2026 The mvam Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mvam::decoder {

/// Caption word ids, without the BOS/EOS boundary markers. An empty sequence
/// is the caption "BOS EOS".
using TokenSequence = std::vector<int>;

/// Dense token <-> id table. Ids 0..3 are the special tokens.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  Vocabulary();
  /// `words` excludes the special tokens; duplicates are rejected.
  explicit Vocabulary(std::span<const std::string> words);

  int size() const { return static_cast<int>(tokens_.size()); }
  bool contains(std::string_view token) const;
  /// kUnk for unknown tokens.
  int id(std::string_view token) const;
  const std::string& token(int id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  TokenSequence encode(std::span<const std::string> words) const;
  /// Space-joined words; special tokens are skipped.
  std::string decode(std::span<const int> ids) const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

  /// One token per line, specials included.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);
  static Vocabulary from_tokens(std::vector<std::string> all_tokens);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace mvam::decoder
