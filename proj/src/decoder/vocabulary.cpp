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

#include "mvam/decoder/vocabulary.hpp"

#include <fstream>

#include "mvam/numerics/errors.hpp"

namespace mvam::decoder {

namespace {
const char* const kSpecials[] = {"<pad>", "<bos>", "<eos>", "<unk>"};
}

Vocabulary::Vocabulary() {
  for (const char* s : kSpecials) {
    index_.emplace(s, static_cast<int>(tokens_.size()));
    tokens_.emplace_back(s);
  }
}

Vocabulary::Vocabulary(std::span<const std::string> words) : Vocabulary() {
  for (const std::string& w : words) {
    if (w.empty()) throw ContractError("Vocabulary: empty token");
    if (!index_.emplace(w, static_cast<int>(tokens_.size())).second) {
      throw ContractError("Vocabulary: duplicate token '" + w + "'");
    }
    tokens_.push_back(w);
  }
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> all_tokens) {
  if (all_tokens.size() < 4) throw DataError("Vocabulary: fewer than four tokens");
  for (int i = 0; i < 4; ++i) {
    if (all_tokens[static_cast<std::size_t>(i)] != kSpecials[i]) {
      throw DataError("Vocabulary: special token " + std::string(kSpecials[i]) + " missing at id " +
                      std::to_string(i));
    }
  }
  std::vector<std::string> words(all_tokens.begin() + 4, all_tokens.end());
  return Vocabulary(words);
}

bool Vocabulary::contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

int Vocabulary::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw ContractError("Vocabulary: token id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

TokenSequence Vocabulary::encode(std::span<const std::string> words) const {
  TokenSequence out;
  out.reserve(words.size());
  for (const std::string& w : words) out.push_back(id(w));
  return out;
}

std::string Vocabulary::decode(std::span<const int> ids) const {
  std::string out;
  for (int i : ids) {
    if (i == kPad || i == kBos || i == kEos) continue;
    if (!out.empty()) out += ' ';
    out += token(i);
  }
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary file " + path.string());
  for (const std::string& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read vocabulary file " + path.string());
  std::vector<std::string> tokens;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

}  // namespace mvam::decoder
