/*
 * Copyright 2026 The qrewrite Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "qrw/text/vocab.hpp"

namespace qrw::text {

/// A token with its [begin, end) byte range in the source text.
struct Piece {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Lowercased word pieces: runs of alphanumerics (and any non-ASCII bytes)
/// form words; every ASCII punctuation character is its own piece;
/// whitespace separates.
std::vector<Piece> split_words(std::string_view text);

struct TokenSeq {
  std::vector<TokenId> ids;
  std::string surface;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
  friend bool operator==(const TokenSeq& a, const TokenSeq& b) { return a.ids == b.ids; }
};

/// Out-of-vocabulary words map to [UNK].
TokenSeq tokenize(std::string_view text, const Vocab& vocab);

/// Like tokenize, but adds unseen words to the vocabulary.
TokenSeq tokenize_growing(std::string_view text, Vocab& vocab);

/// Space-joined token strings.
std::string detokenize(const std::vector<TokenId>& ids, const Vocab& vocab);

TokenSeq from_ids(std::vector<TokenId> ids, const Vocab& vocab);

/// Lowercase, punctuation set off as separate words, whitespace collapsed to
/// single spaces. detokenize(tokenize(x)) equals this for in-vocabulary text.
std::string normalize_spacing(std::string_view text);

}  // namespace qrw::text
