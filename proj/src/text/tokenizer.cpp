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

#include "qrw/text/tokenizer.hpp"

#include <cctype>

namespace qrw::text {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

}  // namespace

std::vector<Piece> split_words(std::string_view text) {
  std::vector<Piece> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      ++i;
    } else if (is_punct(c)) {
      out.push_back({std::string(1, text[i]), i, i + 1});
      ++i;
    } else {
      const std::size_t begin = i;
      std::string word;
      while (i < text.size()) {
        const auto d = static_cast<unsigned char>(text[i]);
        if (is_space(d) || is_punct(d)) break;
        word.push_back(d < 0x80 ? static_cast<char>(std::tolower(d)) : text[i]);
        ++i;
      }
      out.push_back({std::move(word), begin, i});
    }
  }
  return out;
}

TokenSeq tokenize(std::string_view text, const Vocab& vocab) {
  TokenSeq seq;
  seq.surface = std::string(text);
  for (const auto& p : split_words(text)) seq.ids.push_back(vocab.id(p.text));
  return seq;
}

TokenSeq tokenize_growing(std::string_view text, Vocab& vocab) {
  TokenSeq seq;
  seq.surface = std::string(text);
  for (const auto& p : split_words(text)) seq.ids.push_back(vocab.add(p.text));
  return seq;
}

std::string detokenize(const std::vector<TokenId>& ids, const Vocab& vocab) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out.push_back(' ');
    out += vocab.token(ids[i]);
  }
  return out;
}

TokenSeq from_ids(std::vector<TokenId> ids, const Vocab& vocab) {
  TokenSeq seq;
  seq.surface = detokenize(ids, vocab);
  seq.ids = std::move(ids);
  return seq;
}

std::string normalize_spacing(std::string_view text) {
  std::string out;
  for (const auto& p : split_words(text)) {
    if (!out.empty()) out.push_back(' ');
    out += p.text;
  }
  return out;
}

}  // namespace qrw::text
