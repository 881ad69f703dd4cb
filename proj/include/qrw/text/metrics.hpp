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

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qrw/text/tokenizer.hpp"

namespace qrw::text {

/// |set(a) & set(b)| / |set(a) | set(b)| over token types; two empty
/// sequences count as identical (1.0).
double jaccard_unigram(std::span<const TokenId> a, std::span<const TokenId> b);
inline double jaccard_unigram(const TokenSeq& a, const TokenSeq& b) { return jaccard_unigram(a.ids, b.ids); }

/// Sentence BLEU-4: geometric mean of clipped 1..4-gram precisions times the
/// brevity penalty. An n-gram order with zero matches is add-one smoothed,
/// (0 + 1) / (total + 1). Empty candidate or reference scores 0.
double bleu4(std::span<const TokenId> reference, std::span<const TokenId> candidate);
inline double bleu4(const TokenSeq& r, const TokenSeq& c) { return bleu4(r.ids, c.ids); }

inline constexpr double kRougeBeta = 1.2;

/// ROUGE-L F-measure: (1 + b^2) R P / (R + b^2 P), R = lcs/|ref|, P = lcs/|cand|.
double rouge_l(std::span<const TokenId> reference, std::span<const TokenId> candidate);
inline double rouge_l(const TokenSeq& r, const TokenSeq& c) { return rouge_l(r.ids, c.ids); }

std::size_t lcs_length(std::span<const TokenId> a, std::span<const TokenId> b);

struct EmF1 {
  double em = 0;
  double f1 = 0;
};

/// SQuAD answer normalization: lowercase, drop punctuation and the articles
/// a/an/the, collapse whitespace.
std::string squad_normalize(std::string_view s);

/// Max EM/F1 over gold answers. An empty gold list means unanswerable: both
/// scores are 1 iff the prediction normalizes to empty.
EmF1 squad_em_f1(std::string_view prediction, const std::vector<std::string>& gold_answers);

}  // namespace qrw::text
