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

#include "qrw/text/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace qrw::text {

double jaccard_unigram(std::span<const TokenId> a, std::span<const TokenId> b) {
  const std::unordered_set<TokenId> sa(a.begin(), a.end());
  const std::unordered_set<TokenId> sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t common = 0;
  for (TokenId t : sa) common += sb.count(t);
  const std::size_t uni = sa.size() + sb.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

namespace {

// n-gram counts keyed by the n-gram's token ids.
std::map<std::vector<TokenId>, int> ngram_counts(std::span<const TokenId> s, std::size_t n) {
  std::map<std::vector<TokenId>, int> out;
  if (s.size() < n) return out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++out[std::vector<TokenId>(s.begin() + i, s.begin() + i + n)];
  return out;
}

}  // namespace

double bleu4(std::span<const TokenId> reference, std::span<const TokenId> candidate) {
  if (candidate.empty() || reference.empty()) return 0.0;
  double log_sum = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto cand = ngram_counts(candidate, n);
    const auto ref = ngram_counts(reference, n);
    long matches = 0;
    long total = 0;
    for (const auto& [gram, count] : cand) {
      total += count;
      auto it = ref.find(gram);
      if (it != ref.end()) matches += std::min(count, it->second);
    }
    if (matches == 0) {
      if (n == 1) return 0.0;
      log_sum += std::log(1.0 / static_cast<double>(total + 1));
    } else {
      log_sum += std::log(static_cast<double>(matches) / static_cast<double>(total));
    }
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum / 4.0);
}

std::size_t lcs_length(std::span<const TokenId> a, std::span<const TokenId> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(std::span<const TokenId> reference, std::span<const TokenId> candidate) {
  if (reference.empty() || candidate.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(reference, candidate));
  if (lcs == 0) return 0.0;
  const double recall = lcs / static_cast<double>(reference.size());
  const double precision = lcs / static_cast<double>(candidate.size());
  const double b2 = kRougeBeta * kRougeBeta;
  return (1 + b2) * recall * precision / (recall + b2 * precision);
}

std::string squad_normalize(std::string_view s) {
  std::string lowered;
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::ispunct(c)) continue;
    lowered.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
  }
  std::istringstream words(lowered);
  std::string w, out;
  while (words >> w) {
    if (w == "a" || w == "an" || w == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

double token_f1(const std::string& pred, const std::string& gold) {
  const auto p = split_ws(pred);
  const auto g = split_ws(gold);
  if (p.empty() || g.empty()) return p == g ? 1.0 : 0.0;
  std::unordered_map<std::string, int> gold_counts;
  for (const auto& w : g) ++gold_counts[w];
  int common = 0;
  for (const auto& w : p) {
    auto it = gold_counts.find(w);
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(p.size());
  const double recall = static_cast<double>(common) / static_cast<double>(g.size());
  return 2 * precision * recall / (precision + recall);
}

}  // namespace

EmF1 squad_em_f1(std::string_view prediction, const std::vector<std::string>& gold_answers) {
  const std::string pred = squad_normalize(prediction);
  if (gold_answers.empty()) {
    const double v = pred.empty() ? 1.0 : 0.0;
    return {v, v};
  }
  EmF1 best;
  for (const auto& g : gold_answers) {
    const std::string gold = squad_normalize(g);
    best.em = std::max(best.em, pred == gold ? 1.0 : 0.0);
    best.f1 = std::max(best.f1, token_f1(pred, gold));
  }
  return best;
}

}  // namespace qrw::text
