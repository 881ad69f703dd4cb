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

// Brute-force reference implementations of the text metrics, written
// without sharing code with the library.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <random>
#include <regex>
#include <string>
#include <vector>

namespace oracle {

using Ids = std::vector<std::int64_t>;

inline double jaccard(const Ids& a, const Ids& b) {
  Ids sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
  std::sort(sb.begin(), sb.end());
  sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
  Ids inter, uni;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(inter));
  std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(uni));
  if (uni.empty()) return 1.0;
  return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

// Occurrences of s[i..i+n) inside t, by direct scanning.
inline int occurrences(const Ids& t, const Ids& s, std::size_t i, std::size_t n) {
  int c = 0;
  for (std::size_t j = 0; j + n <= t.size(); ++j) {
    if (std::equal(s.begin() + static_cast<long>(i), s.begin() + static_cast<long>(i + n),
                   t.begin() + static_cast<long>(j)))
      ++c;
  }
  return c;
}

inline double bleu4(const Ids& ref, const Ids& cand) {
  if (ref.empty() || cand.empty()) return 0.0;
  double logp = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    long total = cand.size() >= n ? static_cast<long>(cand.size() - n + 1) : 0;
    long clipped = 0;
    // Each distinct n-gram counted once, at its first position.
    for (std::size_t i = 0; i + n <= cand.size(); ++i) {
      bool first = true;
      for (std::size_t k = 0; k < i; ++k) {
        if (std::equal(cand.begin() + static_cast<long>(k), cand.begin() + static_cast<long>(k + n),
                       cand.begin() + static_cast<long>(i)))
          first = false;
      }
      if (!first) continue;
      clipped += std::min(occurrences(cand, cand, i, n), occurrences(ref, cand, i, n));
    }
    if (clipped == 0 && n == 1) return 0.0;
    const double p = clipped == 0 ? 1.0 / static_cast<double>(total + 1)
                                  : static_cast<double>(clipped) / static_cast<double>(total);
    logp += std::log(p) / 4.0;
  }
  const double r = static_cast<double>(ref.size()), c = static_cast<double>(cand.size());
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(logp);
}

inline bool is_subsequence(const Ids& sub, const Ids& of) {
  std::size_t j = 0;
  for (std::size_t i = 0; i < of.size() && j < sub.size(); ++i) {
    if (of[i] == sub[j]) ++j;
  }
  return j == sub.size();
}

// Longest common subsequence by enumerating every subsequence of `a`.
// Exponential; keep `a` short.
inline std::size_t lcs(const Ids& a, const Ids& b) {
  std::size_t best = 0;
  const std::uint32_t n = static_cast<std::uint32_t>(a.size());
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    Ids sub;
    for (std::uint32_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) sub.push_back(a[i]);
    }
    if (sub.size() > best && is_subsequence(sub, b)) best = sub.size();
  }
  return best;
}

inline double rouge_l(const Ids& ref, const Ids& cand, double beta = 1.2) {
  if (ref.empty() || cand.empty()) return 0.0;
  const double l = static_cast<double>(lcs(cand, ref));
  if (l == 0) return 0.0;
  const double r = l / static_cast<double>(ref.size());
  const double p = l / static_cast<double>(cand.size());
  return (1 + beta * beta) * r * p / (r + beta * beta * p);
}

inline std::string normalize(const std::string& s) {
  std::string t;
  for (char ch : s) {
    if (std::ispunct(static_cast<unsigned char>(ch))) continue;
    t += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  t = std::regex_replace(t, std::regex("\\b(a|an|the)\\b"), " ");
  std::string out;
  bool space = false;
  for (char ch : t) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    out += ch;
  }
  return out;
}

inline std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::string w;
  for (char ch : s + " ") {
    if (ch == ' ') {
      if (!w.empty()) out.push_back(w);
      w.clear();
    } else {
      w += ch;
    }
  }
  return out;
}

struct EmF1 {
  double em = 0, f1 = 0;
};

inline EmF1 squad(const std::string& pred, const std::vector<std::string>& golds) {
  const std::string p = normalize(pred);
  if (golds.empty()) return p.empty() ? EmF1{1, 1} : EmF1{0, 0};
  EmF1 best;
  for (const auto& g0 : golds) {
    const std::string g = normalize(g0);
    if (p == g) best.em = 1;
    auto pw = words(p), gw = words(g);
    double f1 = 0;
    if (pw.empty() || gw.empty()) {
      f1 = pw.empty() && gw.empty() ? 1 : 0;
    } else {
      std::sort(pw.begin(), pw.end());
      std::sort(gw.begin(), gw.end());
      std::vector<std::string> common;
      std::set_intersection(pw.begin(), pw.end(), gw.begin(), gw.end(), std::back_inserter(common));
      if (!common.empty()) {
        const double prec = static_cast<double>(common.size()) / static_cast<double>(pw.size());
        const double rec = static_cast<double>(common.size()) / static_cast<double>(gw.size());
        f1 = 2 * prec * rec / (prec + rec);
      }
    }
    best.f1 = std::max(best.f1, f1);
  }
  return best;
}

inline Ids random_ids(std::mt19937_64& rng, std::size_t max_len, std::int64_t alphabet) {
  const auto n = std::uniform_int_distribution<std::size_t>(0, max_len)(rng);
  Ids out(n);
  for (auto& x : out) x = std::uniform_int_distribution<std::int64_t>(0, alphabet - 1)(rng);
  return out;
}

inline std::string random_answer(std::mt19937_64& rng) {
  static const char* pool[] = {"The", "a", "an", "cat", "Cat", "sat,", "on", "mat.", "blue", "sky", "is", "the",
                               "red", "(big)", "Dog!", "dog", "an", "x-ray", "\"quote\"", "theme"};
  const auto n = std::uniform_int_distribution<int>(0, 5)(rng);
  std::string s;
  for (int i = 0; i < n; ++i) {
    if (i) s += std::uniform_int_distribution<int>(0, 3)(rng) == 0 ? "  " : " ";
    s += pool[std::uniform_int_distribution<int>(0, 19)(rng)];
  }
  return s;
}

}  // namespace oracle
