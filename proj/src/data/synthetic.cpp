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

#include "qrw/data/synthetic.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <string>
#include <vector>

namespace qrw::data {

namespace {

const std::vector<std::string>& attributes() {
  static const std::vector<std::string> kAttributes = {
      "color",  "size",     "capital", "founder", "river",  "mountain", "language",
      "currency", "mascot", "anthem",  "motto",   "flower", "bird",     "tree",
      "sport",  "dish",     "festival", "instrument", "climate", "emblem"};
  return kAttributes;
}

std::vector<std::string> combine(const std::vector<std::string>& a, const std::vector<std::string>& b,
                                 std::size_t limit) {
  std::vector<std::string> out;
  for (const auto& x : a) {
    for (const auto& y : b) {
      if (out.size() == limit) return out;
      out.push_back(x + y);
    }
  }
  return out;
}

const std::vector<std::string>& entities() {
  static const std::vector<std::string> kEntities =
      combine({"al", "bor", "cal", "dun", "el", "fen", "gar", "hol", "ist", "jor"},
              {"ton", "mere", "wick", "dale", "ford"}, 50);
  return kEntities;
}

const std::vector<std::string>& values() {
  static const std::vector<std::string> kValues =
      combine({"ko", "ma", "ri", "su", "ta", "ve", "ni", "lo", "pe", "za"},
              {"bel", "dor", "fin", "gal", "lun", "mar", "nox", "pim", "ros", "tav"}, 100);
  return kValues;
}

// Uniform integer in [lo, hi] drawn directly from the engine so the
// sequence does not depend on the standard library's distributions.
int draw(std::mt19937_64& rng, int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<int>(rng() % span);
}

double draw_unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct Fact {
  int attribute;
  int entity;
  int value;
};

}  // namespace

Dataset gen_synthetic(const SyntheticConfig& cfg) {
  if (cfg.n_paragraphs <= 0) throw ContractError("gen_synthetic: n_paragraphs must be positive");
  if (cfg.facts_min < 1 || cfg.facts_max < cfg.facts_min ||
      cfg.facts_max > static_cast<int>(attributes().size())) {
    throw ContractError("gen_synthetic: invalid facts range");
  }
  std::mt19937_64 rng(cfg.seed);
  auto vocab = std::make_shared<Vocab>();
  Dataset ds;
  const auto& attrs = attributes();
  const auto& ents = entities();
  const auto& vals = values();
  const int n_attr = static_cast<int>(attrs.size());
  const int n_ent = static_cast<int>(ents.size());
  const int values_per_attr = static_cast<int>(vals.size()) / n_attr;
  const int dev_from = cfg.n_paragraphs - static_cast<int>(cfg.dev_fraction * cfg.n_paragraphs);

  for (int p = 0; p < cfg.n_paragraphs; ++p) {
    const int k = draw(rng, cfg.facts_min, cfg.facts_max);
    const int n_para_ents = draw(rng, 1, 2);
    std::vector<int> para_ents;
    while (static_cast<int>(para_ents.size()) < n_para_ents) {
      const int e = draw(rng, 0, n_ent - 1);
      if (std::find(para_ents.begin(), para_ents.end(), e) == para_ents.end()) para_ents.push_back(e);
    }
    std::vector<int> attr_order(static_cast<std::size_t>(n_attr));
    for (int i = 0; i < n_attr; ++i) attr_order[static_cast<std::size_t>(i)] = i;
    for (int i = n_attr - 1; i > 0; --i) std::swap(attr_order[static_cast<std::size_t>(i)],
                                                   attr_order[static_cast<std::size_t>(draw(rng, 0, i))]);

    std::vector<Fact> facts;
    std::string text;
    std::vector<Index> value_pos;
    Index token_at = 0;
    for (int f = 0; f < k; ++f) {
      const int a = attr_order[static_cast<std::size_t>(f)];
      const int e = para_ents[static_cast<std::size_t>(draw(rng, 0, n_para_ents - 1))];
      // Each attribute owns its own slice of the value list.
      Fact fact{a, e, a * values_per_attr + draw(rng, 0, values_per_attr - 1)};
      facts.push_back(fact);
      if (!text.empty()) text += ' ';
      text += "the " + attrs[static_cast<std::size_t>(fact.attribute)] + " of " +
              ents[static_cast<std::size_t>(fact.entity)] + " is " + vals[static_cast<std::size_t>(fact.value)] + " .";
      value_pos.push_back(token_at + 5);
      token_at += 7;
    }
    const std::string pid = "p" + std::to_string(p);
    ds.paragraphs[pid] = text::tokenize_growing(text, *vocab);
    const Split split = p >= dev_from ? Split::Dev : Split::Train;

    std::vector<int> unused_facts(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) unused_facts[static_cast<std::size_t>(i)] = i;

    for (int j = 0; j < cfg.questions_per_paragraph; ++j) {
      DataTuple t;
      t.id = pid + "-q" + std::to_string(j);
      t.paragraph_id = pid;
      t.split = split;
      const bool answerable = !unused_facts.empty() && draw_unit(rng) < cfg.answerable_probability;
      std::string attr, ent;
      if (answerable) {
        const int pick = draw(rng, 0, static_cast<int>(unused_facts.size()) - 1);
        const int fi = unused_facts[static_cast<std::size_t>(pick)];
        unused_facts.erase(unused_facts.begin() + pick);
        const Fact& fact = facts[static_cast<std::size_t>(fi)];
        attr = attrs[static_cast<std::size_t>(fact.attribute)];
        ent = ents[static_cast<std::size_t>(fact.entity)];
        t.label = Label::Answerable;
        t.start = t.end = value_pos[static_cast<std::size_t>(fi)];
        t.answers = {vals[static_cast<std::size_t>(fact.value)]};
      } else {
        t.label = Label::Unanswerable;
        if (k == n_attr || draw_unit(rng) < 0.5) {
          int e;
          do {
            e = draw(rng, 0, n_ent - 1);
          } while (std::find(para_ents.begin(), para_ents.end(), e) != para_ents.end());
          attr = attrs[static_cast<std::size_t>(facts[static_cast<std::size_t>(draw(rng, 0, k - 1))].attribute)];
          ent = ents[static_cast<std::size_t>(e)];
        } else {
          const int a = attr_order[static_cast<std::size_t>(draw(rng, k, n_attr - 1))];
          attr = attrs[static_cast<std::size_t>(a)];
          ent = ents[static_cast<std::size_t>(para_ents[static_cast<std::size_t>(draw(rng, 0, n_para_ents - 1))])];
        }
      }
      t.question = text::tokenize_growing("what is the " + attr + " of " + ent + " ?", *vocab);
      ds.tuples.push_back(std::move(t));
    }
  }
  ds.vocab = std::move(vocab);
  ds.validate();
  return ds;
}

}  // namespace qrw::data
