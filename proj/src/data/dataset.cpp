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

#include "qrw/data/dataset.hpp"

#include <unordered_set>

namespace qrw::data {

const char* label_name(Label t) { return t == Label::Answerable ? "answerable" : "unanswerable"; }

Label parse_label(const std::string& name) {
  if (name == "answerable") return Label::Answerable;
  if (name == "unanswerable") return Label::Unanswerable;
  throw ParseError("unknown label '" + name + "'");
}

const TokenSeq& Dataset::paragraph(const DataTuple& t) const {
  auto it = paragraphs.find(t.paragraph_id);
  if (it == paragraphs.end()) throw ContractError("tuple " + t.id + ": unknown paragraph " + t.paragraph_id);
  return it->second;
}

std::vector<const DataTuple*> Dataset::select(Split split) const {
  std::vector<const DataTuple*> out;
  for (const auto& t : tuples) {
    if (t.split == split) out.push_back(&t);
  }
  return out;
}

std::vector<const DataTuple*> Dataset::select(Split split, Label label) const {
  std::vector<const DataTuple*> out;
  for (const auto& t : tuples) {
    if (t.split == split && t.label == label) out.push_back(&t);
  }
  return out;
}

void Dataset::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& t : tuples) {
    if (!seen.insert(t.id).second) throw ContractError("duplicate tuple id " + t.id);
    const TokenSeq& d = paragraph(t);
    if (t.label == Label::Answerable) {
      if (!t.start || !t.end) throw ContractError("answerable tuple " + t.id + " has no span");
      const Index m = static_cast<Index>(d.size());
      if (*t.start < 0 || *t.start > *t.end || *t.end >= m) {
        throw ContractError("tuple " + t.id + ": span [" + std::to_string(*t.start) + ", " +
                            std::to_string(*t.end) + "] outside paragraph of " + std::to_string(m));
      }
    } else if (t.start || t.end) {
      throw ContractError("unanswerable tuple " + t.id + " carries a span");
    }
  }
}

std::string span_text(const Dataset& ds, const DataTuple& t) {
  if (!t.start || !t.end) return {};
  const TokenSeq& d = ds.paragraph(t);
  std::vector<text::TokenId> ids(d.ids.begin() + *t.start, d.ids.begin() + *t.end + 1);
  return text::detokenize(ids, *ds.vocab);
}

}  // namespace qrw::data
