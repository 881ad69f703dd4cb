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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qrw/core/types.hpp"
#include "qrw/text/tokenizer.hpp"

namespace qrw::data {

using text::TokenSeq;
using text::Vocab;

// Index order matches the answerability head's two logits.
enum class Label : int { Unanswerable = 0, Answerable = 1 };

const char* label_name(Label t);
Label parse_label(const std::string& name);

enum class Split { Train, Dev };

/// One (q, d, s, e, t) example. The paragraph is referenced by id and owned
/// by the Dataset. Span bounds are inclusive token indices into the
/// paragraph and are absent exactly when the question is unanswerable.
struct DataTuple {
  std::string id;
  TokenSeq question;
  std::string paragraph_id;
  std::optional<Index> start;
  std::optional<Index> end;
  Label label = Label::Unanswerable;
  std::vector<std::string> answers;  // gold answer strings; empty when unanswerable
  Split split = Split::Train;
};

struct Dataset {
  std::vector<DataTuple> tuples;
  std::map<std::string, TokenSeq> paragraphs;
  std::shared_ptr<const Vocab> vocab;
  std::size_t dropped = 0;  // entries rejected during ingestion

  const TokenSeq& paragraph(const DataTuple& t) const;
  std::vector<const DataTuple*> select(Split split) const;
  std::vector<const DataTuple*> select(Split split, Label label) const;

  /// Checks ids are unique, paragraph references resolve and spans respect
  /// the label invariants. Throws ContractError listing the first offender.
  void validate() const;
};

/// Paragraph tokens [start, end] joined with spaces.
std::string span_text(const Dataset& ds, const DataTuple& t);

}  // namespace qrw::data
