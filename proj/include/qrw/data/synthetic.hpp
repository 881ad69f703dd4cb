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

#include "qrw/data/dataset.hpp"

namespace qrw::data {

struct SyntheticConfig {
  std::uint64_t seed = 7;
  int n_paragraphs = 2000;
  int facts_min = 3;
  int facts_max = 6;
  int questions_per_paragraph = 3;
  double answerable_probability = 2.0 / 3.0;
  double dev_fraction = 0.1;  // trailing paragraphs tagged Dev
};

/// Templated fact corpus. Paragraphs are sentences "the <attribute> of
/// <entity> is <value> ." with distinct attributes per paragraph; each
/// attribute draws its values from its own slice of the value list. Answerable
/// questions "what is the <attribute> of <entity> ?" point at the value
/// token; unanswerable ones name an entity or an attribute the paragraph
/// does not mention. Equal configs give identical datasets.
Dataset gen_synthetic(const SyntheticConfig& cfg);

}  // namespace qrw::data
