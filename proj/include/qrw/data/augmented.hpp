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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qrw/data/dataset.hpp"

namespace qrw::data {

/// One accepted rewrite: the new question q_hat asked about the source
/// tuple's paragraph with label `target`.
struct AugmentedRecord {
  std::string source_id;
  TokenSeq question;  // q_hat
  std::string paragraph_id;
  std::optional<Index> start;  // absent iff target is Unanswerable
  std::optional<Index> end;
  // Source span kept as metadata on to-unanswerable records.
  std::optional<Index> plausible_start;
  std::optional<Index> plausible_end;
  Label target = Label::Unanswerable;
  double p_target = 0;
  double jaccard = 0;
  double eta_init = 0;
  int eta_index = 0;
  int step_index = 0;
  std::string strategy = "gradient";  // or "noise"

  std::string id() const {
    return source_id + "-" + strategy + "-" + label_name(target) + "-e" + std::to_string(eta_index) + "-s" +
           std::to_string(step_index);
  }
};

/// One JSON object per line.
void write_augmented(const std::filesystem::path& path, const std::vector<AugmentedRecord>& records);
std::vector<AugmentedRecord> read_augmented(const std::filesystem::path& path, const Vocab& vocab);

}  // namespace qrw::data
