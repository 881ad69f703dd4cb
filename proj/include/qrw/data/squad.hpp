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
#include <memory>
#include <string>

#include "qrw/data/augmented.hpp"
#include "qrw/data/dataset.hpp"

namespace qrw::data {

/// Reads a SQuAD-2.0 file (data -> paragraphs -> qas). Character offsets
/// are code points, as in the public files. With a null `vocab` the
/// vocabulary is grown from the file; otherwise unknown words map to [UNK].
/// Answers whose text does not line up with whole tokens are dropped and
/// counted in Dataset::dropped. Paragraph ids come from an optional "id"
/// member, else "<prefix>p<k>".
Dataset load_squad_json(const std::filesystem::path& path, std::shared_ptr<const Vocab> vocab = nullptr,
                        Split split = Split::Train, const std::string& id_prefix = "");

/// Writes the tuples of `split` (all tuples when empty) in the same format,
/// paragraph ids included.
void write_squad_json(const std::filesystem::path& path, const Dataset& ds, std::optional<Split> split = {});

/// Appends `b`'s tuples and paragraphs to `a`. Both must share one
/// vocabulary; ids must stay unique.
Dataset concat(const Dataset& a, const Dataset& b);

enum class MergeMode { Answerable, Unanswerable, Both };

const char* merge_mode_name(MergeMode m);
MergeMode parse_merge_mode(const std::string& name);

/// Original tuples plus the augmented records of the selected labels, as
/// Train-split tuples with their record ids.
Dataset merge_for_training(const Dataset& original, const std::vector<AugmentedRecord>& records, MergeMode mode);
Dataset merge_for_training(const Dataset& original, const std::filesystem::path& augmented_path, MergeMode mode);

}  // namespace qrw::data
