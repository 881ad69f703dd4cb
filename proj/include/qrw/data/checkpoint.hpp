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
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qrw/core/types.hpp"
#include "qrw/nn/params.hpp"

namespace qrw::data {

/// Binary layout, little-endian:
///   "CRQD" | u32 version | u64 vocab hash | u32 n + n bytes JSON metadata |
///   u32 count | count x (u32 n + name | u32 rows | u32 cols | f32 data) |
///   u64 FNV-1a of every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint64_t vocab_hash = 0;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
  std::vector<std::pair<std::string, Mat<float>>> tensors;

  template <typename S>
  void add(const nn::ParamSet<S>& params) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const int id = static_cast<int>(i);
      tensors.emplace_back(params.name(id), params[id].template cast<float>());
    }
  }

  /// Tensors whose names start with `prefix`, in stored order.
  template <typename S>
  nn::ParamSet<S> params(const std::string& prefix) const {
    nn::ParamSet<S> out;
    for (const auto& [name, m] : tensors) {
      if (name.compare(0, prefix.size(), prefix) == 0) out.add(name, m.template cast<S>());
    }
    return out;
  }
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);

/// Throws FormatError on bad magic, truncation or checksum failure,
/// VersionError on an unknown version and VocabMismatchError when
/// `expected_vocab_hash` is given and differs.
Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<std::uint64_t> expected_vocab_hash = {});

}  // namespace qrw::data
