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
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qrw::text {

using TokenId = std::int64_t;

// Reserved ids, fixed in this order.
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr TokenId kCls = 2;
inline constexpr TokenId kSep = 3;
inline constexpr TokenId kMask = 4;
inline constexpr TokenId kBos = 5;
inline constexpr TokenId kEos = 6;
inline constexpr TokenId kNumReserved = 7;

class Vocab {
 public:
  Vocab();

  /// Adds `token` if absent and returns its id.
  TokenId add(std::string_view token);

  TokenId id(std::string_view token) const;  // kUnk when absent
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }

  /// Content hash over the ordered token list.
  std::uint64_t hash() const;

  /// One non-reserved token per line; line k is id kNumReserved + k.
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  static bool is_reserved(TokenId id) { return id >= 0 && id < kNumReserved; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace qrw::text
