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

#include <memory>
#include <random>
#include <vector>

#include "qrw/autodiff/ops.hpp"
#include "qrw/nn/params.hpp"
#include "qrw/text/vocab.hpp"

namespace qrw::guide {

inline constexpr Index kQuestionSegment = 0;
inline constexpr Index kParagraphSegment = 1;

/// Token, segment and position tables of width h. One instance is owned by
/// the guide model and referenced (read-only) by the autoencoder, so both
/// place questions in the same continuous space.
template <typename Scalar>
class EmbeddingTables {
 public:
  EmbeddingTables(Index vocab_size, Index max_positions, Index width, std::mt19937_64& rng) {
    token_ = params_.add("embed.token", nn::normal_init<Scalar>(vocab_size, width, 1.0, rng));
    segment_ = params_.add("embed.segment", nn::normal_init<Scalar>(2, width, 0.5, rng));
    position_ = params_.add("embed.position", nn::normal_init<Scalar>(max_positions, width, 0.5, rng));
  }

  explicit EmbeddingTables(nn::ParamSet<Scalar> params) : params_(std::move(params)) {
    token_ = params_.find("embed.token");
    segment_ = params_.find("embed.segment");
    position_ = params_.find("embed.position");
    if (token_ < 0 || segment_ < 0 || position_ < 0) throw ContractError("embedding tables incomplete");
    const Index w = params_[token_].cols();
    if (params_[segment_].cols() != w || params_[position_].cols() != w || params_[segment_].rows() != 2) {
      throw DimensionError("embedding tables disagree on width");
    }
  }

  Index width() const { return params_[token_].cols(); }
  Index vocab_size() const { return params_[token_].rows(); }
  Index max_positions() const { return params_[position_].rows(); }

  const nn::ParamSet<Scalar>& params() const { return params_; }
  nn::ParamSet<Scalar>& mutable_params() { return params_; }
  std::uint64_t hash() const { return params_.hash(); }

  /// Rows token[id_i] + segment[segment] + position[first_position + i].
  ad::Var<Scalar> lookup(const nn::Bound<Scalar>& b, const std::vector<text::TokenId>& ids, Index segment,
                         Index first_position) const {
    const auto n = static_cast<Index>(ids.size());
    if (first_position + n > max_positions()) {
      throw DimensionError("sequence reaches position " + std::to_string(first_position + n) + " of " +
                           std::to_string(max_positions()));
    }
    std::vector<Index> tok(ids.begin(), ids.end());
    std::vector<Index> seg(ids.size(), segment);
    std::vector<Index> pos(ids.size());
    for (Index i = 0; i < n; ++i) pos[static_cast<std::size_t>(i)] = first_position + i;
    return (ad::gather(b[token_], std::move(tok)) + ad::gather(b[segment_], std::move(seg))) +
           ad::gather(b[position_], std::move(pos));
  }

  EmbeddingSeq<Scalar> lookup(const std::vector<text::TokenId>& ids, Index segment, Index first_position) const {
    if (ids.empty()) return EmbeddingSeq<Scalar>(0, width());
    ad::Graph<Scalar> g;
    nn::Bound<Scalar> b(g, params_, false);
    return lookup(b, ids, segment, first_position).value();
  }

 private:
  nn::ParamSet<Scalar> params_;
  int token_ = -1;
  int segment_ = -1;
  int position_ = -1;
};

/// [CLS] q [SEP]
inline std::vector<text::TokenId> framed_question(const std::vector<text::TokenId>& q) {
  std::vector<text::TokenId> ids;
  ids.reserve(q.size() + 2);
  ids.push_back(text::kCls);
  ids.insert(ids.end(), q.begin(), q.end());
  ids.push_back(text::kSep);
  return ids;
}

}  // namespace qrw::guide
