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
#include <string>
#include <vector>

#include "qrw/autodiff/ops.hpp"
#include "qrw/guide/embedding.hpp"
#include "qrw/nn/layers.hpp"
#include "qrw/text/tokenizer.hpp"

namespace qrw::ae {

using text::TokenId;
using text::TokenSeq;

struct AeConfig {
  Index hidden = 64;
  Index encoder_layers = 2;
  Index decoder_layers = 2;
  Index heads = 4;
  Index ffn = 256;
  Index max_decode_len = 32;

  static AeConfig desk() { return AeConfig{}; }

  // 6 + 6 layers, h=1024, FFN 4096, 16 heads.
  static AeConfig paper_scale() {
    AeConfig c;
    c.hidden = 1024;
    c.encoder_layers = 6;
    c.decoder_layers = 6;
    c.heads = 16;
    c.ffn = 4096;
    c.max_decode_len = 64;
    return c;
  }

  void validate() const {
    if (hidden <= 0 || heads <= 0 || ffn <= 0 || hidden % heads != 0 || encoder_layers < 0 || decoder_layers < 0) {
      throw ContractError("autoencoder: invalid architecture dimensions");
    }
    if (max_decode_len < 0) throw ContractError("autoencoder: negative max_decode_len");
  }
};

struct Decoded {
  TokenSeq tokens;  // ids only; see text::from_ids for the surface form
  bool truncated = false;  // max_len reached before [EOS]
};

/// Transformer encoder, GRU sum pooling and a causal decoder that sees only
/// the pooled latent. The embedding tables belong to the guide and are read
/// but never updated here.
template <typename Scalar>
class AutoEncoder {
 public:
  using M = Mat<Scalar>;
  using V = ad::Var<Scalar>;
  using Tables = guide::EmbeddingTables<Scalar>;

  AutoEncoder(const AeConfig& cfg, std::shared_ptr<const Tables> embeddings, std::uint64_t seed)
      : cfg_(cfg), embeddings_(std::move(embeddings)) {
    check();
    std::mt19937_64 rng(seed);
    build_layers(rng);
  }

  /// Reassembles a model from stored tensors.
  AutoEncoder(const AeConfig& cfg, std::shared_ptr<const Tables> embeddings, const nn::ParamSet<Scalar>& stored)
      : cfg_(cfg), embeddings_(std::move(embeddings)) {
    check();
    std::mt19937_64 rng(0);
    build_layers(rng);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const int id = static_cast<int>(i);
      const M& src = stored.at(params_.name(id));
      if (src.rows() != params_[id].rows() || src.cols() != params_[id].cols()) {
        throw DimensionError("autoencoder: stored tensor " + params_.name(id) + " has the wrong shape");
      }
      params_[id] = src;
    }
  }

  const AeConfig& config() const { return cfg_; }
  const nn::ParamSet<Scalar>& params() const { return params_; }
  nn::ParamSet<Scalar>& mutable_params() { return params_; }
  const Tables& embeddings() const { return *embeddings_; }
  std::shared_ptr<const Tables> shared_embeddings() const { return embeddings_; }
  std::uint64_t hash() const { return params_.hash(); }

  /// Question-segment embedding of [CLS] q [SEP]; the same rows the guide
  /// builds for E_q.
  M embed(const TokenSeq& q) const { return embeddings_->lookup(guide::framed_question(q.ids), guide::kQuestionSegment, 0); }

  V encode(const nn::Bound<Scalar>& b, V eq) const {
    if (eq.cols() != cfg_.hidden) {
      throw DimensionError("autoencoder: input width " + std::to_string(eq.cols()) + " != " +
                           std::to_string(cfg_.hidden));
    }
    if (eq.rows() == 0) throw ContractError("autoencoder: empty input sequence");
    return encoder_(b, eq);
  }

  /// Sum of the GRU states over every row.
  V pool(const nn::Bound<Scalar>& b, V states) const {
    if (states.rows() == 0) throw ContractError("autoencoder: cannot pool an empty sequence");
    return ad::sum_rows(ad::concat_rows<Scalar>(gru_(b, states)));
  }

  /// Next-token logits for every prefix of `inputs` ([BOS] first), given z.
  V decoder_logits(const nn::Bound<Scalar>& b, const nn::Bound<Scalar>& tables, V z,
                   const std::vector<TokenId>& inputs) const {
    auto& g = z.graph();
    V x = embeddings_->lookup(tables, inputs, guide::kQuestionSegment, 0);
    x = ad::add_row(x, latent_(b, z));
    V mask = g.constant(nn::causal_mask<Scalar>(static_cast<Index>(inputs.size())));
    return vocab_out_(b, decoder_(b, x, mask));
  }

  /// Reconstruction cross-entropy of q (summed over its tokens and [EOS])
  /// from the encoder input `eq`.
  V reconstruction_loss(const nn::Bound<Scalar>& b, const nn::Bound<Scalar>& tables, V eq,
                        const std::vector<TokenId>& q) const {
    V z = pool(b, encode(b, eq));
    std::vector<TokenId> inputs{text::kBos};
    inputs.insert(inputs.end(), q.begin(), q.end());
    std::vector<Index> targets(q.begin(), q.end());
    targets.push_back(text::kEos);
    return ad::cross_entropy(decoder_logits(b, tables, z, inputs), std::move(targets));
  }

  M encode(const M& eq) const {
    check_finite(eq);
    ad::Graph<Scalar> g;
    nn::Bound<Scalar> b(g, params_, false);
    return encode(b, g.parameter(eq, false)).value();
  }

  RowVec<Scalar> pool(const M& states) const {
    check_finite(states);
    ad::Graph<Scalar> g;
    nn::Bound<Scalar> b(g, params_, false);
    return pool(b, g.parameter(states, false)).value();
  }

  /// z straight from an embedding sequence.
  RowVec<Scalar> latent(const M& eq) const {
    check_finite(eq);
    ad::Graph<Scalar> g;
    nn::Bound<Scalar> b(g, params_, false);
    return pool(b, encode(b, g.parameter(eq, false))).value();
  }

  /// Greedy decoding from [BOS]. Reserved ids other than [EOS] are never
  /// emitted.
  Decoded decode(const RowVec<Scalar>& z, Index max_len) const {
    if (z.cols() != cfg_.hidden) throw DimensionError("autoencoder: latent width mismatch");
    check_finite(z);
    Decoded out;
    std::vector<TokenId> inputs{text::kBos};
    const Index limit = std::min(max_len, embeddings_->max_positions() - 1);
    while (static_cast<Index>(out.tokens.ids.size()) < limit) {
      ad::Graph<Scalar> g;
      nn::Bound<Scalar> b(g, params_, false);
      nn::Bound<Scalar> tables(g, embeddings_->params(), false);
      const M logits = decoder_logits(b, tables, g.parameter(z, false), inputs).value();
      const auto last = logits.row(logits.rows() - 1);
      TokenId best = text::kEos;
      Scalar best_score = last(text::kEos);
      for (Index v = text::kNumReserved; v < last.cols(); ++v) {
        if (last(v) > best_score) {
          best_score = last(v);
          best = v;
        }
      }
      if (best == text::kEos) return out;
      out.tokens.ids.push_back(best);
      inputs.push_back(best);
    }
    out.truncated = max_len > 0;
    return out;
  }

  Decoded decode(const RowVec<Scalar>& z) const { return decode(z, cfg_.max_decode_len); }

  /// decode(pool(encode(eq))).
  Decoded decode_embeddings(const M& eq) const { return decode(latent(eq)); }

  Decoded reconstruct(const TokenSeq& q) const { return decode_embeddings(embed(q)); }

 private:
  void check() const {
    cfg_.validate();
    if (!embeddings_) throw ContractError("autoencoder: missing embedding tables");
    if (embeddings_->width() != cfg_.hidden) throw DimensionError("autoencoder: embedding width != hidden");
  }

  static void check_finite(const M& m) {
    if (!m.allFinite()) throw NumericError("autoencoder: non-finite input");
  }

  void build_layers(std::mt19937_64& rng) {
    const Index h = cfg_.hidden;
    encoder_ = nn::TransformerStack::create(params_, "ae.encoder", h, cfg_.encoder_layers, cfg_.heads, cfg_.ffn, rng);
    gru_ = nn::Gru::create(params_, "ae.gru", h, h, rng);
    latent_ = nn::Linear::create(params_, "ae.latent", h, h, rng);
    decoder_ = nn::TransformerStack::create(params_, "ae.decoder", h, cfg_.decoder_layers, cfg_.heads, cfg_.ffn, rng);
    vocab_out_ = nn::Linear::create(params_, "ae.vocab_out", h, embeddings_->vocab_size(), rng);
  }

  AeConfig cfg_;
  std::shared_ptr<const Tables> embeddings_;
  nn::ParamSet<Scalar> params_;
  nn::TransformerStack encoder_;
  nn::Gru gru_;
  nn::Linear latent_;
  nn::TransformerStack decoder_;
  nn::Linear vocab_out_;
};

}  // namespace qrw::ae
