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

#include <functional>
#include <random>
#include <vector>

#include "qrw/autoencoder/autoencoder.hpp"
#include "qrw/nn/trainer.hpp"

namespace qrw::ae {

/// Encoder-input masking rate of the "wiki-mask" preset.
inline constexpr double kWikiMaskRate = 0.15;

struct AeEpochLog {
  int epoch = 0;
  double loss = 0;  // mean per-question cross-entropy
};

struct AeTrainConfig {
  nn::TrainConfig train;
  double mask_rate = 0;
  std::function<void(const AeEpochLog&)> on_epoch;
};

/// Question tokens of [CLS] q [SEP] replaced by [MASK] independently with
/// probability `rate`. The frame tokens are kept.
inline std::vector<TokenId> mask_tokens(const std::vector<TokenId>& framed, double rate, std::mt19937_64& rng) {
  std::vector<TokenId> out = framed;
  if (rate <= 0) return out;
  for (std::size_t i = 1; i + 1 < out.size(); ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (u < rate) out[i] = text::kMask;
  }
  return out;
}

/// Fits every autoencoder parameter to reconstruct `corpus`. The shared
/// embedding tables are checked unchanged afterwards.
template <typename Scalar>
void train_ae(AutoEncoder<Scalar>& model, const std::vector<TokenSeq>& corpus, const AeTrainConfig& cfg) {
  if (corpus.empty()) throw ContractError("train_ae: empty corpus");
  if (!(cfg.mask_rate >= 0 && cfg.mask_rate < 1)) throw ContractError("train_ae: mask_rate must lie in [0, 1)");
  for (const auto& q : corpus) {
    if (q.empty()) throw ContractError("train_ae: empty question in corpus");
  }
  const std::uint64_t tables_before = model.embeddings().hash();

  nn::ParamRefs<Scalar> refs;
  nn::append_refs(refs, model.mutable_params());
  const auto& tables = model.embeddings();

  nn::ExampleGrad<Scalar> grad_fn = [&](std::size_t i, std::uint64_t seed, std::vector<Mat<Scalar>>& grads) {
    const TokenSeq& q = corpus[i];
    std::mt19937_64 rng(seed);
    const auto input = mask_tokens(guide::framed_question(q.ids), cfg.mask_rate, rng);
    ad::Graph<Scalar> g;
    nn::Bound<Scalar> b(g, model.params(), true);
    nn::Bound<Scalar> t(g, tables.params(), false);
    auto eq = tables.lookup(t, input, guide::kQuestionSegment, 0);
    auto loss = model.reconstruction_loss(b, t, eq, q.ids);
    const auto map = g.backward(loss);
    for (std::size_t k = 0; k < b.size(); ++k) {
      const auto v = b[static_cast<int>(k)];
      if (map.contains(v)) grads[k] = map.at(v);
    }
    return loss.value()(0, 0);
  };

  nn::train_loop<Scalar>(refs, corpus.size(), cfg.train, grad_fn, [&](const nn::EpochStats& st) {
    if (cfg.on_epoch) cfg.on_epoch({st.epoch, st.mean_loss});
    return true;
  });
  if (model.embeddings().hash() != tables_before) {
    throw ContractError("train_ae: shared embedding tables changed during training");
  }
}

/// Fraction of `corpus` reconstructed token for token.
template <typename Scalar>
double exact_reconstruction_rate(const AutoEncoder<Scalar>& model, const std::vector<TokenSeq>& corpus) {
  if (corpus.empty()) return 0;
  std::size_t hits = 0;
  for (const auto& q : corpus) {
    if (model.reconstruct(q).tokens.ids == q.ids) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(corpus.size());
}

}  // namespace qrw::ae
