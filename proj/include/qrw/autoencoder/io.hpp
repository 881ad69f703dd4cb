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

#include "qrw/autoencoder/autoencoder.hpp"
#include "qrw/data/checkpoint.hpp"

namespace qrw::ae {

inline nlohmann::ordered_json config_json(const AeConfig& c) {
  return {{"hidden", c.hidden},   {"encoder_layers", c.encoder_layers}, {"decoder_layers", c.decoder_layers},
          {"heads", c.heads},     {"ffn", c.ffn},                       {"max_decode_len", c.max_decode_len}};
}

inline AeConfig config_from_json(const nlohmann::ordered_json& j) {
  AeConfig c;
  c.hidden = j.at("hidden").get<Index>();
  c.encoder_layers = j.at("encoder_layers").get<Index>();
  c.decoder_layers = j.at("decoder_layers").get<Index>();
  c.heads = j.at("heads").get<Index>();
  c.ffn = j.at("ffn").get<Index>();
  c.max_decode_len = j.at("max_decode_len").get<Index>();
  return c;
}

/// Hash of the tables as a checkpoint stores them (float32), so models of
/// either precision agree.
template <typename Scalar>
std::uint64_t stored_table_hash(const guide::EmbeddingTables<Scalar>& t) {
  nn::ParamSet<float> p;
  for (std::size_t i = 0; i < t.params().size(); ++i) {
    const int id = static_cast<int>(i);
    p.add(t.params().name(id), t.params()[id].template cast<float>());
  }
  return p.hash();
}

/// The embedding tables stay with the guide; only their hash is recorded.
template <typename Scalar>
data::Checkpoint to_checkpoint(const AutoEncoder<Scalar>& m, std::uint64_t vocab_hash,
                               const nlohmann::ordered_json& echo = nlohmann::ordered_json::object()) {
  data::Checkpoint ck;
  ck.vocab_hash = vocab_hash;
  ck.metadata["kind"] = "autoencoder";
  ck.metadata["architecture"] = config_json(m.config());
  ck.metadata["embedding_hash"] = stored_table_hash(m.embeddings());
  ck.metadata["config"] = echo;
  ck.add(m.params());
  return ck;
}

/// Rebuilds the autoencoder around the guide's tables; they must be the
/// tables it was trained against.
template <typename Scalar>
AutoEncoder<Scalar> from_checkpoint(const data::Checkpoint& ck,
                                    std::shared_ptr<const guide::EmbeddingTables<Scalar>> tables) {
  if (ck.metadata.value("kind", std::string()) != "autoencoder") {
    throw FormatError("checkpoint does not hold an autoencoder");
  }
  AeConfig cfg;
  std::uint64_t expected = 0;
  try {
    cfg = config_from_json(ck.metadata.at("architecture"));
    expected = ck.metadata.at("embedding_hash").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("autoencoder checkpoint metadata: ") + e.what());
  }
  if (stored_table_hash(*tables) != expected) {
    throw ContractError("autoencoder checkpoint was trained against different embedding tables");
  }
  return AutoEncoder<Scalar>(cfg, std::move(tables), ck.params<Scalar>("ae."));
}

}  // namespace qrw::ae
