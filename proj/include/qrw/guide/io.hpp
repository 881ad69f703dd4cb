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

#include "qrw/data/checkpoint.hpp"
#include "qrw/guide/guide.hpp"

namespace qrw::guide {

inline nlohmann::ordered_json config_json(const GuideConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"hidden", c.hidden},   {"layers", c.layers},
          {"heads", c.heads},           {"ffn", c.ffn},         {"max_seq", c.max_seq},
          {"max_answer_len", c.max_answer_len}, {"lambda", c.lambda}};
}

inline GuideConfig config_from_json(const nlohmann::ordered_json& j) {
  GuideConfig c;
  c.vocab_size = j.at("vocab_size").get<Index>();
  c.hidden = j.at("hidden").get<Index>();
  c.layers = j.at("layers").get<Index>();
  c.heads = j.at("heads").get<Index>();
  c.ffn = j.at("ffn").get<Index>();
  c.max_seq = j.at("max_seq").get<Index>();
  c.max_answer_len = j.at("max_answer_len").get<Index>();
  c.lambda = j.at("lambda").get<double>();
  return c;
}

/// Body and embedding tables in one checkpoint.
template <typename Scalar>
data::Checkpoint to_checkpoint(const GuideModel<Scalar>& m, std::uint64_t vocab_hash,
                               const nlohmann::ordered_json& echo = nlohmann::ordered_json::object()) {
  data::Checkpoint ck;
  ck.vocab_hash = vocab_hash;
  ck.metadata["kind"] = "guide";
  ck.metadata["architecture"] = config_json(m.config());
  ck.metadata["config"] = echo;
  ck.add(m.embeddings().params());
  ck.add(m.params());
  return ck;
}

template <typename Scalar>
GuideModel<Scalar> from_checkpoint(const data::Checkpoint& ck) {
  if (ck.metadata.value("kind", std::string()) != "guide") throw FormatError("checkpoint does not hold a guide model");
  GuideConfig cfg;
  try {
    cfg = config_from_json(ck.metadata.at("architecture"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("guide checkpoint metadata: ") + e.what());
  }
  auto tables = std::make_shared<EmbeddingTables<Scalar>>(ck.params<Scalar>("embed."));
  return GuideModel<Scalar>(cfg, std::move(tables), ck.params<Scalar>("guide."));
}

}  // namespace qrw::guide
