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
#include "qrw/eval/report.hpp"
#include "qrw/guide/guide.hpp"
#include "qrw/rewriter/rewriter.hpp"

namespace qrw::eval {

template <typename Scalar>
MrcPredictor guide_predictor(const guide::GuideModel<Scalar>& model) {
  return [&model](const DataTuple& t, const TokenSeq& d) {
    const guide::Prediction p = model.predict(t.question, d);
    return MrcAnswer{p.label, p.start, p.end};
  };
}

template <typename Scalar>
Reconstructor ae_reconstructor(const ae::AutoEncoder<Scalar>& model) {
  return [&model](const TokenSeq& q) { return model.reconstruct(q).tokens; };
}

inline StrategyStats summarize(const std::string& strategy, const std::vector<rewrite::Outcome>& outcomes) {
  StrategyStats s;
  s.strategy = strategy;
  s.sources = outcomes.size();
  for (const auto& o : outcomes) {
    if (!o.records.empty()) ++s.sources_with_record;
    s.records += o.records.size();
    s.attempts += static_cast<std::size_t>(o.attempts);
    s.flips += static_cast<std::size_t>(o.flips);
    s.changed += static_cast<std::size_t>(o.changed);
  }
  return s;
}

inline std::vector<data::AugmentedRecord> collect(const std::vector<rewrite::Outcome>& outcomes) {
  std::vector<data::AugmentedRecord> out;
  for (const auto& o : outcomes) out.insert(out.end(), o.records.begin(), o.records.end());
  return out;
}

}  // namespace qrw::eval
