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
#include <vector>

#include "qrw/guide/guide.hpp"

namespace qrw::guide {

struct GuideEpochLog {
  int epoch = 0;
  double loss = 0;
  double dev_accuracy = 0;  // answerability, [0, 1]; NaN without a dev split
  double dev_span_em = 0;   // exact span match on answerable dev tuples
};

struct GuideTrainConfig {
  nn::TrainConfig train;
  std::function<void(const GuideEpochLog&)> on_epoch;
};

struct DevScore {
  double accuracy = 0;
  double span_em = 0;
  std::size_t count = 0;
};

/// Answerability accuracy and exact span match over `tuples`.
template <typename Scalar>
DevScore score_guide(const GuideModel<Scalar>& model, const data::Dataset& ds,
                     const std::vector<const data::DataTuple*>& tuples) {
  DevScore s;
  std::size_t correct = 0, answerable = 0, span_hits = 0;
  for (const auto* t : tuples) {
    const Prediction p = model.predict(t->question, ds.paragraph(*t));
    if (p.label == t->label) ++correct;
    if (t->label == Label::Answerable) {
      ++answerable;
      if (p.label == Label::Answerable && p.start == t->start && p.end == t->end) ++span_hits;
    }
  }
  s.count = tuples.size();
  s.accuracy = tuples.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(tuples.size());
  s.span_em = answerable == 0 ? 0.0 : static_cast<double>(span_hits) / static_cast<double>(answerable);
  return s;
}

/// Fits body, heads and embedding tables on the Train split of `ds`.
/// Tuples whose answer falls in the truncated part of the paragraph are
/// skipped. Throws TrainingDiverged on a non-finite loss.
template <typename Scalar>
void train_guide(GuideModel<Scalar>& model, const data::Dataset& ds, const GuideTrainConfig& cfg) {
  const auto train = ds.select(data::Split::Train);
  const auto dev = ds.select(data::Split::Dev);

  struct Example {
    PackedInput<Scalar> ids;  // only the id/row bookkeeping is used
    MrcLoss target;
  };
  std::vector<Example> examples;
  examples.reserve(train.size());
  for (const auto* t : train) {
    Example ex;
    PackedInput<Scalar> packed = model.embed(t->question, ds.paragraph(*t));
    if (t->end && *t->end >= packed.paragraph_tokens) continue;
    packed.question.resize(0, 0);
    packed.paragraph.resize(0, 0);
    ex.ids = std::move(packed);
    ex.target.label = t->label;
    ex.target.start = t->start;
    ex.target.end = t->end;
    ex.target.lambda = model.config().lambda;
    examples.push_back(std::move(ex));
  }
  if (examples.empty()) throw ContractError("train_guide: no usable training tuples");

  nn::ParamRefs<Scalar> refs;
  nn::append_refs(refs, model.mutable_params());
  nn::append_refs(refs, model.mutable_embeddings().mutable_params());
  const std::size_t n_body = model.params().size();

  nn::ExampleGrad<Scalar> grad_fn = [&](std::size_t i, std::uint64_t, std::vector<Mat<Scalar>>& grads) {
    const Example& ex = examples[i];
    ad::Graph<Scalar> g;
    nn::Bound<Scalar> body(g, model.params(), true);
    nn::Bound<Scalar> emb(g, model.embeddings().params(), true);
    const auto& tables = model.embeddings();
    const auto qrows = static_cast<Index>(ex.ids.question_ids.size());
    auto eq = tables.lookup(emb, ex.ids.question_ids, kQuestionSegment, 0);
    auto ed = tables.lookup(emb, ex.ids.paragraph_ids, kParagraphSegment, qrows);
    const auto gr = model.build(body, eq, ed);
    auto loss = model.training_loss(gr, ex.target);
    const auto map = g.backward(loss);
    for (std::size_t k = 0; k < body.size(); ++k) {
      const auto v = body[static_cast<int>(k)];
      if (map.contains(v)) grads[k] = map.at(v);
    }
    for (std::size_t k = 0; k < emb.size(); ++k) {
      const auto v = emb[static_cast<int>(k)];
      if (map.contains(v)) grads[n_body + k] = map.at(v);
    }
    return loss.value()(0, 0);
  };

  nn::train_loop<Scalar>(refs, examples.size(), cfg.train, grad_fn, [&](const nn::EpochStats& st) {
    if (cfg.on_epoch) {
      GuideEpochLog log;
      log.epoch = st.epoch;
      log.loss = st.mean_loss;
      if (!dev.empty()) {
        const DevScore s = score_guide(model, ds, dev);
        log.dev_accuracy = s.accuracy;
        log.dev_span_em = s.span_em;
      } else {
        log.dev_accuracy = log.dev_span_em = std::numeric_limits<double>::quiet_NaN();
      }
      cfg.on_epoch(log);
    }
    return true;
  });
}

template <typename Scalar>
GuideModel<Scalar> train_guide(const data::Dataset& ds, const GuideConfig& gcfg, const GuideTrainConfig& cfg) {
  if (ds.tuples.empty()) throw ContractError("train_guide: empty dataset");
  GuideModel<Scalar> model(gcfg, cfg.train.seed);
  train_guide(model, ds, cfg);
  return model;
}

}  // namespace qrw::guide
