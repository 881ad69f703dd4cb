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

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "qrw/autodiff/ops.hpp"
#include "qrw/data/dataset.hpp"
#include "qrw/guide/embedding.hpp"
#include "qrw/nn/layers.hpp"
#include "qrw/nn/trainer.hpp"

namespace qrw::guide {

using data::Label;
using text::TokenSeq;

struct GuideConfig {
  Index vocab_size = 0;
  Index hidden = 64;
  Index layers = 2;
  Index heads = 4;
  Index ffn = 256;
  Index max_seq = 128;
  Index max_answer_len = 15;
  double lambda = 1.0;

  static GuideConfig desk(Index vocab_size) {
    GuideConfig c;
    c.vocab_size = vocab_size;
    return c;
  }

  // Large-model dimensions: 24 layers, h=1024, FFN 4096, 16 heads.
  static GuideConfig paper_scale(Index vocab_size) {
    GuideConfig c;
    c.vocab_size = vocab_size;
    c.hidden = 1024;
    c.layers = 24;
    c.heads = 16;
    c.ffn = 4096;
    c.max_seq = 384;
    c.max_answer_len = 30;
    return c;
  }

  void validate() const {
    if (vocab_size <= text::kNumReserved) throw ContractError("guide: vocabulary too small");
    if (hidden <= 0 || layers < 0 || heads <= 0 || ffn <= 0 || hidden % heads != 0) {
      throw ContractError("guide: invalid architecture dimensions");
    }
    if (max_seq < 4) throw ContractError("guide: max_seq must be at least 4");
  }
};

/// E_q rows are [CLS] q [SEP] (segment 0); E_d rows are d [SEP] (segment 1),
/// with positions continuing after the question.
template <typename Scalar>
struct PackedInput {
  EmbeddingSeq<Scalar> question;
  EmbeddingSeq<Scalar> paragraph;
  std::vector<text::TokenId> question_ids;
  std::vector<text::TokenId> paragraph_ids;
  std::vector<Index> segments;
  std::vector<Index> positions;
  Index paragraph_tokens = 0;  // paragraph rows before the trailing [SEP]
  bool truncated = false;

  Index question_rows() const { return question.rows(); }
  Index paragraph_rows() const { return paragraph.rows(); }
};

template <typename Scalar>
struct GuideOutput {
  RowVec<Scalar> cls;
  Mat<Scalar> question_states;   // (n+2) x h
  Mat<Scalar> paragraph_states;  // m x h
  std::array<Scalar, 2> answer_logits{};
  std::array<Scalar, 2> p_answerable{};  // indexed by Label
  std::vector<Scalar> start_logits, end_logits;
  std::vector<Scalar> p_start, p_end;  // per paragraph row
  Scalar start_logit_cls = 0, end_logit_cls = 0;
  Scalar p_start_cls = 0, p_end_cls = 0;
  Scalar loss_a = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar loss_s = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar loss_e = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar loss_total = std::numeric_limits<Scalar>::quiet_NaN();
};

/// -log P_a(t') alone.
struct AnswerabilityLoss {
  Label target = Label::Unanswerable;
};

/// lambda * L_a(t) + L_s(s) + L_e(e). Unanswerable labels carry no span and
/// score the span heads at the [CLS] row.
struct MrcLoss {
  Label label = Label::Answerable;
  std::optional<Index> start;
  std::optional<Index> end;
  double lambda = 1.0;
};

using LossSpec = std::variant<AnswerabilityLoss, MrcLoss>;

struct Prediction {
  Label label = Label::Unanswerable;
  std::optional<Index> start;
  std::optional<Index> end;
  double p_answerable = 0;
};

namespace detail {

template <typename S>
S sigmoid(S x) {
  if (x >= 0) return S(1) / (S(1) + std::exp(-x));
  const S e = std::exp(x);
  return e / (S(1) + e);
}

template <typename S>
S softplus(S x) {
  return std::max(x, S(0)) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace detail

template <typename Scalar>
class GuideModel {
 public:
  using M = Mat<Scalar>;
  using V = ad::Var<Scalar>;

  GuideModel(const GuideConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    embeddings_ = std::make_shared<EmbeddingTables<Scalar>>(cfg_.vocab_size, cfg_.max_seq, cfg_.hidden, rng);
    build_layers(rng);
  }

  /// Reassembles a model from stored tensors.
  GuideModel(const GuideConfig& cfg, std::shared_ptr<EmbeddingTables<Scalar>> embeddings,
             const nn::ParamSet<Scalar>& body)
      : cfg_(cfg), embeddings_(std::move(embeddings)) {
    cfg_.validate();
    if (embeddings_->width() != cfg_.hidden) throw DimensionError("guide: embedding width != hidden");
    std::mt19937_64 rng(0);
    build_layers(rng);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const int id = static_cast<int>(i);
      const M& src = body.at(params_.name(id));
      if (src.rows() != params_[id].rows() || src.cols() != params_[id].cols()) {
        throw DimensionError("guide: stored tensor " + params_.name(id) + " has the wrong shape");
      }
      params_[id] = src;
    }
  }

  const GuideConfig& config() const { return cfg_; }
  const nn::ParamSet<Scalar>& params() const { return params_; }
  nn::ParamSet<Scalar>& mutable_params() { return params_; }
  const EmbeddingTables<Scalar>& embeddings() const { return *embeddings_; }
  EmbeddingTables<Scalar>& mutable_embeddings() { return *embeddings_; }
  std::shared_ptr<const EmbeddingTables<Scalar>> shared_embeddings() const { return embeddings_; }

  /// Hash over the body and the embedding tables.
  std::uint64_t hash() const {
    Fnv1a h;
    const std::uint64_t a = params_.hash();
    const std::uint64_t b = embeddings_->hash();
    h.update(&a, sizeof(a));
    h.update(&b, sizeof(b));
    return h.digest();
  }

  /// Token + segment + position sums. Overlong inputs lose paragraph tokens
  /// from the end (the trailing [SEP] is kept); the question is never cut.
  PackedInput<Scalar> embed(const TokenSeq& q, const TokenSeq& d) const {
    PackedInput<Scalar> in;
    in.question_ids = framed_question(q.ids);
    const auto qrows = static_cast<Index>(in.question_ids.size());
    if (qrows + 1 > cfg_.max_seq) {
      throw ContractError("question of " + std::to_string(q.size()) + " tokens exceeds max_seq " +
                          std::to_string(cfg_.max_seq));
    }
    const Index room = cfg_.max_seq - qrows - 1;
    const Index keep = std::min<Index>(room, static_cast<Index>(d.size()));
    in.truncated = keep < static_cast<Index>(d.size());
    in.paragraph_ids.assign(d.ids.begin(), d.ids.begin() + keep);
    in.paragraph_ids.push_back(text::kSep);
    in.paragraph_tokens = keep;
    in.question = embeddings_->lookup(in.question_ids, kQuestionSegment, 0);
    in.paragraph = embeddings_->lookup(in.paragraph_ids, kParagraphSegment, qrows);
    const Index total = qrows + static_cast<Index>(in.paragraph_ids.size());
    in.segments.resize(static_cast<std::size_t>(total));
    in.positions.resize(static_cast<std::size_t>(total));
    for (Index i = 0; i < total; ++i) {
      in.segments[static_cast<std::size_t>(i)] = i < qrows ? kQuestionSegment : kParagraphSegment;
      in.positions[static_cast<std::size_t>(i)] = i;
    }
    return in;
  }

  /// Graph nodes of one forward pass. Span logits cover every row; row 0 is
  /// [CLS] and paragraph row j is row question_rows + j.
  struct Graphed {
    V states;
    V answer_logits;  // 1 x 2
    V start_logits;   // rows x 1
    V end_logits;     // rows x 1
    Index question_rows = 0;
    Index paragraph_rows = 0;
  };

  Graphed build(const nn::Bound<Scalar>& b, V eq, V ed) const {
    if (eq.cols() != cfg_.hidden || ed.cols() != cfg_.hidden) {
      throw DimensionError("guide: embedding width " + std::to_string(eq.cols()) + " != " +
                           std::to_string(cfg_.hidden));
    }
    Graphed out;
    out.question_rows = eq.rows();
    out.paragraph_rows = ed.rows();
    out.states = body_(b, ad::concat_rows<Scalar>({eq, ed}));
    out.answer_logits = answer_head_(b, ad::slice_rows(out.states, 0, 1));
    out.start_logits = start_head_(b, out.states);
    out.end_logits = end_head_(b, out.states);
    return out;
  }

  /// Row of the span target: the paragraph position, or [CLS] when absent.
  Index span_row(const Graphed& g, std::optional<Index> pos) const {
    if (!pos) return 0;
    return g.question_rows + *pos;
  }

  V mrc_loss(const Graphed& g, const MrcLoss& spec) const {
    check_span(spec.label, spec.start, spec.end, g.paragraph_rows);
    V la = ad::cross_entropy(g.answer_logits, {static_cast<Index>(spec.label)});
    V ls = ad::neg_log_sigmoid(ad::slice_rows(g.start_logits, span_row(g, spec.start), 1));
    V le = ad::neg_log_sigmoid(ad::slice_rows(g.end_logits, span_row(g, spec.end), 1));
    return (la * static_cast<Scalar>(spec.lambda) + ls) + le;
  }

  V answerability_loss(const Graphed& g, Label target) const {
    return ad::cross_entropy(g.answer_logits, {static_cast<Index>(target)});
  }

  V loss_node(const Graphed& g, const LossSpec& spec) const {
    if (const auto* a = std::get_if<AnswerabilityLoss>(&spec)) return answerability_loss(g, a->target);
    return mrc_loss(g, std::get<MrcLoss>(spec));
  }

  /// Objective used for fitting: lambda * L_a plus per-position binary
  /// cross-entropy of both span heads over [CLS] and every paragraph row.
  V training_loss(const Graphed& g, const MrcLoss& spec) const {
    check_span(spec.label, spec.start, spec.end, g.paragraph_rows);
    auto& graph = g.states.graph();
    V la = ad::cross_entropy(g.answer_logits, {static_cast<Index>(spec.label)});
    auto span_term = [&](V logits, std::optional<Index> pos) {
      V cand = ad::concat_rows<Scalar>(
          {ad::slice_rows(logits, 0, 1), ad::slice_rows(logits, g.question_rows, g.paragraph_rows)});
      M sign = M::Ones(g.paragraph_rows + 1, 1);
      sign(pos ? *pos + 1 : 0, 0) = Scalar(-1);
      return ad::sum_all(ad::softplus(ad::hadamard(cand, graph.constant(std::move(sign)))));
    };
    return (la * static_cast<Scalar>(spec.lambda) + span_term(g.start_logits, spec.start)) +
           span_term(g.end_logits, spec.end);
  }

  GuideOutput<Scalar> forward(const PackedInput<Scalar>& in) const {
    ad::Graph<Scalar> g;
    nn::Bound<Scalar> b(g, params_, false);
    const Graphed gr = build(b, g.parameter(in.question, false), g.parameter(in.paragraph, false));
    GuideOutput<Scalar> out;
    const M& states = gr.states.value();
    const Index q = gr.question_rows;
    const Index m = gr.paragraph_rows;
    out.cls = states.row(0);
    out.question_states = states.topRows(q);
    out.paragraph_states = states.bottomRows(m);
    const M& al = gr.answer_logits.value();
    out.answer_logits = {al(0, 0), al(0, 1)};
    const Scalar mx = std::max(al(0, 0), al(0, 1));
    const Scalar e0 = std::exp(al(0, 0) - mx);
    const Scalar e1 = std::exp(al(0, 1) - mx);
    out.p_answerable = {e0 / (e0 + e1), e1 / (e0 + e1)};
    const M& sl = gr.start_logits.value();
    const M& el = gr.end_logits.value();
    out.start_logit_cls = sl(0, 0);
    out.end_logit_cls = el(0, 0);
    out.p_start_cls = detail::sigmoid(sl(0, 0));
    out.p_end_cls = detail::sigmoid(el(0, 0));
    for (Index j = 0; j < m; ++j) {
      out.start_logits.push_back(sl(q + j, 0));
      out.end_logits.push_back(el(q + j, 0));
      out.p_start.push_back(detail::sigmoid(sl(q + j, 0)));
      out.p_end.push_back(detail::sigmoid(el(q + j, 0)));
    }
    return out;
  }

  /// Fills the loss fields of `out` and returns the total.
  static Scalar loss(GuideOutput<Scalar>& out, std::optional<Index> start, std::optional<Index> end, Label t,
                     Scalar lambda) {
    check_span(t, start, end, static_cast<Index>(out.p_start.size()));
    const Scalar a0 = out.answer_logits[0];
    const Scalar a1 = out.answer_logits[1];
    const Scalar mx = std::max(a0, a1);
    const Scalar lse = mx + std::log(std::exp(a0 - mx) + std::exp(a1 - mx));
    out.loss_a = lse - out.answer_logits[static_cast<std::size_t>(t)];
    const Scalar sl = start ? out.start_logits[static_cast<std::size_t>(*start)] : out.start_logit_cls;
    const Scalar el = end ? out.end_logits[static_cast<std::size_t>(*end)] : out.end_logit_cls;
    out.loss_s = detail::softplus(-sl);
    out.loss_e = detail::softplus(-el);
    out.loss_total = lambda * out.loss_a + out.loss_s + out.loss_e;
    return out.loss_total;
  }

  Prediction predict(const PackedInput<Scalar>& in) const {
    const GuideOutput<Scalar> out = forward(in);
    Prediction p;
    p.p_answerable = static_cast<double>(out.p_answerable[1]);
    if (out.p_answerable[1] <= out.p_answerable[0]) return p;
    p.label = Label::Answerable;
    double best = -1;
    for (Index s = 0; s < in.paragraph_tokens; ++s) {
      const Index last = std::min(in.paragraph_tokens, s + cfg_.max_answer_len);
      for (Index e = s; e < last; ++e) {
        const double score = static_cast<double>(out.p_start[static_cast<std::size_t>(s)]) *
                             static_cast<double>(out.p_end[static_cast<std::size_t>(e)]);
        if (score > best) {
          best = score;
          p.start = s;
          p.end = e;
        }
      }
    }
    return p;
  }

  Prediction predict(const TokenSeq& q, const TokenSeq& d) const { return predict(embed(q, d)); }

  /// d loss / d E_q with every parameter held fixed.
  M grad_wrt_question(const PackedInput<Scalar>& in, const LossSpec& spec) const {
    ad::Graph<Scalar> g;
    nn::Bound<Scalar> b(g, params_, false);
    V eq = g.variable(in.question, true);
    const Graphed gr = build(b, eq, g.parameter(in.paragraph, false));
    return g.backward(loss_node(gr, spec)).at(eq);
  }

  Scalar loss_value(const PackedInput<Scalar>& in, const LossSpec& spec) const {
    ad::Graph<Scalar> g;
    nn::Bound<Scalar> b(g, params_, false);
    const Graphed gr = build(b, g.parameter(in.question, false), g.parameter(in.paragraph, false));
    return loss_node(gr, spec).value()(0, 0);
  }

  static void check_span(Label t, std::optional<Index> start, std::optional<Index> end, Index rows) {
    if (t == Label::Answerable) {
      if (!start || !end) throw ContractError("answerable target needs a span");
      if (*start < 0 || *start > *end || *end >= rows) {
        throw ContractError("span [" + std::to_string(*start) + ", " + std::to_string(*end) +
                            "] outside " + std::to_string(rows) + " paragraph rows");
      }
    } else if (start || end) {
      throw ContractError("unanswerable target must not carry a span");
    }
  }

 private:
  void build_layers(std::mt19937_64& rng) {
    body_ = nn::TransformerStack::create(params_, "guide.body", cfg_.hidden, cfg_.layers, cfg_.heads, cfg_.ffn, rng);
    answer_head_ = nn::Linear::create(params_, "guide.answer_head", cfg_.hidden, 2, rng);
    start_head_ = nn::Linear::create(params_, "guide.start_head", cfg_.hidden, 1, rng);
    end_head_ = nn::Linear::create(params_, "guide.end_head", cfg_.hidden, 1, rng);
  }

  GuideConfig cfg_;
  std::shared_ptr<EmbeddingTables<Scalar>> embeddings_;
  nn::ParamSet<Scalar> params_;
  nn::TransformerStack body_;
  nn::Linear answer_head_, start_head_, end_head_;
};

}  // namespace qrw::guide
