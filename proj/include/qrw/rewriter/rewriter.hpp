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

#include <algorithm>
#include <cstdint>
#include <exception>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "qrw/autoencoder/autoencoder.hpp"
#include "qrw/data/augmented.hpp"
#include "qrw/guide/guide.hpp"
#include "qrw/text/metrics.hpp"

namespace qrw::rewrite {

using data::AugmentedRecord;
using data::DataTuple;
using data::Label;

enum class Mode { ToUnanswerable, ToAnswerable, Both };

const char* mode_name(Mode m);
Mode parse_mode(const std::string& name);

struct RewriteConfig {
  std::vector<double> s_eta{1.0, 2.0, 4.0, 8.0};
  double beta_s = 0.9;
  double beta_t = 0.5;
  double beta_a = 0.5;
  double beta_b = 0.99;
  int max_steps = 5;
  double lambda = 1.0;
  Mode mode = Mode::ToUnanswerable;
  bool dedup = true;
  // Keep the [CLS] and [SEP] rows of E_q fixed while revising.
  bool freeze_special_rows = false;
  // Score P_a(t') on the revised embeddings instead of the decoded question.
  bool score_embeddings = false;

  void validate() const;

  /// Target labels produced from an answerable source.
  std::vector<Label> targets() const;
};

/// E - eta * grad, leaving E untouched.
template <typename Scalar>
Mat<Scalar> revise_step(const Mat<Scalar>& e, const Mat<Scalar>& grad, double eta) {
  if (e.rows() != grad.rows() || e.cols() != grad.cols()) {
    throw ContractError("revise_step: gradient is " + std::to_string(grad.rows()) + "x" +
                        std::to_string(grad.cols()) + ", embeddings are " + std::to_string(e.rows()) + "x" +
                        std::to_string(e.cols()));
  }
  if (!(eta >= 0)) throw ContractError("revise_step: negative step size");
  return e - static_cast<Scalar>(eta) * grad;
}

/// eta_0 * beta_s^k, by repeated multiplication (the order the loop uses).
inline double step_size(double eta0, double beta_s, int k) {
  double eta = eta0;
  for (int i = 0; i < k; ++i) eta *= beta_s;
  return eta;
}

/// p > beta_t and J(q, q_hat) in [beta_a, beta_b].
bool accept(const text::TokenSeq& q, const text::TokenSeq& q_hat, double p_target, const RewriteConfig& cfg);

/// Per-source bookkeeping next to the accepted records.
struct Outcome {
  std::vector<AugmentedRecord> records;
  int attempts = 0;  // decoded candidates examined
  int flips = 0;     // candidates the guide assigns to the target label
  int changed = 0;   // candidates whose tokens differ from the source
};

struct NoiseConfig {
  double sigma = 1.0;
  std::uint64_t seed = 1;
};

namespace detail {

std::uint64_t source_seed(const std::string& source_id, std::uint64_t seed);

// Shared loop. `revise(E, eta, target)` returns the next embeddings.
template <typename Scalar, typename Revise>
Outcome run(const data::Dataset& ds, const DataTuple& t, const RewriteConfig& cfg,
            const guide::GuideModel<Scalar>& guide, const ae::AutoEncoder<Scalar>& ae, const char* strategy,
            Revise&& revise) {
  cfg.validate();
  if (ae.shared_embeddings().get() != &guide.embeddings()) {
    throw ContractError("rewrite: guide and autoencoder do not share embedding tables");
  }
  if (t.label != Label::Answerable) {
    throw ContractError("rewrite: source " + t.id + " is not answerable");
  }
  Outcome out;
  const text::TokenSeq& d = ds.paragraph(t);
  const guide::PackedInput<Scalar> base = guide.embed(t.question, d);
  std::vector<std::string> seen;
  for (const Label target : cfg.targets()) {
    for (std::size_t k = 0; k < cfg.s_eta.size(); ++k) {
      Mat<Scalar> e = base.question;
      for (int step = 0; step < cfg.max_steps; ++step) {
        const double eta = step_size(cfg.s_eta[k], cfg.beta_s, step);
        Mat<Scalar> next = revise(base, e, eta, target);
        if (cfg.freeze_special_rows) {
          next.row(0) = base.question.row(0);
          next.row(next.rows() - 1) = base.question.row(base.question.rows() - 1);
        }
        e = std::move(next);
        const ae::Decoded dec = ae.decode_embeddings(e);
        const text::TokenSeq q_hat = text::from_ids(dec.tokens.ids, *ds.vocab);
        double p = 0;
        if (cfg.score_embeddings) {
          guide::PackedInput<Scalar> moved = base;
          moved.question = e;
          p = static_cast<double>(guide.forward(moved).p_answerable[static_cast<std::size_t>(target)]);
        } else {
          p = static_cast<double>(guide.forward(guide.embed(q_hat, d)).p_answerable[static_cast<std::size_t>(target)]);
        }
        ++out.attempts;
        if (p > 0.5) ++out.flips;
        if (q_hat.ids != t.question.ids) ++out.changed;
        if (!accept(t.question, q_hat, p, cfg)) continue;
        if (cfg.dedup) {
          const std::string key = std::string(data::label_name(target)) + "\n" + q_hat.surface;
          if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
          seen.push_back(key);
        }
        AugmentedRecord r;
        r.source_id = t.id;
        r.question = q_hat;
        r.paragraph_id = t.paragraph_id;
        if (target == Label::Answerable) {
          r.start = t.start;
          r.end = t.end;
        } else {
          r.plausible_start = t.start;
          r.plausible_end = t.end;
        }
        r.target = target;
        r.p_target = p;
        r.jaccard = text::jaccard_unigram(t.question, q_hat);
        r.eta_init = cfg.s_eta[k];
        r.eta_index = static_cast<int>(k);
        r.step_index = step;
        r.strategy = strategy;
        out.records.push_back(std::move(r));
      }
    }
  }
  return out;
}

}  // namespace detail

/// Gradient-guided rewriting of one answerable tuple. Each initial step size
/// restarts from the original E_q; the gradient is recomputed after every
/// step. Both models are only read.
template <typename Scalar>
Outcome rewrite(const data::Dataset& ds, const DataTuple& t, const RewriteConfig& cfg,
                const guide::GuideModel<Scalar>& guide, const ae::AutoEncoder<Scalar>& ae) {
  auto revise = [&](const guide::PackedInput<Scalar>& base, const Mat<Scalar>& e, double eta, Label target) {
    guide::PackedInput<Scalar> in = base;
    in.question = e;
    guide::LossSpec spec = guide::AnswerabilityLoss{target};
    if (target == Label::Answerable) spec = guide::MrcLoss{Label::Answerable, t.start, t.end, cfg.lambda};
    return revise_step(e, guide.grad_wrt_question(in, spec), eta);
  };
  return detail::run(ds, t, cfg, guide, ae, "gradient", revise);
}

/// The same loop with the gradient replaced by Gaussian noise of standard
/// deviation sigma * eta. Noise is seeded from the source id.
template <typename Scalar>
Outcome noise_rewrite(const data::Dataset& ds, const DataTuple& t, const NoiseConfig& noise,
                      const RewriteConfig& cfg, const guide::GuideModel<Scalar>& guide,
                      const ae::AutoEncoder<Scalar>& ae) {
  if (!(noise.sigma > 0)) throw ContractError("noise_rewrite: sigma must be positive");
  std::mt19937_64 rng(detail::source_seed(t.id, noise.seed));
  std::normal_distribution<double> unit(0.0, 1.0);
  auto revise = [&](const guide::PackedInput<Scalar>&, const Mat<Scalar>& e, double eta, Label) {
    Mat<Scalar> out = e;
    const double sd = noise.sigma * eta;
    for (Index i = 0; i < out.size(); ++i) out.data()[i] += static_cast<Scalar>(sd * unit(rng));
    return out;
  };
  return detail::run(ds, t, cfg, guide, ae, "noise", revise);
}

/// Rewrites every tuple in `sources`, optionally on several threads. Results
/// keep the order of `sources`.
template <typename Scalar, typename Fn>
std::vector<Outcome> rewrite_all(const std::vector<const DataTuple*>& sources, int threads, Fn&& one) {
  std::vector<Outcome> out(sources.size());
  std::vector<std::exception_ptr> failures(sources.size());
  auto work = [&](std::size_t i) {
    try {
      out[i] = one(*sources[i]);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };
  const auto n = static_cast<std::size_t>(std::max(1, threads));
  if (n == 1) {
    for (std::size_t i = 0; i < sources.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < sources.size(); i += n) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return out;
}

}  // namespace qrw::rewrite
