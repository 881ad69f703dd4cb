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

#include "qrw/rewriter/rewriter.hpp"

#include <cmath>

namespace qrw::rewrite {

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::ToUnanswerable: return "to-unanswerable";
    case Mode::ToAnswerable: return "to-answerable";
    case Mode::Both: return "both";
  }
  return "?";
}

Mode parse_mode(const std::string& name) {
  if (name == "to-unanswerable") return Mode::ToUnanswerable;
  if (name == "to-answerable") return Mode::ToAnswerable;
  if (name == "both") return Mode::Both;
  throw ParseError("unknown rewrite mode '" + name + "' (expected to-unanswerable, to-answerable or both)");
}

void RewriteConfig::validate() const {
  for (double eta : s_eta) {
    if (!(eta > 0) || !std::isfinite(eta)) throw ContractError("rewrite: step sizes must be positive");
  }
  if (!(beta_s > 0 && beta_s <= 1)) throw ContractError("rewrite: beta_s must lie in (0, 1]");
  if (!(beta_t > 0 && beta_t <= 1)) throw ContractError("rewrite: beta_t must lie in (0, 1]");
  if (!(beta_a >= 0 && beta_a < beta_b && beta_b <= 1)) {
    throw ContractError("rewrite: need 0 <= beta_a < beta_b <= 1");
  }
  if (max_steps < 0) throw ContractError("rewrite: max_steps must be non-negative");
  if (!std::isfinite(lambda)) throw ContractError("rewrite: lambda must be finite");
}

std::vector<Label> RewriteConfig::targets() const {
  switch (mode) {
    case Mode::ToUnanswerable: return {Label::Unanswerable};
    case Mode::ToAnswerable: return {Label::Answerable};
    case Mode::Both: return {Label::Unanswerable, Label::Answerable};
  }
  return {};
}

bool accept(const text::TokenSeq& q, const text::TokenSeq& q_hat, double p_target, const RewriteConfig& cfg) {
  if (!(p_target > cfg.beta_t)) return false;
  const double j = text::jaccard_unigram(q, q_hat);
  return j >= cfg.beta_a && j <= cfg.beta_b;
}

namespace detail {

std::uint64_t source_seed(const std::string& source_id, std::uint64_t seed) {
  Fnv1a h;
  h.update(&seed, sizeof(seed));
  h.update(source_id);
  return h.digest();
}

}  // namespace detail

}  // namespace qrw::rewrite
