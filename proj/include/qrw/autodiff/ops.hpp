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

#include <vector>

#include "qrw/autodiff/graph.hpp"

// Free-function spelling of the graph ops, so model code reads as math.

namespace qrw::ad {

template <typename S>
Var<S> matmul(Var<S> a, Var<S> b) { return a.graph().matmul(a, b); }

template <typename S>
Var<S> matmul_nt(Var<S> a, Var<S> b) { return a.graph().matmul_nt(a, b); }

template <typename S>
Var<S> operator+(Var<S> a, Var<S> b) { return a.graph().add(a, b); }

template <typename S>
Var<S> operator-(Var<S> a, Var<S> b) { return a.graph().sub(a, b); }

template <typename S>
Var<S> operator*(Var<S> a, S s) { return a.graph().scale(a, s); }

template <typename S>
Var<S> operator*(S s, Var<S> a) { return a.graph().scale(a, s); }

template <typename S>
Var<S> operator-(Var<S> a) { return a.graph().scale(a, S(-1)); }

template <typename S>
Var<S> hadamard(Var<S> a, Var<S> b) { return a.graph().mul(a, b); }

template <typename S>
Var<S> add_row(Var<S> a, Var<S> row) { return a.graph().add_row(a, row); }

template <typename S>
Var<S> softmax(Var<S> a) { return a.graph().softmax(a); }

template <typename S>
Var<S> sigmoid(Var<S> a) { return a.graph().sigmoid(a); }

template <typename S>
Var<S> tanh(Var<S> a) { return a.graph().tanh(a); }

template <typename S>
Var<S> relu(Var<S> a) { return a.graph().relu(a); }

template <typename S>
Var<S> gelu(Var<S> a) { return a.graph().gelu(a); }

template <typename S>
Var<S> softplus(Var<S> a) { return a.graph().softplus(a); }

// -log sigmoid(a), elementwise.
template <typename S>
Var<S> neg_log_sigmoid(Var<S> a) { return softplus(-a); }

template <typename S>
Var<S> layer_norm(Var<S> x, Var<S> gamma, Var<S> beta) { return x.graph().layer_norm(x, gamma, beta); }

template <typename S>
Var<S> gather(Var<S> table, std::vector<Index> ids) { return table.graph().gather(table, std::move(ids)); }

template <typename S>
Var<S> gru_cell(Var<S> x, Var<S> h, Var<S> w, Var<S> u, Var<S> bw, Var<S> bu) {
  return x.graph().gru_cell(x, h, w, u, bw, bu);
}

template <typename S>
Var<S> sum_rows(Var<S> a) { return a.graph().sum_rows(a); }

template <typename S>
Var<S> sum_all(Var<S> a) { return a.graph().sum_all(a); }

template <typename S>
Var<S> cross_entropy(Var<S> logits, std::vector<Index> targets) {
  return logits.graph().cross_entropy(logits, std::move(targets));
}

template <typename S>
Var<S> concat_rows(const std::vector<Var<S>>& parts) { return parts.front().graph().concat_rows(parts); }

template <typename S>
Var<S> concat_cols(const std::vector<Var<S>>& parts) { return parts.front().graph().concat_cols(parts); }

template <typename S>
Var<S> slice_rows(Var<S> a, Index offset, Index count) { return a.graph().slice_rows(a, offset, count); }

template <typename S>
Var<S> slice_cols(Var<S> a, Index offset, Index count) { return a.graph().slice_cols(a, offset, count); }

template <typename S>
Var<S> transpose(Var<S> a) { return a.graph().transpose(a); }

}  // namespace qrw::ad
