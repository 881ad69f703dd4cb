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

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "qrw/autodiff/ops.hpp"
#include "qrw/nn/params.hpp"

namespace qrw::nn {

struct Linear {
  int weight = -1;  // in x out
  int bias = -1;    // 1 x out

  template <typename S>
  static Linear create(ParamSet<S>& p, const std::string& name, Index in, Index out, std::mt19937_64& rng) {
    Linear l;
    l.weight = p.add(name + ".weight", xavier_init<S>(in, out, rng));
    l.bias = p.add(name + ".bias", Mat<S>::Zero(1, out));
    return l;
  }

  template <typename S>
  ad::Var<S> operator()(const Bound<S>& b, ad::Var<S> x) const {
    return ad::add_row(ad::matmul(x, b[weight]), b[bias]);
  }
};

struct LayerNorm {
  int gamma = -1;
  int beta = -1;

  template <typename S>
  static LayerNorm create(ParamSet<S>& p, const std::string& name, Index width) {
    LayerNorm l;
    l.gamma = p.add(name + ".gamma", Mat<S>::Ones(1, width));
    l.beta = p.add(name + ".beta", Mat<S>::Zero(1, width));
    return l;
  }

  template <typename S>
  ad::Var<S> operator()(const Bound<S>& b, ad::Var<S> x) const {
    return ad::layer_norm(x, b[gamma], b[beta]);
  }
};

/// Scaled dot-product multi-head self-attention.
struct SelfAttention {
  Linear query, key, value, output;
  Index heads = 1;

  template <typename S>
  static SelfAttention create(ParamSet<S>& p, const std::string& name, Index width, Index heads,
                              std::mt19937_64& rng) {
    if (heads <= 0 || width % heads != 0) {
      throw ContractError("attention width " + std::to_string(width) + " not divisible by " +
                          std::to_string(heads) + " heads");
    }
    SelfAttention a;
    a.query = Linear::create(p, name + ".query", width, width, rng);
    a.key = Linear::create(p, name + ".key", width, width, rng);
    // Keys start equal to queries, so initial scores favour identical inputs.
    p[a.key.weight] = p[a.query.weight];
    a.value = Linear::create(p, name + ".value", width, width, rng);
    a.output = Linear::create(p, name + ".output", width, width, rng);
    a.heads = heads;
    return a;
  }

  // `mask`, when valid, is added to every head's score matrix.
  template <typename S>
  ad::Var<S> operator()(const Bound<S>& b, ad::Var<S> x, ad::Var<S> mask = {}) const {
    const Index width = x.cols();
    const Index dk = width / heads;
    const S inv_sqrt = S(1) / std::sqrt(static_cast<S>(dk));
    ad::Var<S> q = query(b, x);
    ad::Var<S> k = key(b, x);
    ad::Var<S> v = value(b, x);
    std::vector<ad::Var<S>> outs;
    outs.reserve(static_cast<std::size_t>(heads));
    for (Index h = 0; h < heads; ++h) {
      ad::Var<S> qh = heads == 1 ? q : ad::slice_cols(q, h * dk, dk);
      ad::Var<S> kh = heads == 1 ? k : ad::slice_cols(k, h * dk, dk);
      ad::Var<S> vh = heads == 1 ? v : ad::slice_cols(v, h * dk, dk);
      ad::Var<S> scores = ad::matmul_nt(qh, kh) * inv_sqrt;
      if (mask.valid()) scores = scores + mask;
      outs.push_back(ad::matmul(ad::softmax(scores), vh));
    }
    ad::Var<S> joined = heads == 1 ? outs.front() : ad::concat_cols(outs);
    return output(b, joined);
  }
};

/// Post-norm Transformer layer: LN(x + Attn(x)), then LN(y + FFN(y)).
struct TransformerLayer {
  SelfAttention attention;
  LayerNorm attention_norm;
  Linear ffn_in, ffn_out;
  LayerNorm ffn_norm;

  template <typename S>
  static TransformerLayer create(ParamSet<S>& p, const std::string& name, Index width, Index heads,
                                 Index ffn_width, std::mt19937_64& rng) {
    TransformerLayer t;
    t.attention = SelfAttention::create(p, name + ".attn", width, heads, rng);
    t.attention_norm = LayerNorm::create(p, name + ".attn_norm", width);
    t.ffn_in = Linear::create(p, name + ".ffn_in", width, ffn_width, rng);
    t.ffn_out = Linear::create(p, name + ".ffn_out", ffn_width, width, rng);
    t.ffn_norm = LayerNorm::create(p, name + ".ffn_norm", width);
    return t;
  }

  template <typename S>
  ad::Var<S> operator()(const Bound<S>& b, ad::Var<S> x, ad::Var<S> mask = {}) const {
    ad::Var<S> y = attention_norm(b, x + attention(b, x, mask));
    return ffn_norm(b, y + ffn_out(b, ad::gelu(ffn_in(b, y))));
  }
};

struct TransformerStack {
  LayerNorm input_norm;
  std::vector<TransformerLayer> layers;

  template <typename S>
  static TransformerStack create(ParamSet<S>& p, const std::string& name, Index width, Index depth,
                                 Index heads, Index ffn_width, std::mt19937_64& rng) {
    TransformerStack s;
    s.input_norm = LayerNorm::create(p, name + ".input_norm", width);
    for (Index i = 0; i < depth; ++i) {
      s.layers.push_back(
          TransformerLayer::create(p, name + ".layer" + std::to_string(i), width, heads, ffn_width, rng));
    }
    return s;
  }

  template <typename S>
  ad::Var<S> operator()(const Bound<S>& b, ad::Var<S> x, ad::Var<S> mask = {}) const {
    ad::Var<S> h = input_norm(b, x);
    for (const auto& layer : layers) h = layer(b, h, mask);
    return h;
  }
};

/// GRU run left to right over the rows of a sequence.
struct Gru {
  int w = -1, u = -1, bw = -1, bu = -1;
  Index hidden = 0;

  template <typename S>
  static Gru create(ParamSet<S>& p, const std::string& name, Index in, Index hidden, std::mt19937_64& rng) {
    Gru g;
    g.w = p.add(name + ".w", xavier_init<S>(in, 3 * hidden, rng));
    g.u = p.add(name + ".u", xavier_init<S>(hidden, 3 * hidden, rng));
    g.bw = p.add(name + ".bw", Mat<S>::Zero(1, 3 * hidden));
    g.bu = p.add(name + ".bu", Mat<S>::Zero(1, 3 * hidden));
    g.hidden = hidden;
    return g;
  }

  // Hidden states for every position, starting from a zero state.
  template <typename S>
  std::vector<ad::Var<S>> operator()(const Bound<S>& b, ad::Var<S> seq) const {
    auto& g = seq.graph();
    ad::Var<S> h = g.constant(Mat<S>::Zero(1, hidden));
    std::vector<ad::Var<S>> states;
    states.reserve(static_cast<std::size_t>(seq.rows()));
    for (Index t = 0; t < seq.rows(); ++t) {
      h = ad::gru_cell(ad::slice_rows(seq, t, 1), h, b[w], b[u], b[bw], b[bu]);
      states.push_back(h);
    }
    return states;
  }
};

template <typename S>
Mat<S> causal_mask(Index n) {
  Mat<S> m = Mat<S>::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) m(i, j) = S(-1e9);
  }
  return m;
}

}  // namespace qrw::nn
