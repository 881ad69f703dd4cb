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
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qrw/core/types.hpp"

namespace qrw::ad {

enum class OpKind {
  Leaf,
  MatMul,
  MatMulNT,  // a * b^T
  Add,
  Sub,
  Mul,
  Scale,
  AddRow,  // matrix + broadcast row vector
  Softmax,
  Sigmoid,
  Tanh,
  Relu,
  Gelu,
  Softplus,
  LayerNorm,
  Gather,
  GruCell,
  SumRows,
  SumAll,
  CrossEntropy,
  ConcatRows,
  ConcatCols,
  SliceRows,
  SliceCols,
  Transpose,
};

std::string_view op_name(OpKind kind);

template <typename Scalar>
class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Graph<Scalar>* graph, int id) : graph_(graph), id_(id) {}

  int id() const { return id_; }
  Graph<Scalar>& graph() const { return *graph_; }
  const Mat<Scalar>& value() const { return graph_->value(*this); }
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool requires_grad() const { return graph_->requires_grad(*this); }
  bool valid() const { return graph_ != nullptr; }

 private:
  Graph<Scalar>* graph_ = nullptr;
  int id_ = -1;
};

// Gradients keyed by node id; each gradient has its source tensor's shape.
template <typename Scalar>
class GradientMap {
 public:
  bool contains(const Var<Scalar>& v) const { return grads_.count(v.id()) > 0; }
  const Mat<Scalar>& at(const Var<Scalar>& v) const {
    auto it = grads_.find(v.id());
    if (it == grads_.end()) {
      throw ContractError("no gradient recorded for node " + std::to_string(v.id()));
    }
    return it->second;
  }
  Mat<Scalar>& at(const Var<Scalar>& v) {
    return const_cast<Mat<Scalar>&>(std::as_const(*this).at(v));
  }
  void set(int id, Mat<Scalar> g) { grads_[id] = std::move(g); }
  std::size_t size() const { return grads_.size(); }

 private:
  std::map<int, Mat<Scalar>> grads_;
};

/// Reverse-mode tape. Nodes are appended in execution order, so the node
/// vector is already a topological order. Leaves either own their value or
/// reference caller storage that must outlive the graph and stay unchanged.
///
/// A graph has a single owner; build separate graphs for parallel work.
template <typename Scalar>
class Graph {
 public:
  using M = Mat<Scalar>;
  using V = Var<Scalar>;

  Graph() { nodes_.reserve(256); }
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf that owns a copy of `value`.
  V variable(M value, bool requires_grad = true) {
    Node n;
    n.kind = OpKind::Leaf;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    return push_leaf(std::move(n));
  }
  V constant(M value) { return variable(std::move(value), false); }

  /// Leaf that refers to external storage without copying it.
  V parameter(const M& value, bool requires_grad) {
    Node n;
    n.kind = OpKind::Leaf;
    n.external = &value;
    n.requires_grad = requires_grad;
    return push_leaf(std::move(n));
  }

  const M& value(const V& v) const {
    const Node& n = nodes_[static_cast<std::size_t>(v.id())];
    return n.external ? *n.external : n.value;
  }
  bool requires_grad(const V& v) const {
    return nodes_[static_cast<std::size_t>(v.id())].requires_grad;
  }
  OpKind kind(const V& v) const { return nodes_[static_cast<std::size_t>(v.id())].kind; }
  std::size_t size() const { return nodes_.size(); }

  // Forward ops. Shape errors throw DimensionError; non-finite outputs throw
  // NumericError.

  V matmul(V a, V b) {
    const M& x = value(a);
    const M& y = value(b);
    if (x.cols() != y.rows()) dim_error(OpKind::MatMul, x, y);
    return push(OpKind::MatMul, {a, b}, x * y);
  }

  V matmul_nt(V a, V b) {
    const M& x = value(a);
    const M& y = value(b);
    if (x.cols() != y.cols()) dim_error(OpKind::MatMulNT, x, y);
    return push(OpKind::MatMulNT, {a, b}, x * y.transpose());
  }

  V add(V a, V b) {
    same_shape(OpKind::Add, a, b);
    return push(OpKind::Add, {a, b}, value(a) + value(b));
  }

  V sub(V a, V b) {
    same_shape(OpKind::Sub, a, b);
    return push(OpKind::Sub, {a, b}, value(a) - value(b));
  }

  V mul(V a, V b) {
    same_shape(OpKind::Mul, a, b);
    return push(OpKind::Mul, {a, b}, value(a).cwiseProduct(value(b)));
  }

  V scale(V a, Scalar s) {
    V out = push(OpKind::Scale, {a}, value(a) * s);
    node(out).scalar = s;
    return out;
  }

  V add_row(V a, V row) {
    const M& x = value(a);
    const M& r = value(row);
    if (r.rows() != 1 || r.cols() != x.cols()) dim_error(OpKind::AddRow, x, r);
    M out = x;
    out.rowwise() += r.row(0);
    return push(OpKind::AddRow, {a, row}, std::move(out));
  }

  // Row-wise softmax with max subtraction.
  V softmax(V a) {
    const M& x = value(a);
    M out(x.rows(), x.cols());
    for (Index i = 0; i < x.rows(); ++i) {
      const Scalar mx = x.row(i).maxCoeff();
      out.row(i) = (x.row(i).array() - mx).exp().matrix();
      out.row(i) /= out.row(i).sum();
    }
    return push(OpKind::Softmax, {a}, std::move(out));
  }

  V sigmoid(V a) {
    return push(OpKind::Sigmoid, {a}, value(a).unaryExpr([](Scalar v) { return stable_sigmoid(v); }));
  }

  V tanh(V a) { return push(OpKind::Tanh, {a}, value(a).array().tanh().matrix()); }

  V relu(V a) { return push(OpKind::Relu, {a}, value(a).cwiseMax(Scalar(0))); }

  // tanh approximation of GELU.
  V gelu(V a) {
    const M& x = value(a);
    M out = x.unaryExpr([](Scalar v) {
      const Scalar u = kGeluC * (v + Scalar(0.044715) * v * v * v);
      return Scalar(0.5) * v * (Scalar(1) + std::tanh(u));
    });
    return push(OpKind::Gelu, {a}, std::move(out));
  }

  // log(1 + exp(x)), computed without overflow.
  V softplus(V a) {
    return push(OpKind::Softplus, {a}, value(a).unaryExpr([](Scalar v) { return stable_softplus(v); }));
  }

  // Per-row normalization followed by the affine gamma/beta rows.
  V layer_norm(V x, V gamma, V beta, Scalar eps = Scalar(1e-5)) {
    const M& in = value(x);
    const M& g = value(gamma);
    const M& b = value(beta);
    if (g.rows() != 1 || g.cols() != in.cols()) dim_error(OpKind::LayerNorm, in, g);
    if (b.rows() != 1 || b.cols() != in.cols()) dim_error(OpKind::LayerNorm, in, b);
    const Index c = in.cols();
    M xhat(in.rows(), c);
    M rstd(in.rows(), 1);
    for (Index i = 0; i < in.rows(); ++i) {
      const Scalar mu = in.row(i).mean();
      const auto centered = (in.row(i).array() - mu).matrix();
      const Scalar var = centered.squaredNorm() / static_cast<Scalar>(c);
      rstd(i, 0) = Scalar(1) / std::sqrt(var + eps);
      xhat.row(i) = centered * rstd(i, 0);
    }
    M out = xhat.array().rowwise() * g.row(0).array();
    out.rowwise() += b.row(0);
    V v = push(OpKind::LayerNorm, {x, gamma, beta}, std::move(out));
    node(v).saved = std::move(xhat);
    node(v).saved2 = std::move(rstd);
    return v;
  }

  // Rows of `table` selected by `ids`.
  V gather(V table, std::vector<Index> ids) {
    const M& t = value(table);
    M out(static_cast<Index>(ids.size()), t.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] < 0 || ids[i] >= t.rows()) {
        throw DimensionError("gather: id " + std::to_string(ids[i]) + " outside table of " +
                             std::to_string(t.rows()) + " rows");
      }
      out.row(static_cast<Index>(i)) = t.row(ids[i]);
    }
    V v = push(OpKind::Gather, {table}, std::move(out));
    node(v).indices = std::move(ids);
    return v;
  }

  /// One GRU step with reset/update/candidate gating:
  ///   r = sigma(x Wr + bwr + h Ur + bur)
  ///   z = sigma(x Wz + bwz + h Uz + buz)
  ///   n = tanh(x Wn + bwn + r * (h Un + bun))
  ///   h' = (1 - z) * n + z * h
  /// with W (in x 3H), U (H x 3H) and biases (1 x 3H) packed as [r | z | n].
  V gru_cell(V x, V h, V w, V u, V bw, V bu) {
    const M& xv = value(x);
    const M& hv = value(h);
    const M& wv = value(w);
    const M& uv = value(u);
    const M& bwv = value(bw);
    const M& buv = value(bu);
    const Index H = hv.cols();
    if (xv.rows() != 1 || hv.rows() != 1) dim_error(OpKind::GruCell, xv, hv);
    if (wv.rows() != xv.cols() || wv.cols() != 3 * H) dim_error(OpKind::GruCell, xv, wv);
    if (uv.rows() != H || uv.cols() != 3 * H) dim_error(OpKind::GruCell, hv, uv);
    if (bwv.rows() != 1 || bwv.cols() != 3 * H) dim_error(OpKind::GruCell, wv, bwv);
    if (buv.rows() != 1 || buv.cols() != 3 * H) dim_error(OpKind::GruCell, uv, buv);
    const M gx = xv * wv + bwv;
    const M gh = hv * uv + buv;
    M saved(1, 4 * H);
    M out(1, H);
    for (Index j = 0; j < H; ++j) {
      const Scalar r = stable_sigmoid(gx(0, j) + gh(0, j));
      const Scalar z = stable_sigmoid(gx(0, H + j) + gh(0, H + j));
      const Scalar n = std::tanh(gx(0, 2 * H + j) + r * gh(0, 2 * H + j));
      out(0, j) = (Scalar(1) - z) * n + z * hv(0, j);
      saved(0, j) = r;
      saved(0, H + j) = z;
      saved(0, 2 * H + j) = n;
      saved(0, 3 * H + j) = gh(0, 2 * H + j);
    }
    V v = push(OpKind::GruCell, {x, h, w, u, bw, bu}, std::move(out));
    node(v).saved = std::move(saved);
    return v;
  }

  V sum_rows(V a) { return push(OpKind::SumRows, {a}, value(a).colwise().sum()); }

  V sum_all(V a) {
    M out(1, 1);
    out(0, 0) = value(a).sum();
    return push(OpKind::SumAll, {a}, std::move(out));
  }

  /// Sum over rows of -log softmax(logits_i)[targets_i]; returns 1x1.
  V cross_entropy(V logits, std::vector<Index> targets) {
    const M& x = value(logits);
    if (static_cast<Index>(targets.size()) != x.rows()) {
      throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                           std::to_string(x.rows()) + " rows");
    }
    M probs(x.rows(), x.cols());
    Scalar total = 0;
    for (Index i = 0; i < x.rows(); ++i) {
      const Index t = targets[static_cast<std::size_t>(i)];
      if (t < 0 || t >= x.cols()) throw DimensionError("cross_entropy: target out of range");
      const Scalar mx = x.row(i).maxCoeff();
      probs.row(i) = (x.row(i).array() - mx).exp().matrix();
      const Scalar z = probs.row(i).sum();
      probs.row(i) /= z;
      total += std::log(z) + mx - x(i, t);
    }
    M out(1, 1);
    out(0, 0) = total;
    V v = push(OpKind::CrossEntropy, {logits}, std::move(out));
    node(v).saved = std::move(probs);
    node(v).indices = std::move(targets);
    return v;
  }

  V concat_rows(const std::vector<V>& parts) {
    if (parts.empty()) throw DimensionError("concat_rows: no inputs");
    const Index c = value(parts.front()).cols();
    Index r = 0;
    for (const V& p : parts) {
      if (value(p).cols() != c) dim_error(OpKind::ConcatRows, value(parts.front()), value(p));
      r += value(p).rows();
    }
    M out(r, c);
    Index at = 0;
    for (const V& p : parts) {
      out.middleRows(at, value(p).rows()) = value(p);
      at += value(p).rows();
    }
    return push(OpKind::ConcatRows, parts, std::move(out));
  }

  V concat_cols(const std::vector<V>& parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no inputs");
    const Index r = value(parts.front()).rows();
    Index c = 0;
    for (const V& p : parts) {
      if (value(p).rows() != r) dim_error(OpKind::ConcatCols, value(parts.front()), value(p));
      c += value(p).cols();
    }
    M out(r, c);
    Index at = 0;
    for (const V& p : parts) {
      out.middleCols(at, value(p).cols()) = value(p);
      at += value(p).cols();
    }
    return push(OpKind::ConcatCols, parts, std::move(out));
  }

  V slice_rows(V a, Index offset, Index count) {
    const M& x = value(a);
    if (offset < 0 || count < 0 || offset + count > x.rows()) {
      throw DimensionError("slice_rows: [" + std::to_string(offset) + ", +" + std::to_string(count) +
                           ") outside " + std::to_string(x.rows()) + " rows");
    }
    V v = push(OpKind::SliceRows, {a}, x.middleRows(offset, count));
    node(v).offset = offset;
    return v;
  }

  V slice_cols(V a, Index offset, Index count) {
    const M& x = value(a);
    if (offset < 0 || count < 0 || offset + count > x.cols()) {
      throw DimensionError("slice_cols: [" + std::to_string(offset) + ", +" + std::to_string(count) +
                           ") outside " + std::to_string(x.cols()) + " cols");
    }
    V v = push(OpKind::SliceCols, {a}, x.middleCols(offset, count));
    node(v).offset = offset;
    return v;
  }

  V transpose(V a) { return push(OpKind::Transpose, {a}, value(a).transpose()); }

  /// Gradients of the scalar `loss` for every reachable requires_grad leaf.
  /// Forward values are left untouched, so repeated calls are identical.
  GradientMap<Scalar> backward(V loss) const {
    const M& lv = value(loss);
    if (lv.rows() != 1 || lv.cols() != 1) {
      throw ContractError("backward: loss must be 1x1, got " + std::to_string(lv.rows()) + "x" +
                          std::to_string(lv.cols()));
    }
    std::vector<M> grads(nodes_.size());
    std::vector<char> live(nodes_.size(), 0);
    grads[static_cast<std::size_t>(loss.id())] = M::Ones(1, 1);
    live[static_cast<std::size_t>(loss.id())] = 1;

    GradientMap<Scalar> result;
    for (int id = loss.id(); id >= 0; --id) {
      const auto i = static_cast<std::size_t>(id);
      if (!live[i] || !nodes_[i].requires_grad) continue;
      if (nodes_[i].kind == OpKind::Leaf) {
        result.set(id, std::move(grads[i]));
        continue;
      }
      propagate(id, grads[i], grads, live);
      grads[i] = M();
    }
    return result;
  }

 private:
  static constexpr Scalar kGeluC = Scalar(0.7978845608028654);  // sqrt(2/pi)

  struct Node {
    OpKind kind = OpKind::Leaf;
    std::vector<int> inputs;
    M value;
    const M* external = nullptr;
    bool requires_grad = false;
    std::vector<Index> indices;
    M saved;
    M saved2;
    Scalar scalar = 0;
    Index offset = 0;
  };

  static Scalar stable_sigmoid(Scalar v) {
    if (v >= 0) return Scalar(1) / (Scalar(1) + std::exp(-v));
    const Scalar e = std::exp(v);
    return e / (Scalar(1) + e);
  }
  static Scalar stable_softplus(Scalar v) {
    return std::max(v, Scalar(0)) + std::log1p(std::exp(-std::abs(v)));
  }

  Node& node(const V& v) { return nodes_[static_cast<std::size_t>(v.id())]; }

  V push_leaf(Node n) {
    const M& val = n.external ? *n.external : n.value;
    if (!val.allFinite()) throw NumericError("leaf: non-finite value");
    nodes_.push_back(std::move(n));
    return V(this, static_cast<int>(nodes_.size()) - 1);
  }

  V push(OpKind kind, std::initializer_list<V> inputs, M value) {
    return push(kind, std::vector<V>(inputs), std::move(value));
  }

  V push(OpKind kind, const std::vector<V>& inputs, M value) {
    if (!value.allFinite()) {
      throw NumericError(std::string(op_name(kind)) + ": non-finite output");
    }
    Node n;
    n.kind = kind;
    n.value = std::move(value);
    n.inputs.reserve(inputs.size());
    for (const V& in : inputs) {
      if (&in.graph() != this) throw ContractError("input belongs to a different graph");
      n.inputs.push_back(in.id());
      n.requires_grad = n.requires_grad || requires_grad(in);
    }
    nodes_.push_back(std::move(n));
    return V(this, static_cast<int>(nodes_.size()) - 1);
  }

  void same_shape(OpKind kind, const V& a, const V& b) const {
    const M& x = value(a);
    const M& y = value(b);
    if (x.rows() != y.rows() || x.cols() != y.cols()) dim_error(kind, x, y);
  }

  [[noreturn]] static void dim_error(OpKind kind, const M& a, const M& b) {
    throw DimensionError(std::string(op_name(kind)) + ": incompatible shapes " +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " and " +
                         std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }

  // Accumulates `g` into input slot `k` of node `id`.
  template <typename Expr>
  void accumulate(const Node& n, std::size_t k, const Expr& g, std::vector<M>& grads,
                  std::vector<char>& live) const {
    const auto in = static_cast<std::size_t>(n.inputs[k]);
    if (!nodes_[in].requires_grad) return;
    if (!live[in]) {
      grads[in] = g;
      live[in] = 1;
    } else {
      grads[in] += g;
    }
  }

  bool wants(const Node& n, std::size_t k) const {
    return nodes_[static_cast<std::size_t>(n.inputs[k])].requires_grad;
  }

  const M& input(const Node& n, std::size_t k) const {
    const Node& src = nodes_[static_cast<std::size_t>(n.inputs[k])];
    return src.external ? *src.external : src.value;
  }

  void propagate(int id, const M& g, std::vector<M>& grads, std::vector<char>& live) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    const M& y = n.value;
    switch (n.kind) {
      case OpKind::Leaf:
        break;
      case OpKind::MatMul:
        if (wants(n, 0)) accumulate(n, 0, M(g * input(n, 1).transpose()), grads, live);
        if (wants(n, 1)) accumulate(n, 1, M(input(n, 0).transpose() * g), grads, live);
        break;
      case OpKind::MatMulNT:
        if (wants(n, 0)) accumulate(n, 0, M(g * input(n, 1)), grads, live);
        if (wants(n, 1)) accumulate(n, 1, M(g.transpose() * input(n, 0)), grads, live);
        break;
      case OpKind::Add:
        accumulate(n, 0, g, grads, live);
        accumulate(n, 1, g, grads, live);
        break;
      case OpKind::Sub:
        accumulate(n, 0, g, grads, live);
        if (wants(n, 1)) accumulate(n, 1, M(-g), grads, live);
        break;
      case OpKind::Mul:
        if (wants(n, 0)) accumulate(n, 0, M(g.cwiseProduct(input(n, 1))), grads, live);
        if (wants(n, 1)) accumulate(n, 1, M(g.cwiseProduct(input(n, 0))), grads, live);
        break;
      case OpKind::Scale:
        accumulate(n, 0, M(g * n.scalar), grads, live);
        break;
      case OpKind::AddRow:
        accumulate(n, 0, g, grads, live);
        if (wants(n, 1)) accumulate(n, 1, M(g.colwise().sum()), grads, live);
        break;
      case OpKind::Softmax: {
        M d(y.rows(), y.cols());
        for (Index i = 0; i < y.rows(); ++i) {
          const Scalar dot = g.row(i).dot(y.row(i));
          d.row(i) = (y.row(i).array() * (g.row(i).array() - dot)).matrix();
        }
        accumulate(n, 0, d, grads, live);
        break;
      }
      case OpKind::Sigmoid:
        accumulate(n, 0, M(g.array() * y.array() * (Scalar(1) - y.array())), grads, live);
        break;
      case OpKind::Tanh:
        accumulate(n, 0, M(g.array() * (Scalar(1) - y.array().square())), grads, live);
        break;
      case OpKind::Relu: {
        const M& x = input(n, 0);
        accumulate(n, 0, M(g.array() * (x.array() > Scalar(0)).template cast<Scalar>()), grads, live);
        break;
      }
      case OpKind::Gelu: {
        const M& x = input(n, 0);
        M d = x.unaryExpr([](Scalar v) {
          const Scalar u = kGeluC * (v + Scalar(0.044715) * v * v * v);
          const Scalar t = std::tanh(u);
          const Scalar du = kGeluC * (Scalar(1) + Scalar(3 * 0.044715) * v * v);
          return Scalar(0.5) * (Scalar(1) + t) + Scalar(0.5) * v * (Scalar(1) - t * t) * du;
        });
        accumulate(n, 0, M(g.cwiseProduct(d)), grads, live);
        break;
      }
      case OpKind::Softplus: {
        const M& x = input(n, 0);
        accumulate(n, 0, M(g.cwiseProduct(x.unaryExpr([](Scalar v) { return stable_sigmoid(v); }))),
                   grads, live);
        break;
      }
      case OpKind::LayerNorm: {
        const M& xhat = n.saved;
        const M& rstd = n.saved2;
        const M& gamma = input(n, 1);
        if (wants(n, 1)) accumulate(n, 1, M(g.cwiseProduct(xhat).colwise().sum()), grads, live);
        if (wants(n, 2)) accumulate(n, 2, M(g.colwise().sum()), grads, live);
        if (wants(n, 0)) {
          const Scalar c = static_cast<Scalar>(xhat.cols());
          M dxhat = g.array().rowwise() * gamma.row(0).array();
          M dx(xhat.rows(), xhat.cols());
          for (Index i = 0; i < xhat.rows(); ++i) {
            const Scalar s1 = dxhat.row(i).sum();
            const Scalar s2 = dxhat.row(i).dot(xhat.row(i));
            dx.row(i) = ((dxhat.row(i).array() * c - s1 - xhat.row(i).array() * s2) * (rstd(i, 0) / c))
                            .matrix();
          }
          accumulate(n, 0, dx, grads, live);
        }
        break;
      }
      case OpKind::Gather: {
        const M& table = input(n, 0);
        M d = M::Zero(table.rows(), table.cols());
        for (std::size_t i = 0; i < n.indices.size(); ++i) {
          d.row(n.indices[i]) += g.row(static_cast<Index>(i));
        }
        accumulate(n, 0, d, grads, live);
        break;
      }
      case OpKind::GruCell: {
        const M& x = input(n, 0);
        const M& h = input(n, 1);
        const M& w = input(n, 2);
        const M& u = input(n, 3);
        const Index H = h.cols();
        M dgx(1, 3 * H);
        M dgh(1, 3 * H);
        M dh_direct(1, H);
        for (Index j = 0; j < H; ++j) {
          const Scalar r = n.saved(0, j);
          const Scalar z = n.saved(0, H + j);
          const Scalar nn = n.saved(0, 2 * H + j);
          const Scalar ghn = n.saved(0, 3 * H + j);
          const Scalar gj = g(0, j);
          const Scalar dn = gj * (Scalar(1) - z);
          const Scalar dz = gj * (h(0, j) - nn);
          dh_direct(0, j) = gj * z;
          const Scalar dpre_n = dn * (Scalar(1) - nn * nn);
          const Scalar dr = dpre_n * ghn;
          const Scalar dpre_r = dr * r * (Scalar(1) - r);
          const Scalar dpre_z = dz * z * (Scalar(1) - z);
          dgx(0, j) = dpre_r;
          dgx(0, H + j) = dpre_z;
          dgx(0, 2 * H + j) = dpre_n;
          dgh(0, j) = dpre_r;
          dgh(0, H + j) = dpre_z;
          dgh(0, 2 * H + j) = dpre_n * r;
        }
        if (wants(n, 0)) accumulate(n, 0, M(dgx * w.transpose()), grads, live);
        if (wants(n, 1)) accumulate(n, 1, M(dh_direct + dgh * u.transpose()), grads, live);
        if (wants(n, 2)) accumulate(n, 2, M(x.transpose() * dgx), grads, live);
        if (wants(n, 3)) accumulate(n, 3, M(h.transpose() * dgh), grads, live);
        accumulate(n, 4, dgx, grads, live);
        accumulate(n, 5, dgh, grads, live);
        break;
      }
      case OpKind::SumRows: {
        const M& x = input(n, 0);
        accumulate(n, 0, M(g.replicate(x.rows(), 1)), grads, live);
        break;
      }
      case OpKind::SumAll: {
        const M& x = input(n, 0);
        accumulate(n, 0, M(M::Constant(x.rows(), x.cols(), g(0, 0))), grads, live);
        break;
      }
      case OpKind::CrossEntropy: {
        M d = n.saved;
        for (std::size_t i = 0; i < n.indices.size(); ++i) {
          d(static_cast<Index>(i), n.indices[i]) -= Scalar(1);
        }
        accumulate(n, 0, M(d * g(0, 0)), grads, live);
        break;
      }
      case OpKind::ConcatRows: {
        Index at = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          const Index r = input(n, k).rows();
          if (wants(n, k)) accumulate(n, k, M(g.middleRows(at, r)), grads, live);
          at += r;
        }
        break;
      }
      case OpKind::ConcatCols: {
        Index at = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          const Index c = input(n, k).cols();
          if (wants(n, k)) accumulate(n, k, M(g.middleCols(at, c)), grads, live);
          at += c;
        }
        break;
      }
      case OpKind::SliceRows: {
        const M& x = input(n, 0);
        M d = M::Zero(x.rows(), x.cols());
        d.middleRows(n.offset, g.rows()) = g;
        accumulate(n, 0, d, grads, live);
        break;
      }
      case OpKind::SliceCols: {
        const M& x = input(n, 0);
        M d = M::Zero(x.rows(), x.cols());
        d.middleCols(n.offset, g.cols()) = g;
        accumulate(n, 0, d, grads, live);
        break;
      }
      case OpKind::Transpose:
        accumulate(n, 0, M(g.transpose()), grads, live);
        break;
    }
  }

  std::vector<Node> nodes_;
};

inline std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Leaf: return "leaf";
    case OpKind::MatMul: return "matmul";
    case OpKind::MatMulNT: return "matmul_nt";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Scale: return "scale";
    case OpKind::AddRow: return "add_row";
    case OpKind::Softmax: return "softmax";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Tanh: return "tanh";
    case OpKind::Relu: return "relu";
    case OpKind::Gelu: return "gelu";
    case OpKind::Softplus: return "softplus";
    case OpKind::LayerNorm: return "layer_norm";
    case OpKind::Gather: return "gather";
    case OpKind::GruCell: return "gru_cell";
    case OpKind::SumRows: return "sum_rows";
    case OpKind::SumAll: return "sum_all";
    case OpKind::CrossEntropy: return "cross_entropy";
    case OpKind::ConcatRows: return "concat_rows";
    case OpKind::ConcatCols: return "concat_cols";
    case OpKind::SliceRows: return "slice_rows";
    case OpKind::SliceCols: return "slice_cols";
    case OpKind::Transpose: return "transpose";
  }
  return "unknown";
}

}  // namespace qrw::ad
