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
#include <unordered_map>
#include <vector>

#include "qrw/autodiff/graph.hpp"

namespace qrw::nn {

/// Ordered collection of named parameter matrices.
template <typename Scalar>
class ParamSet {
 public:
  using M = Mat<Scalar>;

  int add(const std::string& name, M value) {
    if (index_.count(name)) throw ContractError("duplicate parameter name: " + name);
    const int id = static_cast<int>(values_.size());
    index_[name] = id;
    names_.push_back(name);
    values_.push_back(std::move(value));
    return id;
  }

  std::size_t size() const { return values_.size(); }
  const std::string& name(int id) const { return names_[static_cast<std::size_t>(id)]; }
  const M& operator[](int id) const { return values_[static_cast<std::size_t>(id)]; }
  M& operator[](int id) { return values_[static_cast<std::size_t>(id)]; }

  int find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
  }
  const M& at(const std::string& name) const {
    const int id = find(name);
    if (id < 0) throw ContractError("unknown parameter: " + name);
    return (*this)[id];
  }
  M& at(const std::string& name) { return const_cast<M&>(std::as_const(*this).at(name)); }

  Index scalar_count() const {
    Index n = 0;
    for (const M& v : values_) n += v.size();
    return n;
  }

  std::uint64_t hash() const {
    Fnv1a h;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      h.update(names_[i]);
      h.update(values_[i]);
    }
    return h.digest();
  }

  template <typename Other>
  ParamSet<Other> cast() const {
    ParamSet<Other> out;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      out.add(names_[i], values_[i].template cast<Other>());
    }
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<M> values_;
  std::unordered_map<std::string, int> index_;
};

/// Graph leaves for every parameter of a set, aligned by parameter id.
template <typename Scalar>
class Bound {
 public:
  Bound(ad::Graph<Scalar>& g, const ParamSet<Scalar>& params, bool requires_grad) {
    vars_.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      vars_.push_back(g.parameter(params[static_cast<int>(i)], requires_grad));
    }
  }
  ad::Var<Scalar> operator[](int id) const { return vars_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return vars_.size(); }

 private:
  std::vector<ad::Var<Scalar>> vars_;
};

// Initializers draw in double and cast, so a seed gives the same weights at
// every precision.
template <typename Scalar>
Mat<Scalar> normal_init(Index rows, Index cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Mat<Scalar> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(dist(rng));
  return m;
}

template <typename Scalar>
Mat<Scalar> xavier_init(Index rows, Index cols, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Mat<Scalar> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(dist(rng));
  return m;
}

}  // namespace qrw::nn
