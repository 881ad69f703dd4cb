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

#include <random>

#include "doctest.h"
#include "qrw/autodiff/gradcheck.hpp"
#include "qrw/autodiff/ops.hpp"
#include "op_cases.hpp"

using namespace qrw;
using namespace qrw::ad;
using D = double;
using MD = Mat<D>;

namespace {

using probes::random_mat;
using probes::weighted_sum;

constexpr D kEps = 1e-5;
constexpr D kTol = 1e-4;

}  // namespace

TEST_CASE("forward examples") {
  Graph<D> g;
  MD eye = MD::Identity(2, 2);
  MD b(2, 2);
  b << 2, 3, 4, 5;
  CHECK(matmul(g.constant(eye), g.constant(b)).value() == b);
  CHECK(sigmoid(g.constant(MD::Zero(1, 1))).value()(0, 0) == doctest::Approx(0.5));
  auto s = softmax(g.constant(MD::Zero(1, 2))).value();
  CHECK(s(0, 0) == doctest::Approx(0.5));
  CHECK(s(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("softmax is stable for large logits") {
  Graph<D> g;
  MD x(1, 3);
  x << 1000, 1000, -1000;
  auto y = softmax(g.constant(x)).value();
  CHECK(y(0, 0) == doctest::Approx(0.5));
  CHECK(y(0, 2) == doctest::Approx(0.0));
}

TEST_CASE("shape mismatch raises dimension error") {
  Graph<D> g;
  auto a = g.constant(MD::Zero(2, 3));
  auto b = g.constant(MD::Zero(2, 3));
  CHECK_THROWS_AS(matmul(a, b), DimensionError);
  CHECK_THROWS_AS(a + g.constant(MD::Zero(3, 2)), DimensionError);
  CHECK_THROWS_AS(slice_rows(a, 1, 2), DimensionError);
  CHECK_THROWS_AS(gather(a, {5}), DimensionError);
}

TEST_CASE("non-finite output raises numeric error") {
  Graph<D> g;
  MD big = MD::Constant(1, 1, 1e300);
  auto a = g.constant(big);
  CHECK_THROWS_AS(hadamard(a, a), NumericError);
}

TEST_CASE("backward of sum of squares") {
  Graph<D> g;
  MD x(1, 3);
  x << 1, 2, 3;
  auto v = g.variable(x);
  auto grads = g.backward(sum_all(hadamard(v, v)));
  MD expected(1, 3);
  expected << 2, 4, 6;
  CHECK(grads.at(v).isApprox(expected));
}

TEST_CASE("sigmoid gradient at zero weight") {
  Graph<D> g;
  MD x(3, 1);
  x << 1, -2, 0.5;
  auto w = g.variable(MD::Zero(1, 3));
  auto loss = sigmoid(matmul(w, g.constant(x)));
  auto grads = g.backward(loss);
  CHECK(grads.at(w).isApprox(0.25 * x.transpose()));
}

TEST_CASE("backward rejects non-scalar loss") {
  Graph<D> g;
  auto v = g.variable(MD::Ones(2, 2));
  CHECK_THROWS_AS(g.backward(v), ContractError);
}

TEST_CASE("gradient_check basics") {
  MD x(1, 3);
  x << 1, 2, 3;
  ScalarFn<D> sq = [](Graph<D>&, Var<D> v) { return sum_all(hadamard(v, v)); };
  CHECK(gradient_check(sq, x, 1e-5) < 1e-8);
  ScalarFn<D> constant = [](Graph<D>& g, Var<D>) { return g.constant(MD::Constant(1, 1, 4.0)); };
  CHECK(gradient_check(constant, x, 1e-5) == 0.0);
  std::mt19937_64 rng(3);
  MD gamma = random_mat(1, 8, rng);
  MD beta = random_mat(1, 8, rng);
  ScalarFn<D> ln = [&](Graph<D>& g, Var<D> v) {
    return sum_all(layer_norm(v, g.constant(gamma), g.constant(beta)));
  };
  CHECK(gradient_check(ln, random_mat(1, 8, rng), 1e-5) < 1e-5);
  CHECK_THROWS_AS(gradient_check(sq, x, 0.0), ContractError);
}

// Every op kind against central differences on randomized shapes up to 16x16.
TEST_CASE("op gradients match finite differences") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    probes::op_cases(rng, [&](const char* name, const ScalarFn<D>& f, const MD& x) {
      CAPTURE(name);
      CHECK(gradient_check(f, x, kEps) < kTol);
    });
  }
}

TEST_CASE("backward is repeatable and leaves forward values intact") {
  std::mt19937_64 rng(5);
  Graph<D> g;
  auto x = g.variable(random_mat(4, 6, rng));
  auto w = g.variable(random_mat(6, 3, rng));
  auto y = softmax(matmul(x, w));
  auto loss = weighted_sum(tanh(y));
  const MD before = y.value();
  auto g1 = g.backward(loss);
  auto g2 = g.backward(loss);
  CHECK(y.value() == before);
  CHECK(g1.at(x) == g2.at(x));
  CHECK(g1.at(w) == g2.at(w));
  CHECK(g1.at(x).rows() == 4);
  CHECK(g1.at(x).cols() == 6);
}

TEST_CASE("parameter leaves do not copy and receive no gradient when frozen") {
  MD p = MD::Ones(2, 2);
  Graph<D> g;
  auto frozen = g.parameter(p, false);
  auto v = g.variable(MD::Ones(2, 2));
  auto grads = g.backward(sum_all(hadamard(frozen, v)));
  CHECK_FALSE(grads.contains(frozen));
  CHECK(grads.contains(v));
  CHECK(&frozen.value() == &p);
}
