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
#include <cmath>
#include <functional>

#include "qrw/autodiff/graph.hpp"

namespace qrw::ad {

template <typename S>
using ScalarFn = std::function<Var<S>(Graph<S>&, Var<S>)>;

/// Compares the reverse-mode gradient of `f` at `x` with central differences.
/// Returns max_i |a_i - c_i| / (|a_i| + |c_i| + 1e-12).
template <typename S>
S gradient_check(const ScalarFn<S>& f, const Mat<S>& x, S eps) {
  if (!(eps > S(0))) throw ContractError("gradient_check: eps must be positive");

  Mat<S> analytic;
  {
    Graph<S> g;
    Var<S> in = g.variable(x, true);
    Var<S> out = f(g, in);
    auto grads = g.backward(out);
    analytic = grads.contains(in) ? grads.at(in) : Mat<S>::Zero(x.rows(), x.cols());
  }

  auto eval = [&](const Mat<S>& at) {
    Graph<S> g;
    Var<S> out = f(g, g.constant(at));
    const S v = out.value()(0, 0);
    if (!std::isfinite(v)) throw NumericError("gradient_check: non-finite function value");
    return v;
  };

  S worst = 0;
  Mat<S> probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    const S orig = probe.data()[i];
    probe.data()[i] = orig + eps;
    const S up = eval(probe);
    probe.data()[i] = orig - eps;
    const S down = eval(probe);
    probe.data()[i] = orig;
    const S central = (up - down) / (S(2) * eps);
    const S a = analytic.data()[i];
    worst = std::max(worst, std::abs(a - central) / (std::abs(a) + std::abs(central) + S(1e-12)));
  }
  return worst;
}

}  // namespace qrw::ad
