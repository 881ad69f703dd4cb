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
#include <cstdint>
#include <exception>
#include <functional>
#include <numeric>
#include <random>
#include <thread>
#include <vector>

#include "qrw/nn/params.hpp"

namespace qrw::nn {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 16;
  double lr = 3e-4;
  double warmup_fraction = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 1.0;  // <= 0 disables clipping
  std::uint64_t seed = 1;
  int threads = 1;
};

/// Flat list of the matrices an optimizer updates.
template <typename Scalar>
using ParamRefs = std::vector<Mat<Scalar>*>;

template <typename Scalar>
void append_refs(ParamRefs<Scalar>& refs, ParamSet<Scalar>& params) {
  for (std::size_t i = 0; i < params.size(); ++i) refs.push_back(&params[static_cast<int>(i)]);
}

/// Adam with linear warmup followed by linear decay to zero.
template <typename Scalar>
class Adam {
 public:
  Adam(const ParamRefs<Scalar>& params, const TrainConfig& cfg, long total_steps)
      : cfg_(cfg), total_steps_(std::max(1L, total_steps)) {
    for (const auto* p : params) {
      m_.push_back(Mat<Scalar>::Zero(p->rows(), p->cols()));
      v_.push_back(Mat<Scalar>::Zero(p->rows(), p->cols()));
    }
  }

  double learning_rate(long step) const {
    const long warmup = std::max(1L, static_cast<long>(cfg_.warmup_fraction * static_cast<double>(total_steps_)));
    if (step < warmup) return cfg_.lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
    const double rest = static_cast<double>(total_steps_ - step) / static_cast<double>(total_steps_ - warmup + 1);
    return cfg_.lr * std::max(0.0, rest);
  }

  void step(const ParamRefs<Scalar>& params, std::vector<Mat<Scalar>>& grads) {
    if (cfg_.clip_norm > 0) {
      double sq = 0;
      for (const auto& g : grads) sq += static_cast<double>(g.squaredNorm());
      const double norm = std::sqrt(sq);
      if (norm > cfg_.clip_norm) {
        const auto f = static_cast<Scalar>(cfg_.clip_norm / norm);
        for (auto& g : grads) g *= f;
      }
    }
    const double lr = learning_rate(t_);
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const auto b1 = static_cast<Scalar>(cfg_.beta1);
    const auto b2 = static_cast<Scalar>(cfg_.beta2);
    const auto step_size = static_cast<Scalar>(lr / bc1);
    const auto eps = static_cast<Scalar>(cfg_.adam_eps);
    const auto inv_sqrt_bc2 = static_cast<Scalar>(1.0 / std::sqrt(bc2));
    for (std::size_t i = 0; i < grads.size(); ++i) {
      if (grads[i].size() == 0) continue;
      m_[i] = b1 * m_[i] + (Scalar(1) - b1) * grads[i];
      v_[i] = b2 * v_[i] + (Scalar(1) - b2) * grads[i].cwiseAbs2();
      params[i]->array() -=
          step_size * m_[i].array() / ((v_[i].array().sqrt() * inv_sqrt_bc2) + eps);
    }
  }

  long steps_taken() const { return t_; }

 private:
  TrainConfig cfg_;
  long total_steps_;
  long t_ = 0;
  std::vector<Mat<Scalar>> m_, v_;
};

/// Per-example gradient callback: returns the example loss and writes
/// gradients aligned with the trainable refs (empty matrix = no grad).
template <typename Scalar>
using ExampleGrad = std::function<Scalar(std::size_t example, std::uint64_t example_seed,
                                         std::vector<Mat<Scalar>>& grads)>;

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0;
};

/// Mini-batch training loop. Per-example gradients are computed (optionally
/// on several threads) into separate buffers and reduced in example order, so
/// the result does not depend on the thread count.
template <typename Scalar>
void train_loop(const ParamRefs<Scalar>& params, std::size_t n_examples, const TrainConfig& cfg,
                const ExampleGrad<Scalar>& example_grad,
                const std::function<bool(const EpochStats&)>& on_epoch = {}) {
  if (n_examples == 0) throw ContractError("train_loop: empty training set");
  const std::size_t batch = static_cast<std::size_t>(std::max(1, cfg.batch_size));
  const long steps_per_epoch = static_cast<long>((n_examples + batch - 1) / batch);
  Adam<Scalar> opt(params, cfg, steps_per_epoch * cfg.epochs);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(n_examples);
  std::iota(order.begin(), order.end(), std::size_t{0});

  const std::size_t threads = static_cast<std::size_t>(std::max(1, cfg.threads));
  std::vector<std::vector<Mat<Scalar>>> per_example(batch);
  std::vector<Scalar> losses(batch);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < n_examples; start += batch) {
      const std::size_t count = std::min(batch, n_examples - start);
      std::vector<std::uint64_t> seeds(count);
      for (auto& s : seeds) s = rng();

      std::vector<std::exception_ptr> failures(count);
      auto work = [&](std::size_t k) {
        auto& g = per_example[k];
        g.assign(params.size(), Mat<Scalar>());
        try {
          losses[k] = example_grad(order[start + k], seeds[k], g);
        } catch (...) {
          failures[k] = std::current_exception();
        }
      };
      if (threads == 1 || count == 1) {
        for (std::size_t k = 0; k < count; ++k) work(k);
      } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(threads, count); ++t) {
          pool.emplace_back([&, t] {
            for (std::size_t k = t; k < count; k += threads) work(k);
          });
        }
        for (auto& th : pool) th.join();
      }
      for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
      }

      std::vector<Mat<Scalar>> total(params.size());
      const Scalar inv = Scalar(1) / static_cast<Scalar>(count);
      for (std::size_t k = 0; k < count; ++k) {
        if (!std::isfinite(static_cast<double>(losses[k]))) {
          throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch) + ", example " +
                                 std::to_string(order[start + k]));
        }
        epoch_loss += static_cast<double>(losses[k]);
        for (std::size_t i = 0; i < params.size(); ++i) {
          const auto& gi = per_example[k][i];
          if (gi.size() == 0) continue;
          if (total[i].size() == 0) {
            total[i] = gi * inv;
          } else {
            total[i] += gi * inv;
          }
        }
      }
      opt.step(params, total);
    }
    // A false return from the callback stops training early.
    if (on_epoch && !on_epoch({epoch, epoch_loss / static_cast<double>(n_examples)})) break;
  }
}

}  // namespace qrw::nn
