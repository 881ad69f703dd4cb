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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "qrw/core/types.hpp"
#include "qrw/data/synthetic.hpp"
#include "qrw/rewriter/rewriter.hpp"

namespace qrw::cli {

/// Bad flags, bad config files and missing inputs. Exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct StageTraining {
  int epochs = 1;
  int batch_size = 16;
  double lr = 1e-3;
  double warmup_fraction = 0.1;
  double clip_norm = 1.0;
};

struct Paths {
  // Empty entries resolve under output_dir (see RunConfig::resolved).
  std::string train, dev, vocab, guide, ae, augmented;
};

struct RunConfig {
  std::uint64_t seed = 7;
  int threads = 1;
  std::string preset = "desk";         // desk | paper-scale
  std::string precision = "float32";   // float32 | float64
  std::string output_dir = "run";
  Paths paths;

  data::SyntheticConfig data;  // data.seed follows `seed`
  StageTraining guide{16, 8, 1e-3, 0.1, 1.0};
  double guide_lambda = 1.0;
  StageTraining ae{2, 16, 1e-3, 0.1, 1.0};
  std::string ae_mask = "none";  // none | wiki-mask | custom
  double ae_mask_rate = 0.0;

  rewrite::RewriteConfig rewrite;
  int max_sources = 200;  // 0 rewrites every answerable source
  std::string source_split = "train";
  bool noise_baseline = true;
  double noise_sigma = 0.1;

  std::string merge_mode = "both";
  int eval_max_questions = 0;  // 0 evaluates every held-in question

  /// Checks values; throws UsageError.
  void validate() const;

  /// Effective mask rate after applying the `ae_mask` preset.
  double mask_rate() const;

  /// Paths with defaults filled in.
  Paths resolved() const;

  /// Seed of a named stage, derived from `seed`.
  std::uint64_t stage_seed(const std::string& stage) const;
};

nlohmann::ordered_json to_json(const RunConfig& c);

/// Overlays `j` onto `c`. Unknown keys and wrong types raise UsageError
/// naming the offending key path.
void apply_json(RunConfig& c, const nlohmann::ordered_json& j);

RunConfig load_config(const std::filesystem::path& path);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace qrw::cli
