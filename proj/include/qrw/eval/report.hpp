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

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qrw/data/augmented.hpp"
#include "qrw/data/dataset.hpp"

namespace qrw::eval {

using data::Dataset;
using data::DataTuple;
using text::TokenSeq;

enum class Range { Percent, Unit, Count, Real };

struct Metric {
  std::string name;
  double value = 0;
  Range range = Range::Percent;
};

struct Table {
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Named metrics plus optional per-split breakdowns and tables. Percent
/// metrics are on a 0-100 scale.
struct EvalReport {
  std::string title;
  std::vector<Metric> metrics;
  std::map<std::string, std::vector<Metric>> breakdown;
  std::vector<Table> tables;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  double wall_seconds = 0;

  void add(std::string name, double value, Range range = Range::Percent);
  double get(const std::string& name) const;  // ContractError when absent
  bool has(const std::string& name) const;

  /// Throws ContractError when a metric leaves its declared range.
  void check_ranges() const;

  std::string to_text() const;
  /// Wall-clock time is left out when `with_time` is false.
  nlohmann::ordered_json to_json(bool with_time = true) const;
  /// <stem>.txt and <stem>.json in `dir`.
  void write(const std::filesystem::path& dir, const std::string& stem) const;
};

inline double percent(double unit) { return 100.0 * unit; }

/// A model's answer to one tuple: a label and, when answerable, a span.
struct MrcAnswer {
  data::Label label = data::Label::Unanswerable;
  std::optional<Index> start;
  std::optional<Index> end;
};

using MrcPredictor = std::function<MrcAnswer(const DataTuple&, const TokenSeq& paragraph)>;

/// EM / F1 (SQuAD normalization, empty string for unanswerable),
/// answerability accuracy and exact span match, overall and per split and
/// label. Throws ContractError on an empty tuple list.
EvalReport eval_mrc(const Dataset& ds, const std::vector<const DataTuple*>& tuples, const MrcPredictor& predict);

/// Text the predictor's span stands for; empty for unanswerable.
std::string answer_text(const Dataset& ds, const DataTuple& t, const MrcAnswer& a);

using Reconstructor = std::function<TokenSeq(const TokenSeq&)>;

/// Mean BLEU-4, mean ROUGE-L and exact-reconstruction rate (all 0-100).
EvalReport eval_reconstruction(const std::vector<TokenSeq>& questions, const Reconstructor& reconstruct);

/// Per-source counters of one rewriting strategy.
struct StrategyStats {
  std::string strategy;
  std::size_t sources = 0;
  std::size_t sources_with_record = 0;
  std::size_t records = 0;
  std::size_t attempts = 0;
  std::size_t flips = 0;    // decoded candidates the guide assigns to the target
  std::size_t changed = 0;  // decoded candidates that differ from the source
};

inline constexpr int kHistogramBins = 10;

/// Bin of `v` among kHistogramBins equal bins over [0, 1]; 1.0 falls in the
/// last bin.
int histogram_bin(double v);

/// Acceptance rate per source, records per source, Jaccard and p_target
/// histograms and per-eta yield.
EvalReport rewrite_report(const std::vector<data::AugmentedRecord>& records, const Dataset& source,
                          std::size_t sources_attempted, const std::optional<StrategyStats>& stats = {});

/// Acceptance rate and label-flip rate side by side, one row per strategy.
EvalReport compare_strategies(const std::vector<StrategyStats>& strategies);

}  // namespace qrw::eval
