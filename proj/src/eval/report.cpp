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

#include "qrw/eval/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "qrw/text/metrics.hpp"

namespace qrw::eval {

using json = nlohmann::ordered_json;

namespace {

const char* range_name(Range r) {
  switch (r) {
    case Range::Percent: return "0-100";
    case Range::Unit: return "0-1";
    case Range::Count: return "count";
    case Range::Real: return "real";
  }
  return "?";
}

std::string fmt(double v, Range r) {
  char buf[64];
  if (r == Range::Count) {
    std::snprintf(buf, sizeof(buf), "%.0f", v);
  } else if (r == Range::Unit) {
    std::snprintf(buf, sizeof(buf), "%.4f", v);
  } else {
    std::snprintf(buf, sizeof(buf), "%.2f", v);
  }
  return buf;
}

void check_metric(const Metric& m, const std::string& where) {
  bool ok = std::isfinite(m.value);
  if (m.range == Range::Percent) ok = ok && m.value >= 0 && m.value <= 100;
  if (m.range == Range::Unit) ok = ok && m.value >= 0 && m.value <= 1;
  if (m.range == Range::Count) ok = ok && m.value >= 0 && m.value == std::floor(m.value);
  if (!ok) throw ContractError(where + m.name + " = " + std::to_string(m.value) + " outside " + range_name(m.range));
}

json metrics_json(const std::vector<Metric>& ms) {
  json o = json::object();
  for (const auto& m : ms) o[m.name] = m.value;
  return o;
}

double ratio(std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); }

void text_metrics(std::ostringstream& os, const std::vector<Metric>& ms, const std::string& indent) {
  std::size_t width = 0;
  for (const auto& m : ms) width = std::max(width, m.name.size());
  for (const auto& m : ms) {
    os << indent << m.name << std::string(width - m.name.size() + 2, ' ') << fmt(m.value, m.range);
    if (m.range == Range::Percent) os << " %";
    os << '\n';
  }
}

}  // namespace

void EvalReport::add(std::string name, double value, Range range) { metrics.push_back({std::move(name), value, range}); }

bool EvalReport::has(const std::string& name) const {
  for (const auto& m : metrics) {
    if (m.name == name) return true;
  }
  return false;
}

double EvalReport::get(const std::string& name) const {
  for (const auto& m : metrics) {
    if (m.name == name) return m.value;
  }
  throw ContractError("report '" + title + "' has no metric " + name);
}

void EvalReport::check_ranges() const {
  for (const auto& m : metrics) check_metric(m, title + ": ");
  for (const auto& [split, ms] : breakdown) {
    for (const auto& m : ms) check_metric(m, title + " [" + split + "]: ");
  }
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os << title << '\n' << std::string(title.size(), '=') << '\n';
  text_metrics(os, metrics, "  ");
  for (const auto& [split, ms] : breakdown) {
    os << '\n' << split << '\n';
    text_metrics(os, ms, "  ");
  }
  for (const auto& t : tables) {
    os << '\n' << t.title << '\n';
    std::vector<std::size_t> w(t.header.size(), 0);
    for (std::size_t c = 0; c < t.header.size(); ++c) w[c] = t.header[c].size();
    for (const auto& row : t.rows) {
      for (std::size_t c = 0; c < row.size() && c < w.size(); ++c) w[c] = std::max(w[c], row[c].size());
    }
    auto line = [&](const std::vector<std::string>& cells) {
      os << "  ";
      for (std::size_t c = 0; c < cells.size(); ++c) {
        os << cells[c];
        if (c + 1 < cells.size()) os << std::string(w[c] - cells[c].size() + 2, ' ');
      }
      os << '\n';
    };
    line(t.header);
    std::vector<std::string> rule;
    for (std::size_t c = 0; c < w.size(); ++c) rule.push_back(std::string(w[c], '-'));
    line(rule);
    for (const auto& row : t.rows) line(row);
  }
  if (wall_seconds > 0) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "\nwall clock: %.1f s\n", wall_seconds);
    os << buf;
  }
  return os.str();
}

json EvalReport::to_json(bool with_time) const {
  json o;
  o["title"] = title;
  o["metrics"] = metrics_json(metrics);
  json ranges = json::object();
  for (const auto& m : metrics) ranges[m.name] = range_name(m.range);
  o["ranges"] = ranges;
  json b = json::object();
  for (const auto& [split, ms] : breakdown) b[split] = metrics_json(ms);
  o["breakdown"] = b;
  json tabs = json::array();
  for (const auto& t : tables) tabs.push_back({{"title", t.title}, {"header", t.header}, {"rows", t.rows}});
  o["tables"] = tabs;
  o["config"] = config;
  if (with_time) o["wall_seconds"] = wall_seconds;
  return o;
}

void EvalReport::write(const std::filesystem::path& dir, const std::string& stem) const {
  check_ranges();
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / (stem + ".txt"));
    if (!out) throw IoError("cannot write " + (dir / (stem + ".txt")).string());
    out << to_text();
  }
  std::ofstream out(dir / (stem + ".json"));
  if (!out) throw IoError("cannot write " + (dir / (stem + ".json")).string());
  out << to_json().dump(2) << '\n';
}

std::string answer_text(const Dataset& ds, const DataTuple& t, const MrcAnswer& a) {
  if (a.label != data::Label::Answerable || !a.start || !a.end) return {};
  const TokenSeq& d = ds.paragraph(t);
  if (*a.start < 0 || *a.end < *a.start || *a.end >= static_cast<Index>(d.size())) {
    throw ContractError("prediction for " + t.id + " points outside the paragraph");
  }
  std::vector<text::TokenId> ids(d.ids.begin() + *a.start, d.ids.begin() + *a.end + 1);
  return text::detokenize(ids, *ds.vocab);
}

EvalReport eval_mrc(const Dataset& ds, const std::vector<const DataTuple*>& tuples, const MrcPredictor& predict) {
  if (tuples.empty()) throw ContractError("eval_mrc: no tuples to evaluate");
  struct Acc {
    double em = 0, f1 = 0;
    std::size_t n = 0, correct = 0, answerable = 0, span_hits = 0;
  };
  std::map<std::string, Acc> groups;
  Acc all;
  auto tally = [](Acc& a, const text::EmF1& s, bool label_ok, bool answerable, bool span_ok) {
    a.em += s.em;
    a.f1 += s.f1;
    ++a.n;
    if (label_ok) ++a.correct;
    if (answerable) {
      ++a.answerable;
      if (span_ok) ++a.span_hits;
    }
  };
  for (const auto* t : tuples) {
    const MrcAnswer a = predict(*t, ds.paragraph(*t));
    const std::vector<std::string> gold =
        t->label == data::Label::Answerable ? t->answers : std::vector<std::string>{};
    const auto s = text::squad_em_f1(answer_text(ds, *t, a), gold);
    const bool answerable = t->label == data::Label::Answerable;
    const bool label_ok = a.label == t->label;
    const bool span_ok = label_ok && answerable && a.start == t->start && a.end == t->end;
    tally(all, s, label_ok, answerable, span_ok);
    const std::string split = t->split == data::Split::Train ? "train" : "dev";
    tally(groups[split], s, label_ok, answerable, span_ok);
    tally(groups[split + (answerable ? "/has_ans" : "/no_ans")], s, label_ok, answerable, span_ok);
  }
  auto fill = [](std::vector<Metric>& out, const Acc& a) {
    out.push_back({"em", percent(a.em / static_cast<double>(a.n)), Range::Percent});
    out.push_back({"f1", percent(a.f1 / static_cast<double>(a.n)), Range::Percent});
    out.push_back({"answerability_accuracy", percent(ratio(a.correct, a.n)), Range::Percent});
    out.push_back({"span_em", percent(ratio(a.span_hits, a.answerable)), Range::Percent});
    out.push_back({"tuples", static_cast<double>(a.n), Range::Count});
  };
  EvalReport r;
  r.title = "MRC evaluation";
  fill(r.metrics, all);
  for (const auto& [name, acc] : groups) fill(r.breakdown[name], acc);
  return r;
}

EvalReport eval_reconstruction(const std::vector<TokenSeq>& questions, const Reconstructor& reconstruct) {
  if (questions.empty()) throw ContractError("eval_reconstruction: no questions");
  double bleu = 0, rouge = 0;
  std::size_t exact = 0;
  for (const auto& q : questions) {
    const TokenSeq out = reconstruct(q);
    bleu += text::bleu4(q, out);
    rouge += text::rouge_l(q, out);
    if (out.ids == q.ids) ++exact;
  }
  const auto n = static_cast<double>(questions.size());
  EvalReport r;
  r.title = "Autoencoder reconstruction";
  r.add("bleu4", percent(bleu / n));
  r.add("rouge_l", percent(rouge / n));
  r.add("exact_rate", percent(static_cast<double>(exact) / n));
  r.add("questions", n, Range::Count);
  return r;
}

int histogram_bin(double v) {
  const int b = static_cast<int>(std::floor(v * kHistogramBins));
  return std::clamp(b, 0, kHistogramBins - 1);
}

EvalReport rewrite_report(const std::vector<data::AugmentedRecord>& records, const Dataset& source,
                          std::size_t sources_attempted, const std::optional<StrategyStats>& stats) {
  std::set<std::string> ids;
  for (const auto& t : source.tuples) ids.insert(t.id);
  std::set<std::string> with_record;
  std::array<std::size_t, kHistogramBins> jac{}, prob{};
  std::map<int, std::size_t> per_eta;
  std::map<int, double> eta_value;
  double jsum = 0, psum = 0;
  std::size_t unknown = 0, unans = 0;
  for (const auto& r : records) {
    if (!ids.count(r.source_id)) ++unknown;
    with_record.insert(r.source_id);
    ++jac[static_cast<std::size_t>(histogram_bin(r.jaccard))];
    ++prob[static_cast<std::size_t>(histogram_bin(r.p_target))];
    ++per_eta[r.eta_index];
    eta_value[r.eta_index] = r.eta_init;
    jsum += r.jaccard;
    psum += r.p_target;
    if (r.target == data::Label::Unanswerable) ++unans;
  }
  if (unknown > 0) throw ContractError("rewrite_report: " + std::to_string(unknown) + " record(s) name unknown sources");
  if (with_record.size() > sources_attempted) {
    throw ContractError("rewrite_report: more sources with records than sources attempted");
  }
  const auto n = static_cast<double>(records.size());
  EvalReport r;
  r.title = "Rewrite report";
  r.add("sources", static_cast<double>(sources_attempted), Range::Count);
  r.add("sources_with_record", static_cast<double>(with_record.size()), Range::Count);
  r.add("acceptance_rate", percent(ratio(with_record.size(), sources_attempted)));
  r.add("records", n, Range::Count);
  r.add("records_unanswerable", static_cast<double>(unans), Range::Count);
  r.add("records_per_source", sources_attempted == 0 ? 0.0 : n / static_cast<double>(sources_attempted), Range::Real);
  r.add("mean_jaccard", records.empty() ? 0.0 : jsum / n, Range::Unit);
  r.add("mean_p_target", records.empty() ? 0.0 : psum / n, Range::Unit);
  if (stats) {
    r.add("attempts", static_cast<double>(stats->attempts), Range::Count);
    r.add("label_flip_rate", percent(ratio(stats->flips, stats->attempts)));
    r.add("changed_rate", percent(ratio(stats->changed, stats->attempts)));
  }
  Table h{"Histograms (10 bins over [0, 1])", {"bin", "jaccard", "p_target"}, {}};
  for (int b = 0; b < kHistogramBins; ++b) {
    char label[32];
    std::snprintf(label, sizeof(label), "[%.1f, %.1f%c", b / 10.0, (b + 1) / 10.0, b + 1 == kHistogramBins ? ']' : ')');
    h.rows.push_back({label, std::to_string(jac[static_cast<std::size_t>(b)]), std::to_string(prob[static_cast<std::size_t>(b)])});
  }
  r.tables.push_back(std::move(h));
  Table e{"Yield per initial step size", {"eta_index", "eta_init", "records"}, {}};
  for (const auto& [k, count] : per_eta) {
    char v[32];
    std::snprintf(v, sizeof(v), "%g", eta_value[k]);
    e.rows.push_back({std::to_string(k), v, std::to_string(count)});
  }
  r.tables.push_back(std::move(e));
  return r;
}

EvalReport compare_strategies(const std::vector<StrategyStats>& strategies) {
  EvalReport r;
  r.title = "Gradient guidance vs noise";
  Table t{"Per-strategy rates", {"strategy", "sources", "acceptance_rate_%", "records", "attempts", "label_flip_rate_%", "changed_%"}, {}};
  for (const auto& s : strategies) {
    const double acc = percent(ratio(s.sources_with_record, s.sources));
    const double flip = percent(ratio(s.flips, s.attempts));
    const double changed = percent(ratio(s.changed, s.attempts));
    r.add(s.strategy + ".acceptance_rate", acc);
    r.add(s.strategy + ".label_flip_rate", flip);
    r.add(s.strategy + ".records", static_cast<double>(s.records), Range::Count);
    t.rows.push_back({s.strategy, std::to_string(s.sources), fmt(acc, Range::Percent), std::to_string(s.records),
                      std::to_string(s.attempts), fmt(flip, Range::Percent), fmt(changed, Range::Percent)});
  }
  r.tables.push_back(std::move(t));
  return r;
}

}  // namespace qrw::eval
