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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "qrw/cli/app.hpp"
#include "qrw/cli/config.hpp"
#include "qrw/data/synthetic.hpp"
#include "qrw/eval/report.hpp"

using namespace qrw;
namespace fs = std::filesystem;

namespace {

data::Dataset small_corpus() {
  data::SyntheticConfig c;
  c.n_paragraphs = 20;
  return data::gen_synthetic(c);
}

eval::MrcAnswer gold(const data::DataTuple& t) { return {t.label, t.start, t.end}; }

data::AugmentedRecord rec(const data::DataTuple& t, double j, double p, int eta_index, data::Label target) {
  data::AugmentedRecord r;
  r.source_id = t.id;
  r.question = t.question;
  r.paragraph_id = t.paragraph_id;
  r.target = target;
  if (target == data::Label::Answerable) {
    r.start = t.start;
    r.end = t.end;
  }
  r.jaccard = j;
  r.p_target = p;
  r.eta_index = eta_index;
  r.eta_init = 1 << eta_index;
  return r;
}

struct Run {
  int code = 0;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "qrewrite");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::stringstream captured;
  auto* old_err = std::cerr.rdbuf(captured.rdbuf());
  auto* old_out = std::cout.rdbuf(captured.rdbuf());
  Run r;
  r.code = cli::main(static_cast<int>(argv.size()), argv.data());
  std::cerr.rdbuf(old_err);
  std::cout.rdbuf(old_out);
  r.err = captured.str();
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "qrw_cli_tests" / name;
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("eval_mrc with an oracle and a null predictor") {
  const data::Dataset ds = small_corpus();
  auto all = ds.select(data::Split::Train);
  const eval::EvalReport r = eval::eval_mrc(ds, all, [](const data::DataTuple& t, const text::TokenSeq&) { return gold(t); });
  CHECK(r.get("em") == 100.0);
  CHECK(r.get("f1") == 100.0);
  CHECK(r.get("answerability_accuracy") == 100.0);
  CHECK(r.get("span_em") == 100.0);
  r.check_ranges();
  CHECK(r.breakdown.count("train") == 1);

  const auto unans = ds.select(data::Split::Train, data::Label::Unanswerable);
  const eval::EvalReport n = eval::eval_mrc(ds, unans, [](const data::DataTuple&, const text::TokenSeq&) {
    return eval::MrcAnswer{};
  });
  CHECK(n.get("em") == 100.0);
  CHECK(n.get("f1") == 100.0);
  CHECK_THROWS_AS(eval::eval_mrc(ds, {}, [](const data::DataTuple& t, const text::TokenSeq&) { return gold(t); }),
                  ContractError);
}

TEST_CASE("eval_mrc scores a predictor that always abstains") {
  const data::Dataset ds = small_corpus();
  const auto all = ds.select(data::Split::Train);
  std::size_t unans = 0;
  for (const auto* t : all) unans += t->label == data::Label::Unanswerable;
  const eval::EvalReport r = eval::eval_mrc(ds, all, [](const data::DataTuple&, const text::TokenSeq&) {
    return eval::MrcAnswer{};
  });
  const double want = 100.0 * static_cast<double>(unans) / static_cast<double>(all.size());
  CHECK(r.get("em") == doctest::Approx(want));
  CHECK(r.get("answerability_accuracy") == doctest::Approx(want));
  CHECK(r.get("span_em") == 0.0);
}

TEST_CASE("eval_reconstruction") {
  const data::Dataset ds = small_corpus();
  std::vector<text::TokenSeq> qs;
  for (const auto& t : ds.tuples) qs.push_back(t.question);
  const auto r = eval::eval_reconstruction(qs, [](const text::TokenSeq& q) { return q; });
  CHECK(r.get("bleu4") == doctest::Approx(100.0));
  CHECK(r.get("rouge_l") == doctest::Approx(100.0));
  CHECK(r.get("exact_rate") == 100.0);
  const auto e = eval::eval_reconstruction(qs, [](const text::TokenSeq&) { return text::TokenSeq{}; });
  CHECK(e.get("exact_rate") == 0.0);
  CHECK(e.get("bleu4") == 0.0);
  CHECK_THROWS_AS(eval::eval_reconstruction({}, [](const text::TokenSeq& q) { return q; }), ContractError);
}

TEST_CASE("histogram bins") {
  CHECK(eval::histogram_bin(0.0) == 0);
  CHECK(eval::histogram_bin(0.0999) == 0);
  CHECK(eval::histogram_bin(0.1) == 1);
  CHECK(eval::histogram_bin(0.55) == 5);
  CHECK(eval::histogram_bin(0.99) == 9);
  CHECK(eval::histogram_bin(1.0) == 9);
}

TEST_CASE("rewrite_report statistics") {
  const data::Dataset ds = small_corpus();
  const eval::EvalReport empty = eval::rewrite_report({}, ds, 0);
  for (const auto& m : empty.metrics) CHECK(m.value == 0.0);

  const auto srcs = ds.select(data::Split::Train, data::Label::Answerable);
  REQUIRE(srcs.size() >= 3);
  std::vector<data::AugmentedRecord> recs{rec(*srcs[0], 0.6, 0.7, 0, data::Label::Unanswerable),
                                          rec(*srcs[0], 0.8, 0.9, 2, data::Label::Answerable),
                                          rec(*srcs[1], 0.5, 0.55, 0, data::Label::Unanswerable)};
  eval::StrategyStats st{"gradient", 4, 2, 3, 40, 10, 20};
  const eval::EvalReport r = eval::rewrite_report(recs, ds, 4, st);
  r.check_ranges();
  CHECK(r.get("sources") == 4);
  CHECK(r.get("sources_with_record") == 2);
  CHECK(r.get("acceptance_rate") == doctest::Approx(50.0));
  CHECK(r.get("records") == 3);
  CHECK(r.get("records_unanswerable") == 2);
  CHECK(r.get("records_per_source") == doctest::Approx(0.75));
  CHECK(r.get("mean_jaccard") == doctest::Approx((0.6 + 0.8 + 0.5) / 3));
  CHECK(r.get("mean_p_target") == doctest::Approx((0.7 + 0.9 + 0.55) / 3));
  CHECK(r.get("label_flip_rate") == doctest::Approx(25.0));
  CHECK(r.get("changed_rate") == doctest::Approx(50.0));
  // Every Jaccard value lies in [0.5, 0.99]: histogram mass sits in bins 5..9.
  const eval::Table& h = r.tables.at(0);
  int inside = 0;
  for (std::size_t b = 0; b < h.rows.size(); ++b) {
    const int count = std::stoi(h.rows[b][1]);
    if (b < 5) CHECK(count == 0);
    inside += count;
  }
  CHECK(inside == 3);
  const eval::Table& per_eta = r.tables.at(1);
  REQUIRE(per_eta.rows.size() == 2);
  CHECK(per_eta.rows[0][2] == "2");
  CHECK(per_eta.rows[1][2] == "1");

  auto bad = recs;
  bad[0].source_id = "nobody";
  CHECK_THROWS_AS(eval::rewrite_report(bad, ds, 4), ContractError);
  CHECK_THROWS_AS(eval::rewrite_report(recs, ds, 1), ContractError);
}

TEST_CASE("strategy comparison table") {
  const eval::EvalReport r = eval::compare_strategies(
      {eval::StrategyStats{"gradient", 10, 5, 9, 100, 30, 60}, eval::StrategyStats{"noise", 10, 8, 20, 100, 10, 90}});
  CHECK(r.get("gradient.acceptance_rate") == doctest::Approx(50.0));
  CHECK(r.get("noise.label_flip_rate") == doctest::Approx(10.0));
  REQUIRE(r.tables.size() == 1);
  CHECK(r.tables[0].rows.size() == 2);
  CHECK(r.to_json(false).dump() == r.to_json(false).dump());
  CHECK_FALSE(r.to_json(false).contains("wall_seconds"));
}

TEST_CASE("report ranges are enforced") {
  eval::EvalReport r;
  r.add("p", 101.0);
  CHECK_THROWS_AS(r.check_ranges(), ContractError);
  eval::EvalReport u;
  u.add("u", 0.5, eval::Range::Unit);
  u.check_ranges();
  CHECK_THROWS_AS(u.get("missing"), ContractError);
}

TEST_CASE("config defaults, overlay and echo") {
  cli::RunConfig c;
  c.validate();
  CHECK(c.seed == 7);
  CHECK(c.rewrite.beta_t == 0.5);
  CHECK(c.rewrite.beta_a == 0.5);
  CHECK(c.rewrite.beta_b == 0.99);
  CHECK(c.rewrite.beta_s == 0.9);
  CHECK(c.rewrite.s_eta == std::vector<double>{1, 2, 4, 8});
  CHECK(c.mask_rate() == 0.0);
  c.ae_mask = "wiki-mask";
  CHECK(c.mask_rate() == 0.15);

  cli::RunConfig d;
  cli::apply_json(d, {{"seed", 11}, {"rewrite", {{"beta_t", 0.6}, {"mode", "both"}}}, {"data", {{"n_paragraphs", 50}}}});
  CHECK(d.seed == 11);
  CHECK(d.rewrite.beta_t == 0.6);
  CHECK(d.rewrite.mode == rewrite::Mode::Both);
  CHECK(d.data.n_paragraphs == 50);

  cli::RunConfig e;
  cli::apply_json(e, cli::to_json(d));
  CHECK(cli::to_json(e) == cli::to_json(d));

  try {
    cli::apply_json(e, {{"rewrite", {{"beta_q", 1}}}});
    FAIL("expected a usage error");
  } catch (const cli::UsageError& err) {
    CHECK(std::string(err.what()).find("rewrite.beta_q") != std::string::npos);
  }
  CHECK_THROWS_AS(cli::apply_json(e, {{"seed", "seven"}}), cli::UsageError);
  cli::RunConfig bad;
  bad.rewrite.beta_t = 1.5;
  CHECK_THROWS_AS(bad.validate(), cli::UsageError);

  CHECK(c.stage_seed("guide.init") == c.stage_seed("guide.init"));
  CHECK(c.stage_seed("guide.init") != c.stage_seed("ae.init"));
  cli::RunConfig other;
  other.seed = 8;
  CHECK(other.stage_seed("guide.init") != c.stage_seed("guide.init"));
}

TEST_CASE("cli: unknown flag is a usage error and writes nothing") {
  const fs::path out = fresh_dir("unknown");
  const Run r = invoke({"gen-data", "--no-such-flag", "-o", out.string()});
  CHECK(r.code == cli::kExitUsage);
  CHECK_FALSE(fs::exists(out));
  CHECK(invoke({}).code == cli::kExitUsage);
  CHECK(invoke({"frobnicate"}).code == cli::kExitUsage);
  CHECK(invoke({"--help"}).code == cli::kExitOk);
}

TEST_CASE("cli: rewrite without a guide names the missing checkpoint") {
  const fs::path out = fresh_dir("noguide");
  const fs::path cfg = fs::temp_directory_path() / "qrw_cli_tests" / "small.json";
  fs::create_directories(cfg.parent_path());
  std::ofstream(cfg) << R"({"data": {"n_paragraphs": 20}})";
  REQUIRE(invoke({"gen-data", "--config", cfg.string(), "-o", out.string()}).code == cli::kExitOk);
  CHECK(fs::exists(out / "data" / "train.json"));
  CHECK(fs::exists(out / "data" / "vocab.txt"));
  CHECK(fs::exists(out / "data" / "config.json"));
  const Run r = invoke({"rewrite", "-o", out.string()});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find((out / "guide" / "guide.ckpt").string()) != std::string::npos);
  CHECK_FALSE(fs::exists(out / "rewrite"));
}

TEST_CASE("cli: bad config is a usage error, runtime failures exit 1") {
  const fs::path dir = fs::temp_directory_path() / "qrw_cli_tests";
  fs::create_directories(dir);
  std::ofstream(dir / "typo.json") << R"({"sed": 3})";
  const Run r = invoke({"gen-data", "--config", (dir / "typo.json").string(), "-o", (dir / "typo").string()});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find("sed") != std::string::npos);
  CHECK(invoke({"gen-data", "--config", (dir / "absent.json").string()}).code == cli::kExitUsage);

  const fs::path out = fresh_dir("corrupt");
  fs::create_directories(out / "data");
  std::ofstream(out / "data" / "train.json") << "{ not json";
  CHECK(invoke({"train-mrc", "-o", out.string()}).code == cli::kExitFailure);
}
