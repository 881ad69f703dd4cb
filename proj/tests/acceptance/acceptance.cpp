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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.
//
//   acceptance [work_dir]
//
// The work directory (default ./acceptance_run) is wiped first.

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "op_cases.hpp"
#include "qrw/autoencoder/io.hpp"
#include "qrw/autoencoder/train.hpp"
#include "qrw/cli/app.hpp"
#include "qrw/cli/config.hpp"
#include "qrw/data/squad.hpp"
#include "qrw/guide/io.hpp"
#include "qrw/rewriter/rewriter.hpp"

using namespace qrw;
namespace fs = std::filesystem;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Shared state built by the pipeline criterion and reused by later ones.
struct Context {
  fs::path work;
  fs::path run;
  cli::RunConfig cfg;
  double pipeline_seconds = -1;
  bool pipeline_ok = false;
  data::Dataset ds;

  void load_data() {
    const cli::Paths p = cfg.resolved();
    auto vocab = std::make_shared<const text::Vocab>(text::Vocab::load(p.vocab));
    ds = data::concat(data::load_squad_json(p.train, vocab, data::Split::Train, "train-"),
                      data::load_squad_json(p.dev, vocab, data::Split::Dev, "dev-"));
  }

  template <typename S>
  guide::GuideModel<S> guide() const {
    return guide::from_checkpoint<S>(data::load_checkpoint(cfg.resolved().guide, ds.vocab->hash()));
  }

  template <typename S>
  ae::AutoEncoder<S> ae(const guide::GuideModel<S>& g) const {
    return ae::from_checkpoint<S>(data::load_checkpoint(cfg.resolved().ae, ds.vocab->hash()), g.shared_embeddings());
  }

  std::vector<const data::DataTuple*> sources(std::size_t n) const {
    auto s = ds.select(data::Split::Train, data::Label::Answerable);
    if (s.size() > n) s.resize(n);
    return s;
  }

  const data::DataTuple& tuple(const std::string& id) const {
    for (const auto& t : ds.tuples) {
      if (t.id == id) return t;
    }
    throw ContractError("unknown tuple " + id);
  }
};

// 1. Gradient correctness.
Outcome gradients() {
  const auto t0 = Clock::now();
  double worst_op = 0, worst_loss = 0;
  std::string worst_name;
  int op_checks = 0;
  std::mt19937_64 rng(20260101);
  for (int trial = 0; trial < 20; ++trial) {
    probes::op_cases(rng, [&](const char* name, const ad::ScalarFn<double>& f, const Mat<double>& x) {
      const double e = ad::gradient_check(f, x, 1e-5);
      ++op_checks;
      if (e > worst_op) {
        worst_op = e;
        worst_name = name;
      }
    });
  }
  int loss_checks = 0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    std::mt19937_64 r(500 + trial);
    guide::GuideConfig cfg;
    cfg.vocab_size = 16;
    cfg.hidden = 4 * static_cast<Index>(1 + r() % 3);
    cfg.heads = 2 * static_cast<Index>(1 + r() % 2);
    cfg.layers = static_cast<Index>(1 + r() % 2);
    cfg.ffn = 2 * cfg.hidden;
    cfg.max_seq = 32;
    cfg.lambda = 0.25 + static_cast<double>(r() % 8) / 4.0;
    guide::GuideModel<double> m(cfg, 900 + trial);
    text::TokenSeq q, d;
    for (int i = 0; i < 1 + static_cast<int>(r() % 4); ++i) q.ids.push_back(7 + static_cast<text::TokenId>(r() % 9));
    for (int i = 0; i < 2 + static_cast<int>(r() % 6); ++i) d.ids.push_back(7 + static_cast<text::TokenId>(r() % 9));
    const auto in = m.embed(q, d);
    const Index s = static_cast<Index>(r() % d.size());
    const Index e = std::min<Index>(s + static_cast<Index>(r() % 3), static_cast<Index>(d.size()) - 1);
    for (const guide::LossSpec& spec :
         {guide::LossSpec{guide::MrcLoss{data::Label::Answerable, s, e, cfg.lambda}},
          guide::LossSpec{guide::MrcLoss{data::Label::Unanswerable, std::nullopt, std::nullopt, cfg.lambda}}}) {
      ad::ScalarFn<double> f = [&](ad::Graph<double>& g, ad::Var<double> eq) {
        nn::Bound<double> b(g, m.params(), false);
        return m.loss_node(m.build(b, eq, g.constant(in.paragraph)), spec);
      };
      worst_loss = std::max(worst_loss, ad::gradient_check(f, in.question, 1e-5));
      ++loss_checks;
    }
  }
  const double secs = since(t0);
  Outcome o;
  o.pass = worst_op < 1e-4 && worst_loss < 1e-4 && secs < 60;
  o.detail = fmt("%d op probes over 20 configs, worst rel err %.2e (%s); %d full-loss checks on E_q, worst %.2e; %.1f s",
                 op_checks, worst_op, worst_name.c_str(), loss_checks, worst_loss, secs);
  return o;
}

// 7. Metric oracles.
Outcome metrics() {
  std::mt19937_64 rng(777);
  int mismatches = 0;
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const auto a = oracle::random_ids(rng, 12, 7);
    const auto b = oracle::random_ids(rng, 12, 7);
    if (text::jaccard_unigram(a, b) != oracle::jaccard(a, b)) ++mismatches;
    const double db = std::abs(text::bleu4(a, b) - oracle::bleu4(a, b));
    const double dr = std::abs(text::rouge_l(a, b) - oracle::rouge_l(a, b));
    const std::string pred = oracle::random_answer(rng);
    std::vector<std::string> gold;
    const int n = std::uniform_int_distribution<int>(0, 3)(rng);
    for (int k = 0; k < n; ++k) gold.push_back(oracle::random_answer(rng));
    const auto got = text::squad_em_f1(pred, gold);
    const auto want = oracle::squad(pred, gold);
    if (got.em != want.em) ++mismatches;
    const double df = std::abs(got.f1 - want.f1);
    worst = std::max({worst, db, dr, df});
    if (db > 1e-9 || dr > 1e-9 || df > 1e-9) ++mismatches;
  }
  return {mismatches == 0, fmt("100 random pairs, %d mismatches, worst |diff| %.1e on BLEU/ROUGE/F1", mismatches, worst)};
}

// 5. Desk-scale pipeline.
Outcome pipeline(Context& ctx) {
  ctx.cfg = cli::RunConfig{};
  ctx.cfg.output_dir = ctx.run.string();
  const auto t0 = Clock::now();
  try {
    cli::run_stage("pipeline", ctx.cfg);
  } catch (const std::exception& e) {
    return {false, std::string("pipeline failed: ") + e.what()};
  }
  ctx.pipeline_seconds = since(t0);
  ctx.pipeline_ok = true;
  ctx.load_data();
  const json s = json::parse(slurp(ctx.run / "pipeline_summary.json"))["metrics"];
  const double acc = s["answerability_accuracy"].get<double>() / 100;
  const double span = s["span_em"].get<double>() / 100;
  const double rec = s["reconstruction_exact_rate"].get<double>() / 100;
  const double rw = s["rewrite_acceptance_rate"].get<double>() / 100;
  const bool pass = ctx.ds.tuples.size() >= 2000 && acc >= 0.95 && span >= 0.90 && rec >= 0.95 && rw >= 0.30 &&
                    ctx.pipeline_seconds < 900;
  return {pass, fmt("%zu tuples; answerability %.3f, span EM %.3f, exact reconstruction %.3f, sources with a record %.3f; "
                    "%.0f s",
                    ctx.ds.tuples.size(), acc, span, rec, rw, ctx.pipeline_seconds)};
}

// 2 and 3. Shared tables and purity. Returns both outcomes.
std::pair<Outcome, Outcome> contracts(const Context& ctx) {
  auto g = ctx.guide<float>();
  const auto tables = g.shared_embeddings();
  int violations = 0, checks = 0;
  auto same = [&](const ae::AutoEncoder<float>& a, std::uint64_t want) {
    ++checks;
    if (a.shared_embeddings().get() != &g.embeddings() || a.embeddings().hash() != want ||
        g.embeddings().hash() != want) {
      ++violations;
    }
  };
  const std::uint64_t h0 = g.embeddings().hash();

  // train_ae on a fresh model sharing the guide's tables.
  ae::AutoEncoder<float> fresh(ctx.cfg.preset == "paper-scale" ? ae::AeConfig::paper_scale() : ae::AeConfig::desk(),
                               tables, 42);
  same(fresh, h0);
  std::vector<text::TokenSeq> corpus;
  for (const auto* t : ctx.ds.select(data::Split::Train)) {
    if (corpus.size() < 300) corpus.push_back(t->question);
  }
  ae::AeTrainConfig tc;
  tc.train.epochs = 1;
  ae::train_ae(fresh, corpus, tc);
  same(fresh, h0);

  const auto a = ctx.ae(g);
  same(a, h0);
  const std::uint64_t gh = g.hash(), ah = a.hash();
  int impure = 0;
  std::size_t records = 0;
  const auto sources = ctx.sources(100);
  const rewrite::NoiseConfig nc{ctx.cfg.noise_sigma, 5};
  for (const auto* t : sources) {
    records += rewrite::rewrite(ctx.ds, *t, ctx.cfg.rewrite, g, a).records.size();
    same(a, h0);
    if (g.hash() != gh || a.hash() != ah) ++impure;
    records += rewrite::noise_rewrite(ctx.ds, *t, nc, ctx.cfg.rewrite, g, a).records.size();
    same(a, h0);
    if (g.hash() != gh || a.hash() != ah) ++impure;
  }
  Outcome c2{violations == 0, fmt("%d hash checks through guide and autoencoder (before/after train_ae, after %zu x 2 "
                                  "rewrite calls), %d mismatches",
                                  checks, sources.size(), violations)};
  Outcome c3{impure == 0 && sources.size() == 100,
             fmt("%zu tuples x {rewrite, noise_rewrite}, %zu records emitted, %d parameter-hash changes", sources.size(),
                 records, impure)};
  return {c2, c3};
}

// 4. Every emitted record re-verified from scratch.
Outcome soundness(const Context& ctx) {
  const auto g = ctx.guide<float>();
  const double beta_t = 0.5, beta_a = 0.5, beta_b = 0.99;
  std::size_t n = 0, bad = 0;
  for (const fs::path& file : {fs::path(ctx.cfg.resolved().augmented), ctx.run / "rewrite" / "noise.jsonl"}) {
    for (const auto& r : data::read_augmented(file, *ctx.ds.vocab)) {
      const data::DataTuple& src = ctx.tuple(r.source_id);
      const text::TokenSeq q = text::tokenize(r.question.surface, *ctx.ds.vocab);
      const auto out = g.forward(g.embed(q, ctx.ds.paragraph(src)));
      const double p = out.p_answerable[static_cast<std::size_t>(r.target)];
      const double j = text::jaccard_unigram(src.question, q);
      ++n;
      if (!(p > beta_t && j >= beta_a && j <= beta_b)) ++bad;
    }
  }
  return {n > 0 && bad == 0, fmt("%zu records (gradient and noise) re-scored, %zu violations", n, bad)};
}

// 6. Descent property on the trained guide.
Outcome descent(const Context& ctx) {
  const auto g = ctx.guide<double>();
  auto pool = ctx.ds.select(data::Split::Train, data::Label::Answerable);
  std::mt19937_64 rng(6);
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(50);
  const double eta0 = *std::min_element(ctx.cfg.rewrite.s_eta.begin(), ctx.cfg.rewrite.s_eta.end());
  const guide::LossSpec spec = guide::AnswerabilityLoss{data::Label::Unanswerable};
  int failures = 0, max_halvings = 0;
  for (const auto* t : pool) {
    const auto in = g.embed(t->question, ctx.ds.paragraph(*t));
    const double base = g.loss_value(in, spec);
    const Mat<double> grad = g.grad_wrt_question(in, spec);
    double eta = eta0;
    int h = 0;
    bool ok = false;
    for (; h <= 20; ++h, eta /= 2) {
      auto moved = in;
      moved.question = rewrite::revise_step(in.question, grad, eta);
      if (g.loss_value(moved, spec) < base) {
        ok = true;
        break;
      }
    }
    if (!ok) ++failures;
    max_halvings = std::max(max_halvings, ok ? h : 21);
  }
  return {failures == 0, fmt("50 tuples, %d without a decrease, at most %d halvings from eta=%g", failures, max_halvings,
                             eta0)};
}

// 8 and 9. Determinism, persistence, schedule and the comparison report.
std::pair<Outcome, Outcome> determinism(const Context& ctx) {
  std::vector<std::string> notes;
  bool ok = true;

  // Rewrite stage again from the same checkpoints into another directory.
  cli::RunConfig again = ctx.cfg;
  again.output_dir = (ctx.work / "rerun").string();
  again.paths = ctx.cfg.resolved();
  again.paths.augmented = "";
  cli::run_stage("rewrite", again);
  const bool same_jsonl = slurp(again.resolved().augmented) == slurp(ctx.cfg.resolved().augmented) &&
                          slurp(fs::path(again.output_dir) / "rewrite" / "noise.jsonl") ==
                              slurp(ctx.run / "rewrite" / "noise.jsonl");
  ok &= same_jsonl;
  notes.push_back(same_jsonl ? "rewrite rerun JSONL byte-identical" : "rewrite rerun JSONL differs");

  // A small pipeline run twice in the same directory.
  cli::RunConfig small;
  small.output_dir = (ctx.work / "small").string();
  small.data.n_paragraphs = 40;
  small.guide.epochs = 2;
  small.ae.epochs = 2;
  small.max_sources = 20;
  std::vector<std::string> first;
  const std::vector<std::string> files = {"rewrite/augmented.jsonl", "rewrite/noise.jsonl", "guide/guide.ckpt",
                                          "ae/ae.ckpt", "data/train.json"};
  for (int pass = 0; pass < 2; ++pass) {
    fs::remove_all(small.output_dir);
    for (const char* stage : {"gen-data", "train-mrc", "train-ae", "rewrite"}) cli::run_stage(stage, small);
    std::vector<std::string> now;
    for (const auto& f : files) now.push_back(slurp(fs::path(small.output_dir) / f));
    if (pass == 0) {
      first = now;
    } else {
      const bool same = now == first;
      ok &= same;
      notes.push_back(same ? "small end-to-end rerun byte-identical" : "small end-to-end rerun differs");
    }
  }

  // Checkpoint round trips.
  bool bits = true;
  for (const std::string& path : {ctx.cfg.resolved().guide, ctx.cfg.resolved().ae}) {
    const data::Checkpoint ck = data::load_checkpoint(path);
    const fs::path copy = ctx.work / "copy.ckpt";
    data::save_checkpoint(copy, ck);
    bits &= slurp(copy) == slurp(path);
  }
  {
    const auto g = ctx.guide<float>();
    const auto a = ctx.ae(g);
    const data::Checkpoint gk = data::load_checkpoint(ctx.cfg.resolved().guide);
    const data::Checkpoint ak = data::load_checkpoint(ctx.cfg.resolved().ae);
    const auto g2 = guide::to_checkpoint(g, ctx.ds.vocab->hash(), gk.metadata["config"]);
    const auto a2 = ae::to_checkpoint(a, ctx.ds.vocab->hash(), ak.metadata["config"]);
    data::save_checkpoint(ctx.work / "g2.ckpt", g2);
    data::save_checkpoint(ctx.work / "a2.ckpt", a2);
    bits &= slurp(ctx.work / "g2.ckpt") == slurp(ctx.cfg.resolved().guide);
    bits &= slurp(ctx.work / "a2.ckpt") == slurp(ctx.cfg.resolved().ae);
  }
  ok &= bits;
  notes.push_back(bits ? "checkpoint load/save bit-exact" : "checkpoint round trip differs");

  // eta_0 * beta_s^k.
  double worst_ulps = 0;
  for (double eta0 : ctx.cfg.rewrite.s_eta) {
    for (int k = 0; k <= 50; ++k) {
      const long double ref = static_cast<long double>(eta0) * std::pow(static_cast<long double>(ctx.cfg.rewrite.beta_s), k);
      const double got = rewrite::step_size(eta0, ctx.cfg.rewrite.beta_s, k);
      const double ulp = std::nextafter(static_cast<double>(ref), INFINITY) - static_cast<double>(ref);
      // Repeated multiplication rounds k times; allow half an ulp per step.
      const double ulps = static_cast<double>(std::abs(static_cast<long double>(got) - ref)) / ulp;
      worst_ulps = std::max(worst_ulps, ulps / std::max(1.0, 0.5 * k + 0.5));
    }
  }
  const bool sched = worst_ulps <= 1.0;
  ok &= sched;
  notes.push_back(fmt("step-size schedule within %.2f of the per-step ulp budget", worst_ulps));

  std::string detail;
  for (const auto& n : notes) detail += (detail.empty() ? "" : "; ") + n;
  Outcome c8{ok, detail};

  // Comparison table: present, both strategies, identical on the rerun.
  Outcome c9;
  try {
    const json a = json::parse(slurp(ctx.run / "rewrite" / "comparison.json"));
    const json b = json::parse(slurp(fs::path(again.output_dir) / "rewrite" / "comparison.json"));
    const json& m = a["metrics"];
    const bool complete = m.contains("gradient.acceptance_rate") && m.contains("noise.acceptance_rate") &&
                          m.contains("gradient.label_flip_rate") && m.contains("noise.label_flip_rate") &&
                          a["tables"].size() == 1 && a["tables"][0]["rows"].size() == 2 &&
                          fs::exists(ctx.run / "rewrite" / "comparison.txt");
    const bool stable = a["metrics"] == b["metrics"] && a["tables"] == b["tables"];
    c9.pass = complete && stable;
    c9.detail = fmt("gradient: acceptance %.1f%%, flip %.1f%%; noise: acceptance %.1f%%, flip %.1f%%; %s",
                    m["gradient.acceptance_rate"].get<double>(), m["gradient.label_flip_rate"].get<double>(),
                    m["noise.acceptance_rate"].get<double>(), m["noise.label_flip_rate"].get<double>(),
                    stable ? "identical on rerun" : "differs on rerun");
  } catch (const std::exception& e) {
    c9 = {false, std::string("comparison report unreadable: ") + e.what()};
  }
  return {c8, c9};
}

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  ctx.work = fs::absolute(argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_run"));
  fs::remove_all(ctx.work);
  fs::create_directories(ctx.work);
  ctx.run = ctx.work / "run";

  std::map<int, Outcome> results;
  auto guarded = [&](int id, const std::function<Outcome()>& fn) {
    try {
      results[id] = fn();
    } catch (const std::exception& e) {
      results[id] = {false, std::string("error: ") + e.what()};
    }
    std::cerr << "criterion " << id << " done" << std::endl;
  };
  auto needs_pipeline = [&](int id, const std::function<Outcome()>& fn) {
    if (!ctx.pipeline_ok) {
      results[id] = {false, "pipeline did not complete"};
      return;
    }
    guarded(id, fn);
  };

  guarded(7, metrics);
  guarded(1, gradients);
  guarded(5, [&] { return pipeline(ctx); });
  needs_pipeline(4, [&] { return soundness(ctx); });
  needs_pipeline(2, [&] {
    const auto [c2, c3] = contracts(ctx);
    results[3] = c3;
    return c2;
  });
  if (!results.count(3)) results[3] = results[2];
  needs_pipeline(6, [&] { return descent(ctx); });
  needs_pipeline(8, [&] {
    const auto [c8, c9] = determinism(ctx);
    results[9] = c9;
    return c8;
  });
  if (!results.count(9)) results[9] = results[8];

  static const char* names[] = {"",
                                "gradient correctness",
                                "shared-embedding contract",
                                "rewriting purity",
                                "acceptance predicate soundness",
                                "desk-scale end-to-end",
                                "descent property",
                                "metric oracles",
                                "determinism and persistence",
                                "baseline contrast report"};
  int failed = 0;
  for (int id = 1; id <= 9; ++id) {
    const Outcome& o = results[id];
    failed += !o.pass;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, names[id], o.detail.c_str());
  }
  std::printf("%d/9 criteria passed\n", 9 - failed);
  return failed == 0 ? 0 : 1;
}
