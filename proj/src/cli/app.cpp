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

#include "qrw/cli/app.hpp"

#include <chrono>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "qrw/autoencoder/io.hpp"
#include "qrw/autoencoder/train.hpp"
#include "qrw/data/squad.hpp"
#include "qrw/eval/models.hpp"
#include "qrw/guide/io.hpp"
#include "qrw/guide/train.hpp"

namespace qrw::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void log(const std::string& stage, const std::string& msg) { std::cerr << "[" << stage << "] " << msg << std::endl; }

void write_json(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

fs::path stage_dir(const RunConfig& cfg, const std::string& name) {
  const fs::path dir = fs::path(cfg.output_dir) / name;
  fs::create_directories(dir);
  write_json(dir / "config.json", to_json(cfg));
  return dir;
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw UsageError("missing " + what + ": " + path);
}

nn::TrainConfig train_config(const StageTraining& t, std::uint64_t seed, int threads) {
  nn::TrainConfig c;
  c.epochs = t.epochs;
  c.batch_size = t.batch_size;
  c.lr = t.lr;
  c.warmup_fraction = t.warmup_fraction;
  c.clip_norm = t.clip_norm;
  c.seed = seed;
  c.threads = threads;
  return c;
}

data::Dataset load_data(const RunConfig& cfg) {
  const Paths p = cfg.resolved();
  require_file(p.train, "training data (run gen-data or set paths.train)");
  std::shared_ptr<const text::Vocab> vocab;
  if (fs::exists(p.vocab)) {
    vocab = std::make_shared<const text::Vocab>(text::Vocab::load(p.vocab));
  } else {
    data::Dataset grown = data::load_squad_json(p.train, nullptr, data::Split::Train, "train-");
    fs::create_directories(fs::path(p.vocab).parent_path());
    grown.vocab->save(p.vocab);
    log("data", "built vocabulary from " + p.train + " and saved it to " + p.vocab);
    vocab = grown.vocab;
  }
  data::Dataset ds = data::load_squad_json(p.train, vocab, data::Split::Train, "train-");
  if (fs::exists(p.dev)) ds = data::concat(ds, data::load_squad_json(p.dev, vocab, data::Split::Dev, "dev-"));
  if (ds.dropped > 0) log("data", std::to_string(ds.dropped) + " entries dropped during ingestion");
  return ds;
}

guide::GuideConfig guide_config(const RunConfig& cfg, Index vocab_size) {
  guide::GuideConfig g = cfg.preset == "paper-scale" ? guide::GuideConfig::paper_scale(vocab_size)
                                                     : guide::GuideConfig::desk(vocab_size);
  g.lambda = cfg.guide_lambda;
  return g;
}

ae::AeConfig ae_config(const RunConfig& cfg) {
  return cfg.preset == "paper-scale" ? ae::AeConfig::paper_scale() : ae::AeConfig::desk();
}

template <typename S>
guide::GuideModel<S> load_guide(const RunConfig& cfg, const data::Dataset& ds) {
  const std::string path = cfg.resolved().guide;
  require_file(path, "guide checkpoint (run train-mrc or set paths.guide)");
  return guide::from_checkpoint<S>(data::load_checkpoint(path, ds.vocab->hash()));
}

template <typename S>
ae::AutoEncoder<S> load_ae(const RunConfig& cfg, const data::Dataset& ds, const guide::GuideModel<S>& g) {
  const std::string path = cfg.resolved().ae;
  require_file(path, "autoencoder checkpoint (run train-ae or set paths.ae)");
  return ae::from_checkpoint<S>(data::load_checkpoint(path, ds.vocab->hash()), g.shared_embeddings());
}

std::vector<text::TokenSeq> held_in_questions(const data::Dataset& ds) {
  std::vector<text::TokenSeq> out;
  for (const auto* t : ds.select(data::Split::Train)) out.push_back(t->question);
  return out;
}

void gen_data(const RunConfig& cfg) {
  const Paths p = cfg.resolved();
  data::SyntheticConfig sc = cfg.data;
  sc.seed = cfg.seed;
  const data::Dataset ds = data::gen_synthetic(sc);
  stage_dir(cfg, "data");
  for (const auto& f : {p.train, p.dev, p.vocab}) fs::create_directories(fs::path(f).parent_path());
  data::write_squad_json(p.train, ds, data::Split::Train);
  data::write_squad_json(p.dev, ds, data::Split::Dev);
  ds.vocab->save(p.vocab);
  std::size_t ans = 0;
  for (const auto& t : ds.tuples) ans += t.label == data::Label::Answerable;
  log("gen-data", std::to_string(ds.tuples.size()) + " tuples (" + std::to_string(ans) + " answerable), vocabulary " +
                      std::to_string(ds.vocab->size()) + ", written to " + fs::path(p.train).parent_path().string());
}

template <typename S>
void train_mrc(const RunConfig& cfg) {
  const data::Dataset ds = load_data(cfg);
  const fs::path dir = stage_dir(cfg, "guide");
  guide::GuideModel<S> model(guide_config(cfg, static_cast<Index>(ds.vocab->size())), cfg.stage_seed("guide.init"));
  guide::GuideTrainConfig tc;
  tc.train = train_config(cfg.guide, cfg.stage_seed("guide.train"), cfg.threads);
  json epochs = json::array();
  const auto t0 = Clock::now();
  tc.on_epoch = [&](const guide::GuideEpochLog& l) {
    epochs.push_back({{"epoch", l.epoch}, {"loss", l.loss}, {"dev_accuracy", l.dev_accuracy}, {"dev_span_em", l.dev_span_em}});
    char buf[160];
    std::snprintf(buf, sizeof(buf), "epoch %d  loss %.4f  dev accuracy %.3f  dev span EM %.3f  (%.0f s)", l.epoch, l.loss,
                  l.dev_accuracy, l.dev_span_em, seconds_since(t0));
    log("train-mrc", buf);
  };
  guide::train_guide(model, ds, tc);
  data::save_checkpoint(cfg.resolved().guide, guide::to_checkpoint(model, ds.vocab->hash(), to_json(cfg)));
  write_json(dir / "train_log.json", {{"epochs", epochs}});
  log("train-mrc", "saved " + cfg.resolved().guide);
}

template <typename S>
void train_ae_stage(const RunConfig& cfg) {
  const data::Dataset ds = load_data(cfg);
  const guide::GuideModel<S> g = load_guide<S>(cfg, ds);
  const fs::path dir = stage_dir(cfg, "ae");
  ae::AutoEncoder<S> model(ae_config(cfg), g.shared_embeddings(), cfg.stage_seed("ae.init"));
  ae::AeTrainConfig tc;
  tc.train = train_config(cfg.ae, cfg.stage_seed("ae.train"), cfg.threads);
  tc.mask_rate = cfg.mask_rate();
  json epochs = json::array();
  const auto t0 = Clock::now();
  tc.on_epoch = [&](const ae::AeEpochLog& l) {
    epochs.push_back({{"epoch", l.epoch}, {"loss", l.loss}});
    char buf[120];
    std::snprintf(buf, sizeof(buf), "epoch %d  loss %.4f  (%.0f s)", l.epoch, l.loss, seconds_since(t0));
    log("train-ae", buf);
  };
  ae::train_ae(model, held_in_questions(ds), tc);
  data::save_checkpoint(cfg.resolved().ae, ae::to_checkpoint(model, ds.vocab->hash(), to_json(cfg)));
  write_json(dir / "train_log.json", {{"epochs", epochs}, {"mask_rate", tc.mask_rate}});
  log("train-ae", "saved " + cfg.resolved().ae);
}

std::vector<const data::DataTuple*> rewrite_sources(const RunConfig& cfg, const data::Dataset& ds) {
  const auto split = cfg.source_split == "dev" ? data::Split::Dev : data::Split::Train;
  auto sources = ds.select(split, data::Label::Answerable);
  if (cfg.max_sources > 0 && sources.size() > static_cast<std::size_t>(cfg.max_sources)) {
    sources.resize(static_cast<std::size_t>(cfg.max_sources));
  }
  if (sources.empty()) throw UsageError("no answerable " + cfg.source_split + " tuples to rewrite");
  return sources;
}

template <typename S>
void rewrite_stage(const RunConfig& cfg) {
  const data::Dataset ds = load_data(cfg);
  const guide::GuideModel<S> g = load_guide<S>(cfg, ds);
  const ae::AutoEncoder<S> a = load_ae<S>(cfg, ds, g);
  const fs::path dir = stage_dir(cfg, "rewrite");
  const auto sources = rewrite_sources(cfg, ds);
  const auto t0 = Clock::now();
  const auto grad = rewrite::rewrite_all<S>(sources, cfg.threads, [&](const data::DataTuple& t) {
    return rewrite::rewrite(ds, t, cfg.rewrite, g, a);
  });
  const auto records = eval::collect(grad);
  data::write_augmented(cfg.resolved().augmented, records);
  const auto grad_stats = eval::summarize("gradient", grad);
  eval::EvalReport report = eval::rewrite_report(records, ds, sources.size(), grad_stats);
  report.config = to_json(cfg);
  report.wall_seconds = seconds_since(t0);
  report.write(dir, "rewrite_report");
  log("rewrite", std::to_string(records.size()) + " records from " + std::to_string(sources.size()) +
                     " sources, written to " + cfg.resolved().augmented);

  if (!cfg.noise_baseline) return;
  const auto t1 = Clock::now();
  const rewrite::NoiseConfig nc{cfg.noise_sigma, cfg.stage_seed("rewrite.noise")};
  const auto noise = rewrite::rewrite_all<S>(sources, cfg.threads, [&](const data::DataTuple& t) {
    return rewrite::noise_rewrite(ds, t, nc, cfg.rewrite, g, a);
  });
  const auto noise_records = eval::collect(noise);
  data::write_augmented(dir / "noise.jsonl", noise_records);
  const auto noise_stats = eval::summarize("noise", noise);
  eval::EvalReport nr = eval::rewrite_report(noise_records, ds, sources.size(), noise_stats);
  nr.title = "Rewrite report (noise baseline)";
  nr.config = to_json(cfg);
  nr.wall_seconds = seconds_since(t1);
  nr.write(dir, "noise_report");
  eval::EvalReport cmp = eval::compare_strategies({grad_stats, noise_stats});
  cmp.config = to_json(cfg);
  cmp.wall_seconds = seconds_since(t0);
  cmp.write(dir, "comparison");
  log("rewrite", "noise baseline: " + std::to_string(noise_records.size()) + " records");
}

void merge_stage(const RunConfig& cfg) {
  const data::Dataset ds = load_data(cfg);
  const Paths p = cfg.resolved();
  require_file(p.augmented, "augmented records (run rewrite or set paths.augmented)");
  const fs::path dir = stage_dir(cfg, "merge");
  const auto records = data::read_augmented(p.augmented, *ds.vocab);
  const data::Dataset merged = data::merge_for_training(ds, records, data::parse_merge_mode(cfg.merge_mode));
  data::write_squad_json(dir / "merged_train.json", merged, data::Split::Train);
  const std::size_t original = ds.select(data::Split::Train).size();
  const std::size_t total = merged.select(data::Split::Train).size();
  write_json(dir / "summary.json", {{"mode", cfg.merge_mode},
                                    {"original_train_tuples", original},
                                    {"augmented_records", records.size()},
                                    {"added", total - original},
                                    {"merged_train_tuples", total}});
  log("merge", std::to_string(total - original) + " tuples added; " + std::to_string(total) + " training tuples");
}

template <typename S>
std::pair<eval::EvalReport, eval::EvalReport> evaluate_stage(const RunConfig& cfg) {
  const data::Dataset ds = load_data(cfg);
  const guide::GuideModel<S> g = load_guide<S>(cfg, ds);
  const ae::AutoEncoder<S> a = load_ae<S>(cfg, ds, g);
  const fs::path dir = stage_dir(cfg, "eval");
  auto tuples = ds.select(data::Split::Dev);
  if (tuples.empty()) tuples = ds.select(data::Split::Train);
  auto t0 = Clock::now();
  eval::EvalReport mrc = eval::eval_mrc(ds, tuples, eval::guide_predictor(g));
  mrc.config = to_json(cfg);
  mrc.wall_seconds = seconds_since(t0);
  mrc.write(dir, "mrc_report");
  auto questions = held_in_questions(ds);
  if (cfg.eval_max_questions > 0 && questions.size() > static_cast<std::size_t>(cfg.eval_max_questions)) {
    questions.resize(static_cast<std::size_t>(cfg.eval_max_questions));
  }
  t0 = Clock::now();
  eval::EvalReport rec = eval::eval_reconstruction(questions, eval::ae_reconstructor(a));
  rec.config = to_json(cfg);
  rec.wall_seconds = seconds_since(t0);
  rec.write(dir, "reconstruction_report");
  char buf[200];
  std::snprintf(buf, sizeof(buf), "answerability %.2f  span EM %.2f  EM %.2f  F1 %.2f  reconstruction exact %.2f",
                mrc.get("answerability_accuracy"), mrc.get("span_em"), mrc.get("em"), mrc.get("f1"),
                rec.get("exact_rate"));
  log("evaluate", buf);
  return {mrc, rec};
}

template <typename S>
void pipeline(const RunConfig& cfg) {
  const auto t0 = Clock::now();
  json stages = json::object();
  auto timed = [&](const std::string& name, auto&& fn) {
    const auto ts = Clock::now();
    fn();
    stages[name] = seconds_since(ts);
  };
  timed("gen-data", [&] { gen_data(cfg); });
  timed("train-mrc", [&] { train_mrc<S>(cfg); });
  timed("train-ae", [&] { train_ae_stage<S>(cfg); });
  timed("rewrite", [&] { rewrite_stage<S>(cfg); });
  timed("merge", [&] { merge_stage(cfg); });
  std::pair<eval::EvalReport, eval::EvalReport> reports;
  timed("evaluate", [&] { reports = evaluate_stage<S>(cfg); });

  std::ifstream in(fs::path(cfg.output_dir) / "rewrite" / "rewrite_report.json");
  const json rw = json::parse(in);
  eval::EvalReport summary;
  summary.title = "Pipeline summary";
  summary.add("answerability_accuracy", reports.first.get("answerability_accuracy"));
  summary.add("span_em", reports.first.get("span_em"));
  summary.add("em", reports.first.get("em"));
  summary.add("f1", reports.first.get("f1"));
  summary.add("reconstruction_exact_rate", reports.second.get("exact_rate"));
  summary.add("reconstruction_bleu4", reports.second.get("bleu4"));
  summary.add("rewrite_acceptance_rate", rw["metrics"]["acceptance_rate"].get<double>());
  summary.add("rewrite_records", rw["metrics"]["records"].get<double>(), eval::Range::Count);
  summary.config = to_json(cfg);
  summary.wall_seconds = seconds_since(t0);
  summary.write(cfg.output_dir, "pipeline_summary");
  write_json(fs::path(cfg.output_dir) / "timings.json", stages);
  write_json(fs::path(cfg.output_dir) / "config.json", to_json(cfg));
  log("pipeline", "done in " + std::to_string(static_cast<int>(summary.wall_seconds)) + " s");
}

template <typename S>
void dispatch(const std::string& stage, const RunConfig& cfg) {
  if (stage == "gen-data") return gen_data(cfg);
  if (stage == "train-mrc") return train_mrc<S>(cfg);
  if (stage == "train-ae") return train_ae_stage<S>(cfg);
  if (stage == "rewrite") return rewrite_stage<S>(cfg);
  if (stage == "merge") return merge_stage(cfg);
  if (stage == "evaluate") {
    evaluate_stage<S>(cfg);
    return;
  }
  if (stage == "pipeline") return pipeline<S>(cfg);
  throw UsageError("unknown subcommand " + stage);
}

}  // namespace

void run_stage(const std::string& stage, const RunConfig& cfg) {
  cfg.validate();
  if (cfg.precision == "float64") {
    dispatch<double>(stage, cfg);
  } else {
    dispatch<float>(stage, cfg);
  }
}

int main(int argc, char** argv) {
  CLI::App app{"Question rewriting data augmentation for reading comprehension"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::string config_path;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string preset, mode, output_dir, precision;
  double beta_t = 0, beta_a = 0, beta_b = 0, beta_s = 0;
  int max_steps = 0;
  auto* o_config = app.add_option("--config", config_path, "JSON config file");
  auto* o_seed = app.add_option("--seed", seed, "global seed");
  auto* o_threads = app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  auto* o_preset = app.add_option("--preset", preset, "model size preset")->check(CLI::IsMember({"desk", "paper-scale"}));
  auto* o_precision = app.add_option("--precision", precision, "float32 or float64")->check(CLI::IsMember({"float32", "float64"}));
  auto* o_out = app.add_option("-o,--output-dir", output_dir, "artifact directory");
  auto* o_bt = app.add_option("--beta-t", beta_t, "acceptance probability threshold");
  auto* o_ba = app.add_option("--beta-a", beta_a, "lower Jaccard bound");
  auto* o_bb = app.add_option("--beta-b", beta_b, "upper Jaccard bound");
  auto* o_bs = app.add_option("--beta-s", beta_s, "step-size decay");
  auto* o_ms = app.add_option("--max-steps", max_steps, "revision steps per step size");
  auto* o_mode = app.add_option("--mode", mode, "rewrite target")->check(CLI::IsMember({"to-unanswerable", "to-answerable", "both"}));

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen-data", "write the synthetic corpus"},
      {"train-mrc", "train the guide model"},
      {"train-ae", "train the autoencoder on the guide's embeddings"},
      {"rewrite", "rewrite answerable questions"},
      {"merge", "merge accepted rewrites into the training set"},
      {"evaluate", "score the guide and the autoencoder"},
      {"pipeline", "run every stage in order"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  const std::string stage = app.get_subcommands().front()->get_name();

  try {
    RunConfig cfg = o_config->count() ? load_config(config_path) : RunConfig{};
    if (o_seed->count()) cfg.seed = seed;
    if (o_threads->count()) cfg.threads = threads;
    if (o_preset->count()) cfg.preset = preset;
    if (o_precision->count()) cfg.precision = precision;
    if (o_out->count()) cfg.output_dir = output_dir;
    if (o_bt->count()) cfg.rewrite.beta_t = beta_t;
    if (o_ba->count()) cfg.rewrite.beta_a = beta_a;
    if (o_bb->count()) cfg.rewrite.beta_b = beta_b;
    if (o_bs->count()) cfg.rewrite.beta_s = beta_s;
    if (o_ms->count()) cfg.rewrite.max_steps = max_steps;
    if (o_mode->count()) cfg.rewrite.mode = rewrite::parse_mode(mode);
    run_stage(stage, cfg);
  } catch (const UsageError& e) {
    std::cerr << "qrewrite " << stage << ": usage error: " << e.what() << std::endl;
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "qrewrite " << stage << ": error: " << e.what() << std::endl;
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace qrw::cli
