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

#include "qrw/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace qrw::cli {

using json = nlohmann::ordered_json;

namespace {

template <typename T>
void read(const json& j, const std::string& where, T& out) {
  try {
    out = j.get<T>();
  } catch (const json::exception&) {
    throw UsageError("config: " + where + " has the wrong type");
  }
}

// Calls `fn(key, value)` for each member, after checking every key is allowed.
template <typename Fn>
void members(const json& j, const std::string& where, const std::vector<std::string>& allowed, Fn&& fn) {
  if (!j.is_object()) throw UsageError("config: " + (where.empty() ? std::string("top level") : where) + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw UsageError("config: unknown key '" + (where.empty() ? "" : where + ".") + it.key() + "'");
    }
    fn(it.key(), it.value(), (where.empty() ? "" : where + ".") + it.key());
  }
}

json training_json(const StageTraining& t) {
  return {{"epochs", t.epochs}, {"batch_size", t.batch_size}, {"lr", t.lr}, {"warmup_fraction", t.warmup_fraction},
          {"clip_norm", t.clip_norm}};
}

bool training_key(StageTraining& t, const std::string& k, const json& v, const std::string& w) {
  if (k == "epochs") return read(v, w, t.epochs), true;
  if (k == "batch_size") return read(v, w, t.batch_size), true;
  if (k == "lr") return read(v, w, t.lr), true;
  if (k == "warmup_fraction") return read(v, w, t.warmup_fraction), true;
  if (k == "clip_norm") return read(v, w, t.clip_norm), true;
  return false;
}

const std::vector<std::string> kTrainingKeys = {"epochs", "batch_size", "lr", "warmup_fraction", "clip_norm"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void check_training(const StageTraining& t, const std::string& name) {
  if (t.epochs < 0) throw UsageError("config: " + name + ".epochs must be non-negative");
  if (t.batch_size <= 0) throw UsageError("config: " + name + ".batch_size must be positive");
  if (!(t.lr > 0)) throw UsageError("config: " + name + ".lr must be positive");
  if (!(t.warmup_fraction >= 0 && t.warmup_fraction <= 1)) {
    throw UsageError("config: " + name + ".warmup_fraction must lie in [0, 1]");
  }
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t RunConfig::stage_seed(const std::string& stage) const {
  Fnv1a h;
  h.update(stage);
  return splitmix64(seed ^ h.digest());
}

double RunConfig::mask_rate() const {
  if (ae_mask == "wiki-mask") return 0.15;
  if (ae_mask == "none") return 0.0;
  return ae_mask_rate;
}

Paths RunConfig::resolved() const {
  const std::filesystem::path out(output_dir);
  Paths p = paths;
  if (p.train.empty()) p.train = (out / "data" / "train.json").string();
  if (p.dev.empty()) p.dev = (out / "data" / "dev.json").string();
  if (p.vocab.empty()) p.vocab = (out / "data" / "vocab.txt").string();
  if (p.guide.empty()) p.guide = (out / "guide" / "guide.ckpt").string();
  if (p.ae.empty()) p.ae = (out / "ae" / "ae.ckpt").string();
  if (p.augmented.empty()) p.augmented = (out / "rewrite" / "augmented.jsonl").string();
  return p;
}

void RunConfig::validate() const {
  if (threads < 1) throw UsageError("config: threads must be at least 1");
  if (preset != "desk" && preset != "paper-scale") throw UsageError("config: preset must be desk or paper-scale");
  if (precision != "float32" && precision != "float64") throw UsageError("config: precision must be float32 or float64");
  if (output_dir.empty()) throw UsageError("config: output_dir must not be empty");
  if (data.n_paragraphs <= 0) throw UsageError("config: data.n_paragraphs must be positive");
  if (data.facts_min < 1 || data.facts_max < data.facts_min) throw UsageError("config: invalid data.facts range");
  if (data.questions_per_paragraph < 1) throw UsageError("config: data.questions_per_paragraph must be positive");
  if (!(data.answerable_probability >= 0 && data.answerable_probability <= 1)) {
    throw UsageError("config: data.answerable_probability must lie in [0, 1]");
  }
  if (!(data.dev_fraction >= 0 && data.dev_fraction < 1)) throw UsageError("config: data.dev_fraction must lie in [0, 1)");
  check_training(guide, "guide");
  check_training(ae, "ae");
  if (ae_mask != "none" && ae_mask != "wiki-mask" && ae_mask != "custom") {
    throw UsageError("config: ae.mask must be none, wiki-mask or custom");
  }
  if (!(mask_rate() >= 0 && mask_rate() < 1)) throw UsageError("config: ae.mask_rate must lie in [0, 1)");
  try {
    rewrite.validate();
  } catch (const ContractError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  if (max_sources < 0) throw UsageError("config: rewrite.max_sources must be non-negative");
  if (source_split != "train" && source_split != "dev") throw UsageError("config: rewrite.source_split must be train or dev");
  if (!(noise_sigma > 0)) throw UsageError("config: rewrite.noise_sigma must be positive");
  if (merge_mode != "ans" && merge_mode != "unans" && merge_mode != "both") {
    throw UsageError("config: merge.mode must be ans, unans or both");
  }
  if (eval_max_questions < 0) throw UsageError("config: eval.max_questions must be non-negative");
}

json to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["preset"] = c.preset;
  j["precision"] = c.precision;
  j["output_dir"] = c.output_dir;
  const Paths p = c.resolved();
  j["paths"] = {{"train", p.train}, {"dev", p.dev}, {"vocab", p.vocab},
                {"guide", p.guide}, {"ae", p.ae},   {"augmented", p.augmented}};
  j["data"] = {{"n_paragraphs", c.data.n_paragraphs},
               {"facts_min", c.data.facts_min},
               {"facts_max", c.data.facts_max},
               {"questions_per_paragraph", c.data.questions_per_paragraph},
               {"answerable_probability", c.data.answerable_probability},
               {"dev_fraction", c.data.dev_fraction}};
  j["guide"] = training_json(c.guide);
  j["guide"]["lambda"] = c.guide_lambda;
  j["ae"] = training_json(c.ae);
  j["ae"]["mask"] = c.ae_mask;
  j["ae"]["mask_rate"] = c.mask_rate();
  const auto& r = c.rewrite;
  j["rewrite"] = {{"s_eta", r.s_eta},
                  {"beta_s", r.beta_s},
                  {"beta_t", r.beta_t},
                  {"beta_a", r.beta_a},
                  {"beta_b", r.beta_b},
                  {"max_steps", r.max_steps},
                  {"lambda", r.lambda},
                  {"mode", rewrite::mode_name(r.mode)},
                  {"dedup", r.dedup},
                  {"freeze_special_rows", r.freeze_special_rows},
                  {"score_embeddings", r.score_embeddings},
                  {"max_sources", c.max_sources},
                  {"source_split", c.source_split},
                  {"noise_baseline", c.noise_baseline},
                  {"noise_sigma", c.noise_sigma}};
  j["merge"] = {{"mode", c.merge_mode}};
  j["eval"] = {{"max_questions", c.eval_max_questions}};
  return j;
}

void apply_json(RunConfig& c, const json& j) {
  const std::vector<std::string> top = {"seed", "threads", "preset", "precision", "output_dir", "paths",
                                        "data", "guide",   "ae",     "rewrite",   "merge",      "eval"};
  members(j, "", top, [&](const std::string& k, const json& v, const std::string& w) {
    if (k == "seed") {
      read(v, w, c.seed);
    } else if (k == "threads") {
      read(v, w, c.threads);
    } else if (k == "preset") {
      read(v, w, c.preset);
    } else if (k == "precision") {
      read(v, w, c.precision);
    } else if (k == "output_dir") {
      read(v, w, c.output_dir);
    } else if (k == "paths") {
      members(v, w, {"train", "dev", "vocab", "guide", "ae", "augmented"},
              [&](const std::string& pk, const json& pv, const std::string& pw) {
                std::string* slot = pk == "train" ? &c.paths.train
                                    : pk == "dev" ? &c.paths.dev
                                    : pk == "vocab" ? &c.paths.vocab
                                    : pk == "guide" ? &c.paths.guide
                                    : pk == "ae" ? &c.paths.ae
                                                 : &c.paths.augmented;
                read(pv, pw, *slot);
              });
    } else if (k == "data") {
      members(v, w, {"n_paragraphs", "facts_min", "facts_max", "questions_per_paragraph", "answerable_probability", "dev_fraction"},
              [&](const std::string& dk, const json& dv, const std::string& dw) {
                if (dk == "n_paragraphs") read(dv, dw, c.data.n_paragraphs);
                if (dk == "facts_min") read(dv, dw, c.data.facts_min);
                if (dk == "facts_max") read(dv, dw, c.data.facts_max);
                if (dk == "questions_per_paragraph") read(dv, dw, c.data.questions_per_paragraph);
                if (dk == "answerable_probability") read(dv, dw, c.data.answerable_probability);
                if (dk == "dev_fraction") read(dv, dw, c.data.dev_fraction);
              });
    } else if (k == "guide") {
      members(v, w, with(kTrainingKeys, {"lambda"}), [&](const std::string& gk, const json& gv, const std::string& gw) {
        if (!training_key(c.guide, gk, gv, gw)) read(gv, gw, c.guide_lambda);
      });
    } else if (k == "ae") {
      members(v, w, with(kTrainingKeys, {"mask", "mask_rate"}), [&](const std::string& ak, const json& av, const std::string& aw) {
        if (training_key(c.ae, ak, av, aw)) return;
        if (ak == "mask") read(av, aw, c.ae_mask);
        if (ak == "mask_rate") {
          read(av, aw, c.ae_mask_rate);
          if (!v.contains("mask") && c.ae_mask == "none") c.ae_mask = "custom";
        }
      });
    } else if (k == "rewrite") {
      members(v, w,
              {"s_eta", "beta_s", "beta_t", "beta_a", "beta_b", "max_steps", "lambda", "mode", "dedup",
               "freeze_special_rows", "score_embeddings", "max_sources", "source_split", "noise_baseline", "noise_sigma"},
              [&](const std::string& rk, const json& rv, const std::string& rw) {
                auto& r = c.rewrite;
                if (rk == "s_eta") read(rv, rw, r.s_eta);
                if (rk == "beta_s") read(rv, rw, r.beta_s);
                if (rk == "beta_t") read(rv, rw, r.beta_t);
                if (rk == "beta_a") read(rv, rw, r.beta_a);
                if (rk == "beta_b") read(rv, rw, r.beta_b);
                if (rk == "max_steps") read(rv, rw, r.max_steps);
                if (rk == "lambda") read(rv, rw, r.lambda);
                if (rk == "mode") {
                  std::string m;
                  read(rv, rw, m);
                  try {
                    r.mode = rewrite::parse_mode(m);
                  } catch (const ParseError& e) {
                    throw UsageError(std::string("config: ") + e.what());
                  }
                }
                if (rk == "dedup") read(rv, rw, r.dedup);
                if (rk == "freeze_special_rows") read(rv, rw, r.freeze_special_rows);
                if (rk == "score_embeddings") read(rv, rw, r.score_embeddings);
                if (rk == "max_sources") read(rv, rw, c.max_sources);
                if (rk == "source_split") read(rv, rw, c.source_split);
                if (rk == "noise_baseline") read(rv, rw, c.noise_baseline);
                if (rk == "noise_sigma") read(rv, rw, c.noise_sigma);
              });
    } else if (k == "merge") {
      members(v, w, {"mode"}, [&](const std::string&, const json& mv, const std::string& mw) { read(mv, mw, c.merge_mode); });
    } else if (k == "eval") {
      members(v, w, {"max_questions"},
              [&](const std::string&, const json& ev, const std::string& ew) { read(ev, ew, c.eval_max_questions); });
    }
  });
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config file not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path.string() + ": malformed JSON (" + e.what() + ")");
  }
  RunConfig c;
  apply_json(c, j);
  return c;
}

}  // namespace qrw::cli
