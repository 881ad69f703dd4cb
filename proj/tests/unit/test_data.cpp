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
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "qrw/data/augmented.hpp"
#include "qrw/data/checkpoint.hpp"
#include "qrw/data/squad.hpp"
#include "qrw/data/synthetic.hpp"

using namespace qrw;
using namespace qrw::data;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "qrw_data_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kFixture = R"({"version": "v2.0", "data": [{"title": "t", "paragraphs": [{
  "context": "one two three four five six seven eight nine ten",
  "qas": [
    {"id": "q1", "question": "which is fourth?", "is_impossible": false,
     "answers": [{"text": "four", "answer_start": 14}]},
    {"id": "q2", "question": "which is eleventh?", "is_impossible": true, "answers": []},
    {"id": "q3", "question": "misaligned?", "is_impossible": false,
     "answers": [{"text": "our", "answer_start": 15}]}
  ]}]}]})";

AugmentedRecord record(const Dataset& ds, const DataTuple& t, int step, Label target) {
  AugmentedRecord r;
  r.source_id = t.id;
  r.question = t.question;
  r.paragraph_id = t.paragraph_id;
  r.target = target;
  if (target == Label::Answerable) {
    r.start = t.start;
    r.end = t.end;
  } else {
    r.plausible_start = t.start;
    r.plausible_end = t.end;
  }
  r.p_target = 0.75;
  r.jaccard = 0.625;
  r.eta_init = 2.0;
  r.eta_index = 1;
  r.step_index = step;
  (void)ds;
  return r;
}

}  // namespace

TEST_CASE("squad loader maps the schema and aligns spans") {
  const auto path = scratch("fixture.json");
  write_text(path, kFixture);
  const Dataset ds = load_squad_json(path);
  REQUIRE(ds.tuples.size() == 2);
  CHECK(ds.dropped == 1);
  const DataTuple& a = ds.tuples[0];
  CHECK(a.label == Label::Answerable);
  CHECK(a.start == 3);
  CHECK(a.end == 3);
  CHECK(span_text(ds, a) == "four");
  const DataTuple& u = ds.tuples[1];
  CHECK(u.label == Label::Unanswerable);
  CHECK_FALSE(u.start.has_value());
  CHECK_FALSE(u.end.has_value());
}

TEST_CASE("squad loader errors") {
  const auto empty = scratch("empty.json");
  write_text(empty, R"({"data": []})");
  CHECK_THROWS_AS(load_squad_json(empty), ContractError);
  const auto bad = scratch("bad.json");
  write_text(bad, "{\"data\": [\n  {\"paragraphs\": [}\n]}");
  try {
    load_squad_json(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  const auto schema = scratch("schema.json");
  write_text(schema, R"({"data": [{"paragraphs": [{"qas": []}]}]})");
  try {
    load_squad_json(schema);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("context") != std::string::npos);
  }
  CHECK_THROWS_AS(load_squad_json(scratch("does_not_exist.json")), IoError);
}

TEST_CASE("squad writer round trips, including non-ascii offsets") {
  const auto path = scratch("unicode.json");
  write_text(path, R"({"data": [{"paragraphs": [{"context": "café naïve blue sky",
    "qas": [{"id": "u1", "question": "what?", "answers": [{"text": "blue", "answer_start": 11}]}]}]}]})");
  const Dataset ds = load_squad_json(path);
  REQUIRE(ds.tuples.size() == 1);
  CHECK(ds.tuples[0].start == 2);
  const auto out = scratch("unicode_out.json");
  write_squad_json(out, ds);
  const Dataset again = load_squad_json(out, ds.vocab);
  CHECK(again.tuples[0].start == 2);
  CHECK(again.tuples[0].paragraph_id == ds.tuples[0].paragraph_id);
}

TEST_CASE("synthetic generator is deterministic with a 2:1 label ratio") {
  SyntheticConfig c;
  c.n_paragraphs = 500;
  c.seed = 7;
  const Dataset a = gen_synthetic(c);
  const Dataset b = gen_synthetic(c);
  REQUIRE(a.tuples.size() == b.tuples.size());
  for (std::size_t i = 0; i < a.tuples.size(); ++i) {
    CHECK(a.tuples[i].id == b.tuples[i].id);
    CHECK(a.tuples[i].question.ids == b.tuples[i].question.ids);
    CHECK(a.tuples[i].start == b.tuples[i].start);
  }
  const auto pa = scratch("syn_a.json"), pb = scratch("syn_b.json");
  write_squad_json(pa, a);
  write_squad_json(pb, b);
  CHECK(read_text(pa) == read_text(pb));

  std::size_t ans = 0;
  for (const auto& t : a.tuples) ans += t.label == Label::Answerable;
  const double ratio = static_cast<double>(ans) / static_cast<double>(a.tuples.size() - ans);
  CHECK(ratio >= 2.0 * 0.95);
  CHECK(ratio <= 2.0 * 1.05);
  a.validate();
  for (const auto& t : a.tuples) {
    const std::size_t n = a.paragraph(t).size();
    if (t.label == Label::Answerable) {
      CHECK(*t.start >= 0);
      CHECK(static_cast<std::size_t>(*t.end) < n);
      CHECK(!t.answers.empty());
    }
  }
}

TEST_CASE("augmented JSONL writer and reader") {
  SyntheticConfig c;
  c.n_paragraphs = 10;
  const Dataset ds = gen_synthetic(c);
  const auto empty = scratch("none.jsonl");
  write_augmented(empty, {});
  CHECK(fs::file_size(empty) == 0);

  const auto srcs = ds.select(Split::Train, Label::Answerable);
  REQUIRE(srcs.size() >= 2);
  std::vector<AugmentedRecord> recs{record(ds, *srcs[0], 0, Label::Unanswerable),
                                    record(ds, *srcs[0], 1, Label::Answerable),
                                    record(ds, *srcs[1], 2, Label::Unanswerable)};
  const auto path = scratch("three.jsonl");
  write_augmented(path, recs);
  std::ifstream in(path);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("source_id"));
    CHECK(j.contains("jaccard"));
    ++n;
  }
  CHECK(n == 3);
  const auto back = read_augmented(path, *ds.vocab);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].id() == recs[i].id());
    CHECK(back[i].question.ids == recs[i].question.ids);
    CHECK(back[i].start == recs[i].start);
    CHECK(back[i].plausible_start == recs[i].plausible_start);
    CHECK(back[i].p_target == recs[i].p_target);
  }

  AugmentedRecord broken = recs[0];
  broken.start = 1;
  broken.end = 1;
  CHECK_THROWS_AS(write_augmented(scratch("broken.jsonl"), {broken}), ContractError);
  const auto garbage = scratch("garbage.jsonl");
  write_text(garbage, read_text(path) + "{not json\n");
  try {
    read_augmented(garbage, *ds.vocab);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":4") != std::string::npos);
  }
}

TEST_CASE("merge adds the selected records") {
  SyntheticConfig c;
  c.n_paragraphs = 10;
  const Dataset ds = gen_synthetic(c);
  const auto srcs = ds.select(Split::Train, Label::Answerable);
  const std::size_t train = ds.select(Split::Train).size();
  CHECK(merge_for_training(ds, std::vector<AugmentedRecord>{}, MergeMode::Both).tuples.size() == ds.tuples.size());

  std::vector<AugmentedRecord> recs{record(ds, *srcs[0], 0, Label::Unanswerable),
                                    record(ds, *srcs[0], 1, Label::Answerable),
                                    record(ds, *srcs[1], 2, Label::Unanswerable)};
  const Dataset both = merge_for_training(ds, recs, MergeMode::Both);
  CHECK(both.select(Split::Train).size() == train + 3);
  CHECK(merge_for_training(ds, recs, MergeMode::Unanswerable).select(Split::Train).size() == train + 2);
  const Dataset ans = merge_for_training(ds, recs, MergeMode::Answerable);
  REQUIRE(ans.select(Split::Train).size() == train + 1);
  const DataTuple& added = ans.tuples.back();
  CHECK(added.id == recs[1].id());
  CHECK(added.start == srcs[0]->start);
  CHECK(added.answers == srcs[0]->answers);
  both.validate();

  AugmentedRecord dangling = recs[0];
  dangling.paragraph_id = "nowhere";
  try {
    merge_for_training(ds, {dangling}, MergeMode::Both);
    FAIL("expected a contract error");
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()).find("nowhere") != std::string::npos);
  }
}

TEST_CASE("checkpoint round trip and failure modes") {
  Checkpoint ck;
  ck.vocab_hash = 0x1234abcdULL;
  ck.metadata["kind"] = "test";
  Mat<float> a(2, 3);
  a << 1.5f, -2.25f, 3e-8f, std::numeric_limits<float>::denorm_min(), -0.0f, 1e30f;
  ck.tensors.emplace_back("a", a);
  ck.tensors.emplace_back("empty", Mat<float>(0, 4));
  const auto path = scratch("ck.bin");
  save_checkpoint(path, ck);
  const Checkpoint back = load_checkpoint(path, ck.vocab_hash);
  CHECK(back.metadata == ck.metadata);
  REQUIRE(back.tensors.size() == 2);
  CHECK(back.tensors[0].first == "a");
  CHECK(std::memcmp(back.tensors[0].second.data(), a.data(), sizeof(float) * 6) == 0);
  CHECK(back.tensors[1].second.rows() == 0);
  CHECK(back.tensors[1].second.cols() == 4);

  CHECK_THROWS_AS(load_checkpoint(path, 99), VocabMismatchError);

  const std::string bytes = read_text(path);
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{20}, bytes.size() - 1}) {
    const auto t = scratch("ck_trunc.bin");
    write_text(t, bytes.substr(0, cut));
    CHECK_THROWS_AS(load_checkpoint(t), FormatError);
  }
  std::string flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x10;
  write_text(scratch("ck_flip.bin"), flipped);
  CHECK_THROWS_AS(load_checkpoint(scratch("ck_flip.bin")), FormatError);
  std::string version = bytes;
  version[4] = 9;
  write_text(scratch("ck_ver.bin"), version);
  CHECK_THROWS_AS(load_checkpoint(scratch("ck_ver.bin")), VersionError);
  CHECK_THROWS_AS(load_checkpoint(scratch("missing.bin")), IoError);
}
