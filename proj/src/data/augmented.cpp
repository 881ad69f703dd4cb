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

#include "qrw/data/augmented.hpp"

#include <fstream>

#include "json.hpp"

namespace qrw::data {

using json = nlohmann::ordered_json;

namespace {

json opt(const std::optional<Index>& v) { return v ? json(*v) : json(nullptr); }

std::optional<Index> read_opt(const json& o, const char* key) {
  auto it = o.find(key);
  if (it == o.end() || it->is_null()) return std::nullopt;
  return it->get<Index>();
}

}  // namespace

void write_augmented(const std::filesystem::path& path, const std::vector<AugmentedRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) {
    if ((r.target == Label::Unanswerable) != !r.start.has_value() || r.start.has_value() != r.end.has_value()) {
      throw ContractError("record " + r.id() + ": span must be present exactly for answerable targets");
    }
    json o;
    o["id"] = r.id();
    o["source_id"] = r.source_id;
    o["question"] = r.question.surface;
    o["paragraph_id"] = r.paragraph_id;
    o["target_label"] = label_name(r.target);
    o["span_start"] = opt(r.start);
    o["span_end"] = opt(r.end);
    o["jaccard"] = r.jaccard;
    o["p_target"] = r.p_target;
    o["eta_init"] = r.eta_init;
    o["step_index"] = r.step_index;
    o["eta_index"] = r.eta_index;
    o["strategy"] = r.strategy;
    o["plausible_start"] = opt(r.plausible_start);
    o["plausible_end"] = opt(r.plausible_end);
    out << o.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<AugmentedRecord> read_augmented(const std::filesystem::path& path, const Vocab& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<AugmentedRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    try {
      const json o = json::parse(line);
      AugmentedRecord r;
      r.source_id = o.at("source_id").get<std::string>();
      r.question = text::tokenize(o.at("question").get<std::string>(), vocab);
      r.paragraph_id = o.at("paragraph_id").get<std::string>();
      r.target = parse_label(o.at("target_label").get<std::string>());
      r.start = read_opt(o, "span_start");
      r.end = read_opt(o, "span_end");
      r.jaccard = o.at("jaccard").get<double>();
      r.p_target = o.at("p_target").get<double>();
      r.eta_init = o.at("eta_init").get<double>();
      r.step_index = o.at("step_index").get<int>();
      r.eta_index = o.value("eta_index", 0);
      r.strategy = o.value("strategy", std::string("gradient"));
      r.plausible_start = read_opt(o, "plausible_start");
      r.plausible_end = read_opt(o, "plausible_end");
      if (o.contains("id") && o["id"].get<std::string>() != r.id()) {
        throw ParseError("id does not match the record fields");
      }
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace qrw::data
