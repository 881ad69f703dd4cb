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

#include "qrw/data/squad.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace qrw::data {

using json = nlohmann::ordered_json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Byte offset of code point `cp` in the UTF-8 string `s`; npos past the end.
std::size_t codepoint_to_byte(const std::string& s, std::size_t cp) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) == 0x80) continue;
    if (count == cp) return i;
    ++count;
  }
  return count == cp ? s.size() : std::string::npos;
}

std::size_t byte_to_codepoint(const std::string& s, std::size_t byte) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < byte && i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) ++count;
  }
  return count;
}

std::string location(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

const json& member(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing \"" + key + "\"");
  return *it;
}

template <typename T>
T get_as(const json& v, const std::string& where) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ParseError(where + ": wrong type");
  }
}

// Token span [s, e] whose pieces cover exactly [begin, end) bytes, if any.
std::optional<std::pair<Index, Index>> align(const std::vector<text::Piece>& pieces, std::size_t begin,
                                             std::size_t end) {
  std::optional<Index> s, e;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (pieces[i].begin == begin) s = static_cast<Index>(i);
    if (pieces[i].end == end) e = static_cast<Index>(i);
  }
  if (!s || !e || *s > *e) return std::nullopt;
  return std::make_pair(*s, *e);
}

}  // namespace

Dataset load_squad_json(const std::filesystem::path& path, std::shared_ptr<const Vocab> vocab, Split split,
                        const std::string& id_prefix) {
  const std::string raw = read_file(path);
  json root;
  try {
    root = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": malformed JSON at " + location(raw, e.byte > 0 ? e.byte - 1 : 0));
  }
  const std::string file = path.string();
  const json& data = member(root, "data", file);
  if (!data.is_array()) throw ParseError(file + ": \"data\" must be an array");
  if (data.empty()) throw ContractError(file + ": empty \"data\" array");

  std::shared_ptr<Vocab> grown;
  if (!vocab) grown = std::make_shared<Vocab>();
  auto tok = [&](const std::string& s) { return grown ? text::tokenize_growing(s, *grown) : text::tokenize(s, *vocab); };

  Dataset ds;
  std::size_t pcount = 0;
  for (std::size_t a = 0; a < data.size(); ++a) {
    const std::string aw = file + ": data[" + std::to_string(a) + "]";
    const json& paras = member(data[a], "paragraphs", aw);
    if (!paras.is_array()) throw ParseError(aw + ".paragraphs: expected an array");
    for (std::size_t p = 0; p < paras.size(); ++p, ++pcount) {
      const std::string pw = aw + ".paragraphs[" + std::to_string(p) + "]";
      const auto context = get_as<std::string>(member(paras[p], "context", pw), pw + ".context");
      std::string pid = id_prefix + "p" + std::to_string(pcount);
      if (paras[p].contains("id")) pid = get_as<std::string>(paras[p]["id"], pw + ".id");
      if (ds.paragraphs.count(pid)) throw ParseError(pw + ": duplicate paragraph id " + pid);
      ds.paragraphs[pid] = tok(context);
      const auto pieces = text::split_words(context);
      const json& qas = member(paras[p], "qas", pw);
      if (!qas.is_array()) throw ParseError(pw + ".qas: expected an array");
      for (std::size_t q = 0; q < qas.size(); ++q) {
        const std::string qw = pw + ".qas[" + std::to_string(q) + "]";
        DataTuple t;
        t.id = get_as<std::string>(member(qas[q], "id", qw), qw + ".id");
        t.question = tok(get_as<std::string>(member(qas[q], "question", qw), qw + ".question"));
        t.paragraph_id = pid;
        t.split = split;
        const bool impossible = qas[q].contains("is_impossible") && get_as<bool>(qas[q]["is_impossible"], qw + ".is_impossible");
        if (t.question.empty()) {
          ++ds.dropped;
          continue;
        }
        if (impossible) {
          t.label = Label::Unanswerable;
          ds.tuples.push_back(std::move(t));
          continue;
        }
        const json& answers = member(qas[q], "answers", qw);
        if (!answers.is_array()) throw ParseError(qw + ".answers: expected an array");
        if (answers.empty()) {
          ++ds.dropped;
          continue;
        }
        for (std::size_t k = 0; k < answers.size(); ++k) {
          t.answers.push_back(get_as<std::string>(member(answers[k], "text", qw), qw + ".answers.text"));
        }
        const std::string aw0 = qw + ".answers[0]";
        const auto start_cp = get_as<long long>(member(answers[0], "answer_start", aw0), aw0 + ".answer_start");
        const std::string& text0 = t.answers.front();
        const std::size_t b = start_cp < 0 ? std::string::npos : codepoint_to_byte(context, static_cast<std::size_t>(start_cp));
        std::optional<std::pair<Index, Index>> span;
        if (b != std::string::npos && context.compare(b, text0.size(), text0) == 0) {
          span = align(pieces, b, b + text0.size());
        }
        if (!span) {
          ++ds.dropped;
          continue;
        }
        t.label = Label::Answerable;
        t.start = span->first;
        t.end = span->second;
        ds.tuples.push_back(std::move(t));
      }
    }
  }
  ds.vocab = grown ? std::shared_ptr<const Vocab>(grown) : vocab;
  if (ds.tuples.empty()) throw ContractError(file + ": no usable tuples");
  ds.validate();
  return ds;
}

void write_squad_json(const std::filesystem::path& path, const Dataset& ds, std::optional<Split> split) {
  json paragraphs = json::array();
  std::map<std::string, std::size_t> slot;
  for (const auto& t : ds.tuples) {
    if (split && t.split != *split) continue;
    auto it = slot.find(t.paragraph_id);
    if (it == slot.end()) {
      json p;
      p["id"] = t.paragraph_id;
      p["context"] = ds.paragraph(t).surface;
      p["qas"] = json::array();
      it = slot.emplace(t.paragraph_id, paragraphs.size()).first;
      paragraphs.push_back(std::move(p));
    }
    json q;
    q["id"] = t.id;
    q["question"] = t.question.surface;
    q["is_impossible"] = t.label == Label::Unanswerable;
    q["answers"] = json::array();
    if (t.label == Label::Answerable) {
      const std::string& context = ds.paragraph(t).surface;
      const auto pieces = text::split_words(context);
      if (static_cast<std::size_t>(*t.end) >= pieces.size()) {
        throw ContractError("tuple " + t.id + ": span does not match the paragraph surface");
      }
      const std::size_t b = pieces[static_cast<std::size_t>(*t.start)].begin;
      const std::size_t e = pieces[static_cast<std::size_t>(*t.end)].end;
      q["answers"].push_back({{"text", context.substr(b, e - b)}, {"answer_start", byte_to_codepoint(context, b)}});
    }
    paragraphs[slot[t.paragraph_id]]["qas"].push_back(std::move(q));
  }
  json root;
  root["version"] = "v2.0";
  root["data"] = json::array({json{{"title", "qrewrite"}, {"paragraphs", std::move(paragraphs)}}});
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << root.dump(1) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.vocab != b.vocab && (!a.vocab || !b.vocab || a.vocab->hash() != b.vocab->hash())) {
    throw VocabMismatchError("concat: datasets use different vocabularies");
  }
  Dataset out = a;
  for (const auto& [id, p] : b.paragraphs) {
    auto it = out.paragraphs.find(id);
    if (it != out.paragraphs.end() && !(it->second == p)) throw ContractError("concat: paragraph id clash " + id);
    out.paragraphs[id] = p;
  }
  out.tuples.insert(out.tuples.end(), b.tuples.begin(), b.tuples.end());
  out.dropped += b.dropped;
  out.validate();
  return out;
}

const char* merge_mode_name(MergeMode m) {
  switch (m) {
    case MergeMode::Answerable: return "ans";
    case MergeMode::Unanswerable: return "unans";
    case MergeMode::Both: return "both";
  }
  return "?";
}

MergeMode parse_merge_mode(const std::string& name) {
  if (name == "ans") return MergeMode::Answerable;
  if (name == "unans") return MergeMode::Unanswerable;
  if (name == "both" || name == "ans+unans") return MergeMode::Both;
  throw ParseError("unknown merge mode '" + name + "' (expected ans, unans or both)");
}

Dataset merge_for_training(const Dataset& original, const std::vector<AugmentedRecord>& records, MergeMode mode) {
  std::vector<std::string> dangling;
  for (const auto& r : records) {
    if (!original.paragraphs.count(r.paragraph_id)) dangling.push_back(r.id() + " -> " + r.paragraph_id);
  }
  if (!dangling.empty()) {
    std::string msg = "merge: " + std::to_string(dangling.size()) + " record(s) reference unknown paragraphs:";
    for (const auto& d : dangling) msg += " " + d;
    throw ContractError(msg);
  }
  Dataset out = original;
  for (const auto& r : records) {
    if (mode == MergeMode::Answerable && r.target != Label::Answerable) continue;
    if (mode == MergeMode::Unanswerable && r.target != Label::Unanswerable) continue;
    DataTuple t;
    t.id = r.id();
    t.question = r.question;
    t.paragraph_id = r.paragraph_id;
    t.label = r.target;
    t.start = r.start;
    t.end = r.end;
    t.split = Split::Train;
    out.tuples.push_back(std::move(t));
  }
  for (auto& t : out.tuples) {
    if (t.label == Label::Answerable && t.answers.empty()) t.answers = {span_text(out, t)};
  }
  out.validate();
  return out;
}

Dataset merge_for_training(const Dataset& original, const std::filesystem::path& augmented_path, MergeMode mode) {
  return merge_for_training(original, read_augmented(augmented_path, *original.vocab), mode);
}

}  // namespace qrw::data
