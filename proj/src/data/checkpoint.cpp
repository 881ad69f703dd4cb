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

#include "qrw/data/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace qrw::data {

namespace {

constexpr char kMagic[4] = {'C', 'R', 'Q', 'D'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f32(float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, sizeof(v));
    u32(v);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& buf, std::size_t end, std::string where) : buf_(buf), end_(end), where_(std::move(where)) {}

  void need(std::size_t n) const {
    if (end_ - pos_ < n) throw FormatError(where_ + ": truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_++])) << (8 * i);
    return v;
  }
  float f32() {
    const std::uint32_t v = u32();
    float f;
    std::memcpy(&f, &v, sizeof(f));
    return f;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::string& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
  std::string where_;
};

std::uint64_t checksum(const std::string& buf, std::size_t n) {
  Fnv1a h;
  h.update(buf.data(), n);
  return h.digest();
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u64(ck.vocab_hash);
  w.str(ck.metadata.dump());
  w.u32(static_cast<std::uint32_t>(ck.tensors.size()));
  for (const auto& [name, m] : ck.tensors) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(m.rows()));
    w.u32(static_cast<std::uint32_t>(m.cols()));
    for (Index i = 0; i < m.size(); ++i) w.f32(m.data()[i]);
  }
  w.u64(checksum(w.data(), w.data().size()));

  // Write beside the target, then rename, so readers never see half a file.
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<std::uint64_t> expected_vocab_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string buf = ss.str();
  const std::string where = path.string();

  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) throw FormatError(where + ": not a checkpoint (bad magic)");
  if (buf.size() < 8 + 8) throw FormatError(where + ": truncated checkpoint");
  Reader head(buf, buf.size(), where);
  head.u32();
  const std::uint32_t version = head.u32();
  if (version != kCheckpointVersion) {
    throw VersionError(where + ": checkpoint version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  }
  const std::size_t body = buf.size() - 8;
  std::uint64_t stored = 0;
  for (int i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[body + static_cast<std::size_t>(i)])) << (8 * i);
  if (stored != checksum(buf, body)) throw FormatError(where + ": checksum mismatch (truncated or corrupted checkpoint)");

  Reader r(buf, body, where);
  r.u32();
  r.u32();
  Checkpoint ck;
  ck.vocab_hash = r.u64();
  try {
    ck.metadata = nlohmann::ordered_json::parse(r.str());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where + ": bad metadata block: " + e.what());
  }
  const std::uint32_t count = r.u32();
  for (std::uint32_t t = 0; t < count; ++t) {
    std::string name = r.str();
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    r.need(static_cast<std::size_t>(rows) * cols * 4);
    Mat<float> m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = r.f32();
    ck.tensors.emplace_back(std::move(name), std::move(m));
  }
  if (r.pos() != body) throw FormatError(where + ": trailing bytes after the tensor table");
  if (expected_vocab_hash && *expected_vocab_hash != ck.vocab_hash) {
    throw VocabMismatchError(where + ": checkpoint was built for a different vocabulary");
  }
  return ck;
}

}  // namespace qrw::data
