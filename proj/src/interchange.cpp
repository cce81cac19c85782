// Copyright 2026 The wdhd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "wdhd/interchange.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "json.hpp"
#include "wdhd/error.hpp"

namespace wdhd {

namespace {

using nlohmann::json;

void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFFu));
}

std::uint32_t get_u32(const std::string& in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + k])) << (8 * k);
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EmbeddingFormatError("cannot open embedding file " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

const json& require(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ManifestError(line, std::string("missing field \"") + key + "\"");
  return *it;
}

std::string require_string(const json& obj, const char* key, std::size_t line) {
  const json& v = require(obj, key, line);
  if (!v.is_string()) throw ManifestError(line, std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

ResponseSample parse_response(const json& j, std::size_t line,
                              const std::filesystem::path& base) {
  if (!j.is_object()) throw ManifestError(line, "response entry must be an object");
  ResponseSample r;
  r.response_id = require_string(j, "response_id", line);
  r.text = require_string(j, "text", line);
  r.embedding_file = require_string(j, "embedding_file", line);
  const auto blob = base / r.embedding_file;
  if (!std::filesystem::is_regular_file(blob))
    throw ManifestError(line, "dangling embedding reference '" + r.embedding_file + "'");
  r.embedding = EmbeddingRef(blob);
  if (auto it = j.find("token_logprobs"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw ManifestError(line, "\"token_logprobs\" must be an array or null");
    std::vector<double> lp;
    lp.reserve(it->size());
    for (const auto& x : *it) {
      if (!x.is_number()) throw ManifestError(line, "\"token_logprobs\" entries must be numbers");
      const double v = x.get<double>();
      if (!(v <= 0.0)) throw ManifestError(line, "log-probability must be <= 0");
      lp.push_back(v);
    }
    r.token_logprobs = std::move(lp);
  }
  return r;
}

PromptRecord parse_record(const std::string& text, std::size_t line,
                          const std::filesystem::path& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ManifestError(line, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ManifestError(line, "expected a JSON object");

  PromptRecord rec;
  rec.prompt_id = require_string(j, "prompt_id", line);
  rec.prompt_text = require_string(j, "prompt_text", line);
  const json& responses = require(j, "responses", line);
  if (!responses.is_array()) throw ManifestError(line, "\"responses\" must be an array");
  for (const auto& r : responses) rec.responses.push_back(parse_response(r, line, base));

  if (auto it = j.find("reference"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw ManifestError(line, "\"reference\" must be a string or null");
    rec.reference = it->get<std::string>();
  }
  if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer() || (it->get<int>() != 0 && it->get<int>() != 1))
      throw ManifestError(line, "\"label\" must be 0, 1 or null");
    rec.label = it->get<int>();
  }
  if (auto it = j.find("metadata"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw ManifestError(line, "\"metadata\" must be an object");
    for (const auto& [k, v] : it->items()) {
      if (!v.is_string()) throw ManifestError(line, "metadata value for '" + k + "' must be a string");
      rec.metadata[k] = v.get<std::string>();
    }
  }
  return rec;
}

json to_json(const PromptRecord& rec) {
  json j;
  j["prompt_id"] = rec.prompt_id;
  j["prompt_text"] = rec.prompt_text;
  j["reference"] = rec.reference ? json(*rec.reference) : json(nullptr);
  j["label"] = rec.label ? json(*rec.label) : json(nullptr);
  j["metadata"] = json::object();
  for (const auto& [k, v] : rec.metadata) j["metadata"][k] = v;
  j["responses"] = json::array();
  for (const auto& r : rec.responses) {
    json jr;
    jr["response_id"] = r.response_id;
    jr["text"] = r.text;
    jr["embedding_file"] = r.embedding_file;
    jr["token_logprobs"] = r.token_logprobs ? json(*r.token_logprobs) : json(nullptr);
    j["responses"].push_back(std::move(jr));
  }
  return j;
}

}  // namespace

std::string encode_embedding(const EmbeddingMatrix& matrix) {
  if (matrix.cols() < 1) throw InvalidArgument("embedding must have at least one column");
  if (!matrix.allFinite()) throw InvalidArgument("embedding contains non-finite values");
  std::string out;
  out.reserve(kEmbeddingHeaderBytes + 4 * static_cast<std::size_t>(matrix.size()));
  out.append(kEmbeddingMagic, 4);
  put_u32(out, kEmbeddingVersion);
  put_u32(out, static_cast<std::uint32_t>(matrix.rows()));
  put_u32(out, static_cast<std::uint32_t>(matrix.cols()));
  // Row-major storage, so data() is already in file order.
  for (Eigen::Index i = 0; i < matrix.size(); ++i)
    put_u32(out, std::bit_cast<std::uint32_t>(matrix.data()[i]));
  return out;
}

EmbeddingMatrix decode_embedding(const std::string& bytes) {
  if (bytes.size() < kEmbeddingHeaderBytes) throw EmbeddingFormatError("truncated header");
  if (std::memcmp(bytes.data(), kEmbeddingMagic, 4) != 0) throw EmbeddingFormatError("bad magic");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kEmbeddingVersion)
    throw EmbeddingFormatError("unsupported version " + std::to_string(version));
  const std::uint64_t rows = get_u32(bytes, 8);
  const std::uint64_t cols = get_u32(bytes, 12);
  if (cols < 1) throw EmbeddingFormatError("embedding dimension must be >= 1");
  const std::uint64_t payload = rows * cols * 4;
  if (bytes.size() - kEmbeddingHeaderBytes < payload)
    throw EmbeddingFormatError("truncated payload: header declares " + std::to_string(rows) +
                               "x" + std::to_string(cols));
  EmbeddingMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = std::bit_cast<float>(get_u32(bytes, kEmbeddingHeaderBytes + 4 * i));
  if (!m.allFinite()) throw EmbeddingFormatError("embedding contains non-finite values");
  return m;
}

EmbeddingMatrix read_embedding(const std::filesystem::path& path) {
  try {
    return decode_embedding(read_file(path));
  } catch (const EmbeddingFormatError& e) {
    throw EmbeddingFormatError(path.string() + ": " + e.what());
  }
}

void write_embedding(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  const std::string bytes = encode_embedding(matrix);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

EmbeddingMatrix EmbeddingRef::load() const {
  if (data_) return *data_;
  if (path_.empty()) throw DataError("unresolved embedding reference");
  return read_embedding(path_);
}

std::vector<PromptRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  const auto base = path.parent_path();
  std::vector<PromptRecord> records;
  std::set<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    PromptRecord rec = parse_record(text, line, base);
    if (!seen.insert(rec.prompt_id).second)
      throw ManifestError(line, "duplicate prompt_id '" + rec.prompt_id + "'");
    records.push_back(std::move(rec));
  }
  return records;
}

void write_manifest(const std::vector<PromptRecord>& records,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (const auto& rec : records) out << to_json(rec).dump() << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

void write_dataset(const std::vector<PromptRecord>& records,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& rec : records) {
    for (const auto& r : rec.responses) {
      const auto blob = dir / r.embedding_file;
      std::filesystem::create_directories(blob.parent_path());
      write_embedding(r.embedding.load(), blob);
    }
  }
  write_manifest(records, dir / "manifest.jsonl");
}

}  // namespace wdhd
