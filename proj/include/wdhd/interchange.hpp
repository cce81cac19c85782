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

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace wdhd {

// Hidden states of the retained continuation tokens of one response, one
// token per row. Stored as binary32 so blobs round-trip bit-exactly.
using EmbeddingMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Double-precision point cloud used by every numerical routine.
using PointCloud = Eigen::MatrixXd;

inline constexpr char kEmbeddingMagic[4] = {'W', 'D', 'E', 'M'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderBytes = 16;

EmbeddingMatrix read_embedding(const std::filesystem::path& path);
void write_embedding(const EmbeddingMatrix& matrix,
                     const std::filesystem::path& path);

// Serialized blob bytes; write_embedding writes exactly this.
std::string encode_embedding(const EmbeddingMatrix& matrix);
EmbeddingMatrix decode_embedding(const std::string& bytes);

// Either a file on disk (resolved lazily) or an in-memory matrix.
class EmbeddingRef {
 public:
  EmbeddingRef() = default;
  explicit EmbeddingRef(std::filesystem::path path) : path_(std::move(path)) {}
  explicit EmbeddingRef(EmbeddingMatrix matrix)
      : data_(std::make_shared<const EmbeddingMatrix>(std::move(matrix))) {}

  // Reads the file on every call unless the matrix is held in memory.
  EmbeddingMatrix load() const;

  const std::filesystem::path& path() const { return path_; }
  bool in_memory() const { return data_ != nullptr; }

 private:
  std::filesystem::path path_;
  std::shared_ptr<const EmbeddingMatrix> data_;
};

struct ResponseSample {
  std::string response_id;
  std::string text;
  // Manifest-relative file name, as written in the manifest.
  std::string embedding_file;
  EmbeddingRef embedding;
  std::optional<std::vector<double>> token_logprobs;
};

struct PromptRecord {
  std::string prompt_id;
  std::string prompt_text;
  std::vector<ResponseSample> responses;
  std::optional<std::string> reference;
  std::optional<int> label;  // 0 faithful, 1 hallucinated
  std::map<std::string, std::string> metadata;

  std::size_t k() const { return responses.size(); }
};

// Parses a JSONL manifest. Embedding files are resolved relative to the
// manifest's directory and must exist; their contents are read on demand.
std::vector<PromptRecord> read_manifest(const std::filesystem::path& path);

// Writes records as JSONL. Embeddings are not written; callers emit blobs
// separately (see write_dataset).
void write_manifest(const std::vector<PromptRecord>& records,
                    const std::filesystem::path& path);

// Writes manifest.jsonl plus every in-memory embedding under `dir`, using each
// response's embedding_file as the relative blob path.
void write_dataset(const std::vector<PromptRecord>& records,
                   const std::filesystem::path& dir);

}  // namespace wdhd
