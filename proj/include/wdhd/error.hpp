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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wdhd {

// Caller supplied something malformed: bad shapes, bad config, bad flags.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Problems with input data on disk (manifest, blobs).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ManifestError : public DataError {
 public:
  ManifestError(std::size_t line, const std::string& what)
      : DataError("manifest line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class EmbeddingFormatError : public DataError {
 public:
  using DataError::DataError;
};

// A response with zero retained tokens; W2 against it is undefined.
class EmptySupport : public DataError {
 public:
  explicit EmptySupport(std::string prompt_id = {}, std::string response_id = {})
      : DataError("empty support: prompt '" + prompt_id + "' response '" +
                  response_id + "'"),
        prompt_id_(std::move(prompt_id)),
        response_id_(std::move(response_id)) {}
  const std::string& prompt_id() const { return prompt_id_; }
  const std::string& response_id() const { return response_id_; }

 private:
  std::string prompt_id_;
  std::string response_id_;
};

class MissingLogprobs : public DataError {
 public:
  explicit MissingLogprobs(const std::string& prompt_id)
      : DataError("missing token log-probabilities for prompt '" + prompt_id +
                  "'") {}
};

// Internal numerical failure (simplex did not converge etc). Indicates a bug,
// not a data condition.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wdhd
