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

#include "wdhd/baselines.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

#include "wdhd/error.hpp"
#include "wdhd/jacobi.hpp"

namespace wdhd {

namespace {

// Byte length of a Unicode whitespace sequence starting at `s[i]`, or 0.
std::size_t whitespace_at(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  if (c == ' ' || (c >= '\t' && c <= '\r')) return 1;
  auto byte = [&](std::size_t k) {
    return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) : 0u;
  };
  if (c == 0xC2 && (byte(1) == 0x85 || byte(1) == 0xA0)) return 2;  // NEL, NBSP
  if (c == 0xE1 && byte(1) == 0x9A && byte(2) == 0x80) return 3;    // U+1680
  if (c == 0xE2 && byte(1) == 0x80) {
    const unsigned t = byte(2);
    if ((t >= 0x80 && t <= 0x8A) || t == 0xA8 || t == 0xA9 || t == 0xAF) return 3;
  }
  if (c == 0xE2 && byte(1) == 0x81 && byte(2) == 0x9F) return 3;  // U+205F
  if (c == 0xE3 && byte(1) == 0x80 && byte(2) == 0x80) return 3;  // U+3000
  return 0;
}

Eigen::MatrixXd centered(const Eigen::MatrixXd& s) {
  return s.rowwise() - s.colwise().mean();
}

}  // namespace

std::vector<std::string> rouge_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size();) {
    if (const std::size_t w = whitespace_at(text, i)) {
      flush();
      i += w;
      continue;
    }
    const auto c = static_cast<unsigned char>(text[i]);
    if (c < 0x80 && std::ispunct(c)) {
      ++i;
      continue;
    }
    current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    ++i;
  }
  flush();
  return tokens;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(std::string_view candidate, std::string_view reference) {
  const auto c = rouge_tokens(candidate);
  const auto r = rouge_tokens(reference);
  if (c.empty() || r.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(c, r));
  if (lcs == 0.0) return 0.0;
  const double precision = lcs / double(c.size());
  const double recall = lcs / double(r.size());
  return 2.0 * precision * recall / (precision + recall);
}

Eigen::MatrixXd sentence_embeddings(const std::vector<PointCloud>& clouds) {
  if (clouds.empty()) throw InvalidArgument("sentence_embeddings: no responses");
  Eigen::MatrixXd s(static_cast<Eigen::Index>(clouds.size()), clouds.front().cols());
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    if (clouds[i].rows() == 0) throw EmptySupport();
    if (clouds[i].cols() != s.cols()) throw InvalidArgument("sentence_embeddings: width mismatch");
    s.row(static_cast<Eigen::Index>(i)) = clouds[i].colwise().mean();
  }
  return s;
}

double effective_rank(const Eigen::MatrixXd& sentences) {
  if (sentences.rows() < 2) throw InvalidArgument("effective_rank needs K >= 2");
  const Eigen::MatrixXd c = centered(sentences);
  if (c.cwiseAbs().maxCoeff() == 0.0) return 1.0;
  const Eigen::VectorXd sigma = Eigen::JacobiSVD<Eigen::MatrixXd>(c).singularValues();
  const double total = sigma.sum();
  double entropy = 0.0;
  for (double s : sigma) {
    const double q = s / total;
    if (q > 0.0) entropy -= q * std::log(q);
  }
  return std::exp(entropy);
}

double eigenscore(const Eigen::MatrixXd& sentences, double reg) {
  if (sentences.rows() < 2) throw InvalidArgument("eigenscore needs K >= 2");
  if (!(reg > 0.0)) throw InvalidArgument("eigenscore regularizer must be > 0");
  const Eigen::MatrixXd c = centered(sentences);
  const Eigen::MatrixXd gram = (c * c.transpose()) / double(c.cols());
  const Eigen::VectorXd lambda = jacobi_eigen(gram).eigenvalues;
  double sum = 0.0;
  for (double l : lambda) sum += std::log(std::max(l, 0.0) + reg);
  return sum / double(lambda.size());
}

double length_normalized_entropy(const PromptRecord& record) {
  if (record.responses.empty()) throw InvalidArgument("length_normalized_entropy: no responses");
  double total = 0.0;
  for (const auto& r : record.responses) {
    if (!r.token_logprobs || r.token_logprobs->empty()) throw MissingLogprobs(record.prompt_id);
    double s = 0.0;
    for (double lp : *r.token_logprobs) s += lp;
    total += s / double(r.token_logprobs->size());
  }
  return -total / double(record.responses.size());
}

double lexical_similarity(const PromptRecord& record) {
  const std::size_t k = record.responses.size();
  if (k < 2) throw InvalidArgument("lexical_similarity needs K >= 2");
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j)
      sum += rouge_l(record.responses[i].text, record.responses[j].text);
  return 2.0 * sum / (double(k) * double(k - 1));
}

double lexical_similarity_score(const PromptRecord& record) {
  return 1.0 - lexical_similarity(record);
}

}  // namespace wdhd
