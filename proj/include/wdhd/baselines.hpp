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
#include <string>
#include <string_view>
#include <vector>

#include "wdhd/interchange.hpp"

namespace wdhd {

// ROUGE tokenizer: lowercase, split on Unicode whitespace, drop ASCII
// punctuation characters, discard tokens that end up empty.
std::vector<std::string> rouge_tokens(std::string_view text);

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

// ROUGE-L F-measure; 0 when either side has no tokens.
double rouge_l(std::string_view candidate, std::string_view reference);

// Row i = mean of response i's (projected) token embeddings.
Eigen::MatrixXd sentence_embeddings(const std::vector<PointCloud>& clouds);

// exp of the entropy of the normalized singular values of the row-centered
// matrix; 1 when the centered matrix vanishes.
double effective_rank(const Eigen::MatrixXd& sentences);

// Mean log of regularized eigenvalues of the centered Gram matrix
// (1/d) S_c S_c^T.
double eigenscore(const Eigen::MatrixXd& sentences, double reg = 1e-3);

// Average per-token negative log-probability over responses. Throws
// MissingLogprobs if any response lacks log-probabilities.
double length_normalized_entropy(const PromptRecord& record);

// Mean pairwise ROUGE-L over unordered response pairs.
double lexical_similarity(const PromptRecord& record);

// 1 - lexical_similarity, so higher means more likely hallucinated.
double lexical_similarity_score(const PromptRecord& record);

}  // namespace wdhd
