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

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "test_util.hpp"
#include "wdhd/error.hpp"

namespace wdhd {
namespace {

using testing::slurp;
using testing::spit;
using testing::TempDir;

EmbeddingMatrix distinct(Eigen::Index m, Eigen::Index d) {
  EmbeddingMatrix z(m, d);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = 0.25f * float(i) - 1.5f;
  return z;
}

TEST(EmbeddingBlob, RoundTripsSmallMatrix) {
  TempDir dir;
  const EmbeddingMatrix z = distinct(3, 4);
  write_embedding(z, dir / "a.wdem");
  EXPECT_EQ(read_embedding(dir / "a.wdem"), z);
}

TEST(EmbeddingBlob, OneByOneIsTwentyBytes) {
  TempDir dir;
  EmbeddingMatrix z(1, 1);
  z(0, 0) = 0.5f;
  write_embedding(z, dir / "one.wdem");
  const std::string bytes = slurp(dir / "one.wdem");
  ASSERT_EQ(bytes.size(), 20u);
  EXPECT_EQ(bytes.substr(0, 4), "WDEM");
  // version 1, m = 1, d = 1, little-endian
  EXPECT_EQ(bytes.substr(4, 12), std::string("\x01\0\0\0\x01\0\0\0\x01\0\0\0", 12));
  // 0.5f = 0x3F000000
  EXPECT_EQ(bytes.substr(16), std::string("\0\0\0\x3F", 4));
}

TEST(EmbeddingBlob, WritesAreDeterministic) {
  TempDir dir;
  const EmbeddingMatrix z = distinct(5, 7);
  write_embedding(z, dir / "a.wdem");
  write_embedding(z, dir / "b.wdem");
  EXPECT_EQ(slurp(dir / "a.wdem"), slurp(dir / "b.wdem"));
}

TEST(EmbeddingBlob, EmptyMatrixWithWidth) {
  TempDir dir;
  spit(dir / "e.wdem", std::string("WDEM\x01\0\0\0\0\0\0\0\x08\0\0\0", 16));
  const EmbeddingMatrix z = read_embedding(dir / "e.wdem");
  EXPECT_EQ(z.rows(), 0);
  EXPECT_EQ(z.cols(), 8);
}

TEST(EmbeddingBlob, RejectsBadMagic) {
  TempDir dir;
  spit(dir / "x.wdem", std::string("XXXX\x01\0\0\0\0\0\0\0\x08\0\0\0", 16));
  EXPECT_THROW(read_embedding(dir / "x.wdem"), EmbeddingFormatError);
}

TEST(EmbeddingBlob, RejectsVersionMismatch) {
  std::string bytes = encode_embedding(distinct(2, 2));
  bytes[4] = 2;
  EXPECT_THROW(decode_embedding(bytes), EmbeddingFormatError);
}

TEST(EmbeddingBlob, RejectsTruncatedPayload) {
  std::string bytes = encode_embedding(distinct(2, 3));
  bytes.resize(bytes.size() - 1);
  EXPECT_THROW(decode_embedding(bytes), EmbeddingFormatError);
}

TEST(EmbeddingBlob, RejectsNaNOnWrite) {
  TempDir dir;
  EmbeddingMatrix z = distinct(2, 2);
  z(1, 0) = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(write_embedding(z, dir / "n.wdem"), InvalidArgument);
}

TEST(EmbeddingBlob, RandomRoundTripIsBitExact) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> rows(0, 64), cols(1, 256);
  std::uniform_int_distribution<std::uint32_t> bits;
  for (int trial = 0; trial < 50; ++trial) {
    EmbeddingMatrix z(rows(rng), cols(rng));
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      float f;
      do {
        const std::uint32_t b = bits(rng);
        std::memcpy(&f, &b, 4);
      } while (!std::isfinite(f));
      z.data()[i] = f;
    }
    const EmbeddingMatrix back = decode_embedding(encode_embedding(z));
    ASSERT_EQ(back.rows(), z.rows());
    ASSERT_EQ(back.cols(), z.cols());
    ASSERT_EQ(std::memcmp(back.data(), z.data(), sizeof(float) * z.size()), 0);
  }
}

class ManifestTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::filesystem::create_directories(dir_ / "emb");
    write_embedding(distinct(2, 3), dir_ / "emb/a.wdem");
  }
  std::filesystem::path manifest(const std::string& text) {
    spit(dir_ / "manifest.jsonl", text);
    return dir_ / "manifest.jsonl";
  }
  TempDir dir_;
};

const char* kTwoResponseLine =
    R"({"prompt_id":"q1","prompt_text":"What?","reference":"yes","label":null,)"
    R"("metadata":{"dataset":"toy","model":"m"},"responses":[)"
    R"({"response_id":"r0","text":"yes","embedding_file":"emb/a.wdem","token_logprobs":[-0.5,0]},)"
    R"({"response_id":"r1","text":"no","embedding_file":"emb/a.wdem","token_logprobs":null}]})";

TEST_F(ManifestTest, ParsesTwoResponses) {
  const auto recs = read_manifest(manifest(std::string(kTwoResponseLine) + "\n"));
  ASSERT_EQ(recs.size(), 1u);
  const auto& r = recs[0];
  EXPECT_EQ(r.prompt_id, "q1");
  EXPECT_EQ(r.k(), 2u);
  EXPECT_EQ(r.reference.value(), "yes");
  EXPECT_FALSE(r.label.has_value());
  EXPECT_EQ(r.metadata.at("dataset"), "toy");
  ASSERT_TRUE(r.responses[0].token_logprobs.has_value());
  EXPECT_EQ(r.responses[0].token_logprobs->size(), 2u);
  EXPECT_FALSE(r.responses[1].token_logprobs.has_value());
  EXPECT_EQ(r.responses[1].embedding.load(), distinct(2, 3));
}

TEST_F(ManifestTest, EmptyFileGivesNoRecords) {
  EXPECT_TRUE(read_manifest(manifest("")).empty());
}

TEST_F(ManifestTest, MissingResponsesNamesLineOne) {
  try {
    read_manifest(manifest(R"({"prompt_id":"q1","prompt_text":"x"})"
                           "\n"));
    FAIL() << "expected ManifestError";
  } catch (const ManifestError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_NE(std::string(e.what()).find("responses"), std::string::npos);
  }
}

TEST_F(ManifestTest, MalformedJsonReportsLine) {
  try {
    read_manifest(manifest(std::string(kTwoResponseLine) + "\n{not json\n"));
    FAIL() << "expected ManifestError";
  } catch (const ManifestError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST_F(ManifestTest, DanglingEmbeddingReference) {
  std::string line = kTwoResponseLine;
  line.replace(line.find("emb/a.wdem"), 10, "emb/zz.wdem");
  EXPECT_THROW(read_manifest(manifest(line)), ManifestError);
}

TEST_F(ManifestTest, DuplicatePromptId) {
  const std::string line = kTwoResponseLine;
  EXPECT_THROW(read_manifest(manifest(line + "\n" + line + "\n")), ManifestError);
}

TEST_F(ManifestTest, PositiveLogprobRejected) {
  std::string line = kTwoResponseLine;
  line.replace(line.find("-0.5"), 4, "0.25");
  EXPECT_THROW(read_manifest(manifest(line)), ManifestError);
}

TEST_F(ManifestTest, PreservesOrderAndRoundTrips) {
  std::string text;
  for (int i = 0; i < 5; ++i) {
    std::string line = kTwoResponseLine;
    line.replace(line.find("\"q1\""), 4, "\"q" + std::to_string(9 - i) + "\"");
    text += line + "\n";
  }
  const auto recs = read_manifest(manifest(text));
  ASSERT_EQ(recs.size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(recs[i].prompt_id, "q" + std::to_string(9 - i));

  write_manifest(recs, dir_ / "copy.jsonl");
  const auto again = read_manifest(dir_ / "copy.jsonl");
  ASSERT_EQ(again.size(), recs.size());
  EXPECT_EQ(again[3].prompt_id, recs[3].prompt_id);
  EXPECT_EQ(again[3].responses[0].token_logprobs, recs[3].responses[0].token_logprobs);
  EXPECT_EQ(again[3].metadata, recs[3].metadata);
}

}  // namespace
}  // namespace wdhd
