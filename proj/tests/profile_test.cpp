// Copyright 2026 The mncover Authors.
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

#include <cmath>
#include <set>

#include "gtest/gtest.h"
#include "mncover/neuron_key.hpp"
#include "mncover/profile.hpp"
#include "mncover/trace.hpp"
#include "test_support.hpp"

namespace mncover {
namespace {

ModelProfile Shape(std::uint32_t len, std::uint32_t emb, std::uint32_t dw,
                   std::uint32_t heads, std::uint32_t da, std::uint32_t bins) {
  ModelProfile p;
  p.max_len = len;
  p.hidden = emb;
  p.word_layers = dw;
  p.heads = heads;
  p.attn_layers = da;
  p.bins = bins;
  return p;
}

TEST(NeuronCountsTest, BertBaseShape) {
  const NeuronCounts c = CountNeurons(Shape(128, 768, 13, 12, 12, 10));
  EXPECT_EQ(c.word_neurons, 1277952u);
  EXPECT_EQ(c.attn_neurons, 2359296u);
  EXPECT_EQ(c.total_bins, (1277952u + 2359296u) * 10u);
}

TEST(NeuronCountsTest, UnitDimensions) {
  const NeuronCounts c = CountNeurons(Shape(1, 1, 1, 1, 1, 1));
  EXPECT_EQ(c, (NeuronCounts{1, 1, 2}));
}

TEST(NeuronCountsTest, SmallProfileMatchesKeyEnumeration) {
  const ModelProfile p = Shape(8, 4, 3, 2, 2, 5);
  std::uint64_t words = 0, attn = 0;
  for (std::uint32_t l = 0; l < p.word_layers; ++l)
    for (std::uint32_t t = 0; t < p.max_len; ++t)
      for (std::uint32_t d = 0; d < p.hidden; ++d) ++words;
  for (std::uint32_t l = 0; l < p.attn_layers; ++l)
    for (std::uint32_t k = 0; k < p.heads; ++k)
      for (std::uint32_t i = 0; i < p.max_len; ++i)
        for (std::uint32_t j = 0; j < p.max_len; ++j) ++attn;
  const NeuronCounts c = CountNeurons(p);
  EXPECT_EQ(c.word_neurons, words);
  EXPECT_EQ(c.attn_neurons, attn);
  EXPECT_EQ(c.total_bins, (words + attn) * p.bins);
  EXPECT_EQ(c, (NeuronCounts{96, 256, 1760}));
}

TEST(NeuronCountsTest, OverflowNamesDimension) {
  ModelProfile p = Shape(0xFFFFFFFFu, 0xFFFFFFFFu, 0xFFFFFFFFu, 1, 1, 1);
  try {
    CountNeurons(p);
    FAIL() << "expected overflow";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOverflow);
    EXPECT_NE(std::string(e.what()).find("word_layers"), std::string::npos);
  }
  p = Shape(1u << 16, 1, 1, 1u << 16, 1u << 16, 1);
  try {
    CountNeurons(p);
    FAIL() << "expected overflow";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOverflow);
    EXPECT_NE(std::string(e.what()).find("attn_layers"), std::string::npos);
  }
}

TEST(ProfileTest, RejectsZeroCountsAndNegativeLambda) {
  ModelProfile p = testing::TinyProfile();
  p.heads = 0;
  EXPECT_THROW(Validate(p), Error);
  p = testing::TinyProfile();
  p.lambda = -0.5;
  EXPECT_THROW(Validate(p), Error);
  p.lambda = 0.0;
  EXPECT_NO_THROW(Validate(p));
}

TEST(ProfileTest, CanonicalJsonIsSortedAndCompact) {
  const ModelProfile p = testing::TinyProfile();
  EXPECT_EQ(CanonicalJson(p),
            "{\"attn_layers\":2,\"bins\":5,\"heads\":2,\"hidden\":4,"
            "\"lambda\":1.0,\"max_len\":8,\"vocab_size\":50,"
            "\"word_layers\":3}");
  EXPECT_EQ(ProfileFromJson(nlohmann::json::parse(CanonicalJson(p))), p);
  ModelProfile q = p;
  q.lambda = 0.5;
  EXPECT_NE(Digest(p), Digest(q));
}

TEST(LinearizeTest, Boundaries) {
  const ModelProfile p = Shape(8, 4, 3, 2, 2, 5);
  EXPECT_EQ(Linearize(WordNeuron{0, 0, 0}, p), 0u);
  EXPECT_EQ(Linearize(AttentionNeuron{1, 1, 7, 7}, p),
            CountNeurons(p).attn_neurons - 1);
  EXPECT_EQ(Linearize(WordNeuron{2, 7, 3}, p), CountNeurons(p).word_neurons - 1);
}

TEST(LinearizeTest, OutOfBoundsNamesField) {
  const ModelProfile p = Shape(8, 4, 3, 2, 2, 5);
  try {
    Linearize(AttentionNeuron{0, 2, 0, 0}, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfRange);
    EXPECT_NE(std::string(e.what()).find("head"), std::string::npos);
  }
  try {
    Linearize(WordNeuron{0, 8, 0}, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("position"), std::string::npos);
  }
  EXPECT_THROW(Delinearize(96, NeuronKind::kWord, p), Error);
}

TEST(LinearizeTest, ExhaustiveBijection) {
  const ModelProfile p = Shape(8, 4, 3, 2, 2, 5);
  std::set<std::uint64_t> seen;
  for (std::uint32_t l = 0; l < p.word_layers; ++l)
    for (std::uint32_t t = 0; t < p.max_len; ++t)
      for (std::uint32_t d = 0; d < p.hidden; ++d) {
        const NeuronKey key = WordNeuron{l, t, d};
        const std::uint64_t idx = Linearize(key, p);
        EXPECT_LT(idx, CountNeurons(p).word_neurons);
        EXPECT_TRUE(seen.insert(idx).second);
        EXPECT_EQ(Delinearize(idx, NeuronKind::kWord, p), key);
      }
  EXPECT_EQ(seen.size(), CountNeurons(p).word_neurons);
  seen.clear();
  for (std::uint32_t l = 0; l < p.attn_layers; ++l)
    for (std::uint32_t k = 0; k < p.heads; ++k)
      for (std::uint32_t i = 0; i < p.max_len; ++i)
        for (std::uint32_t j = 0; j < p.max_len; ++j) {
          const NeuronKey key = AttentionNeuron{l, k, i, j};
          const std::uint64_t idx = Linearize(key, p);
          EXPECT_TRUE(seen.insert(idx).second);
          EXPECT_EQ(Delinearize(idx, NeuronKind::kAttention, p), key);
        }
  EXPECT_EQ(seen.size(), CountNeurons(p).attn_neurons);
}

TEST(LinearizeTest, RandomKeysRoundTripAtBertScale) {
  const ModelProfile p = Shape(128, 768, 13, 12, 12, 10);
  SplitMix64 rng(7);
  for (int n = 0; n < 10000; ++n) {
    const AttentionNeuron a{static_cast<std::uint32_t>(rng.Next() % 12),
                            static_cast<std::uint32_t>(rng.Next() % 12),
                            static_cast<std::uint32_t>(rng.Next() % 128),
                            static_cast<std::uint32_t>(rng.Next() % 128)};
    EXPECT_EQ(std::get<AttentionNeuron>(
                  Delinearize(Linearize(a, p), NeuronKind::kAttention, p)),
              a);
  }
}

TEST(TraceValidationTest, RejectsBadRowsAndShapes) {
  const ModelProfile p = testing::TinyProfile();
  SplitMix64 rng(3);
  ActivationTrace t = testing::RandomTrace(p, rng, 9, 4);
  EXPECT_NO_THROW(ValidateTrace(t, p));

  ActivationTrace bad = t;
  bad.attn_acts[0] += 2e-4f;
  EXPECT_THROW(ValidateTrace(bad, p), Error);

  bad = t;
  bad.attn_acts[0] += 5e-5f;
  EXPECT_NO_THROW(ValidateTrace(bad, p));

  bad = t;
  bad.token_ids[1] = p.vocab_size;
  EXPECT_THROW(ValidateTrace(bad, p), Error);

  bad = t;
  bad.word_acts.pop_back();
  try {
    ValidateTrace(bad, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProfileMismatch);
    EXPECT_NE(std::string(e.what()).find("trace 9"), std::string::npos);
  }

  bad = testing::RandomTrace(p, rng, 1, p.max_len);
  bad.token_ids.push_back(0);
  EXPECT_THROW(ValidateTrace(bad, p), Error);
}

}  // namespace
}  // namespace mncover
