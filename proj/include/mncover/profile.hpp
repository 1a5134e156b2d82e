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

#ifndef MNCOVER_PROFILE_HPP_
#define MNCOVER_PROFILE_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "mncover/binary_io.hpp"
#include "mncover/error.hpp"

namespace mncover {

inline constexpr std::size_t kDefaultBins = 10;
inline constexpr double kDefaultLambda = 1.0;

// Static shape of an instrumented model. word_layers counts the embedding
// output as a layer, so a BERT-base profile has word_layers = 13 and
// attn_layers = 12.
struct ModelProfile {
  std::uint32_t word_layers = 1;
  std::uint32_t attn_layers = 1;
  std::uint32_t heads = 1;
  std::uint32_t hidden = 1;
  std::uint32_t max_len = 1;
  std::uint32_t vocab_size = 1;
  std::uint32_t bins = kDefaultBins;
  double lambda = kDefaultLambda;

  friend bool operator==(const ModelProfile&, const ModelProfile&) = default;
};

struct NeuronCounts {
  std::uint64_t word_neurons = 0;
  std::uint64_t attn_neurons = 0;
  std::uint64_t total_bins = 0;

  std::uint64_t word_bins(std::uint32_t bins) const {
    return word_neurons * bins;
  }
  std::uint64_t attn_bins(std::uint32_t bins) const {
    return attn_neurons * bins;
  }

  friend bool operator==(const NeuronCounts&, const NeuronCounts&) = default;
};

namespace detail {

inline std::uint64_t CheckedMul(std::uint64_t a, std::uint64_t b,
                                std::string_view dimension) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
    throw Error(ErrorCode::kOverflow,
                "neuron count overflows 64 bits at dimension " +
                    std::string(dimension));
  }
  return a * b;
}

inline std::uint64_t CheckedAdd(std::uint64_t a, std::uint64_t b,
                                std::string_view dimension) {
  if (b > std::numeric_limits<std::uint64_t>::max() - a) {
    throw Error(ErrorCode::kOverflow,
                "neuron count overflows 64 bits at dimension " +
                    std::string(dimension));
  }
  return a + b;
}

}  // namespace detail

inline void Validate(const ModelProfile& p) {
  auto require_positive = [](std::uint32_t v, std::string_view name) {
    if (v == 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "profile field " + std::string(name) + " must be >= 1");
    }
  };
  require_positive(p.word_layers, "word_layers");
  require_positive(p.attn_layers, "attn_layers");
  require_positive(p.heads, "heads");
  require_positive(p.hidden, "hidden");
  require_positive(p.max_len, "max_len");
  require_positive(p.vocab_size, "vocab_size");
  require_positive(p.bins, "bins");
  if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda)) {
    throw Error(ErrorCode::kInvalidArgument,
                "profile field lambda must be finite and >= 0");
  }
}

// L*E*D_w word neurons, L*L*H*D_a attention neurons and
// (word + attention) * B bins, each product checked for overflow.
inline NeuronCounts CountNeurons(const ModelProfile& p) {
  Validate(p);
  using detail::CheckedMul;
  NeuronCounts c;
  c.word_neurons = CheckedMul(
      CheckedMul(p.max_len, p.hidden, "hidden"), p.word_layers, "word_layers");
  c.attn_neurons = CheckedMul(
      CheckedMul(CheckedMul(p.max_len, p.max_len, "max_len"), p.heads,
                 "heads"),
      p.attn_layers, "attn_layers");
  c.total_bins = CheckedMul(
      detail::CheckedAdd(c.word_neurons, c.attn_neurons, "attn_neurons"),
      p.bins, "bins");
  return c;
}

inline nlohmann::json ToJson(const ModelProfile& p) {
  // nlohmann::json objects keep keys sorted, which makes dump() canonical.
  return nlohmann::json{{"word_layers", p.word_layers},
                        {"attn_layers", p.attn_layers},
                        {"heads", p.heads},
                        {"hidden", p.hidden},
                        {"max_len", p.max_len},
                        {"vocab_size", p.vocab_size},
                        {"bins", p.bins},
                        {"lambda", p.lambda}};
}

inline ModelProfile ProfileFromJson(const nlohmann::json& j) {
  ModelProfile p;
  try {
    p.word_layers = j.at("word_layers").get<std::uint32_t>();
    p.attn_layers = j.at("attn_layers").get<std::uint32_t>();
    p.heads = j.at("heads").get<std::uint32_t>();
    p.hidden = j.at("hidden").get<std::uint32_t>();
    p.max_len = j.at("max_len").get<std::uint32_t>();
    p.vocab_size = j.at("vocab_size").get<std::uint32_t>();
    p.bins = j.at("bins").get<std::uint32_t>();
    p.lambda = j.at("lambda").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat,
                std::string("malformed model profile: ") + e.what());
  }
  Validate(p);
  return p;
}

// Sorted keys, no whitespace.
inline std::string CanonicalJson(const ModelProfile& p) {
  return ToJson(p).dump();
}

inline std::uint64_t Digest(const ModelProfile& p) {
  return Fnv1a(CanonicalJson(p));
}

}  // namespace mncover

#endif  // MNCOVER_PROFILE_HPP_
