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

#ifndef MNCOVER_NEURON_KEY_HPP_
#define MNCOVER_NEURON_KEY_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "mncover/error.hpp"
#include "mncover/profile.hpp"

namespace mncover {

enum class NeuronKind { kWord, kAttention };

// One dimension of a layer's per-position output.
struct WordNeuron {
  std::uint32_t layer = 0;
  std::uint32_t position = 0;
  std::uint32_t dim = 0;

  friend bool operator==(const WordNeuron&, const WordNeuron&) = default;
};

// The attention weight from position i (attending) to position j.
struct AttentionNeuron {
  std::uint32_t layer = 0;
  std::uint32_t head = 0;
  std::uint32_t i = 0;
  std::uint32_t j = 0;

  friend bool operator==(const AttentionNeuron&,
                         const AttentionNeuron&) = default;
};

using NeuronKey = std::variant<WordNeuron, AttentionNeuron>;

namespace detail {

inline void CheckField(std::uint64_t value, std::uint64_t bound,
                       std::string_view field) {
  if (value >= bound) {
    throw Error(ErrorCode::kOutOfRange,
                "neuron key field " + std::string(field) + " = " +
                    std::to_string(value) + " is out of range [0, " +
                    std::to_string(bound) + ")");
  }
}

}  // namespace detail

// Word neurons are laid out [layer][position][dim], attention neurons
// [layer][head][i][j]; both row-major over the full max_len extent.
inline std::uint64_t Linearize(const WordNeuron& k, const ModelProfile& p) {
  detail::CheckField(k.layer, p.word_layers, "layer");
  detail::CheckField(k.position, p.max_len, "position");
  detail::CheckField(k.dim, p.hidden, "dim");
  return (std::uint64_t{k.layer} * p.max_len + k.position) * p.hidden + k.dim;
}

inline std::uint64_t Linearize(const AttentionNeuron& k,
                               const ModelProfile& p) {
  detail::CheckField(k.layer, p.attn_layers, "layer");
  detail::CheckField(k.head, p.heads, "head");
  detail::CheckField(k.i, p.max_len, "i");
  detail::CheckField(k.j, p.max_len, "j");
  return ((std::uint64_t{k.layer} * p.heads + k.head) * p.max_len + k.i) *
             p.max_len +
         k.j;
}

inline std::uint64_t Linearize(const NeuronKey& key, const ModelProfile& p) {
  return std::visit([&](const auto& k) { return Linearize(k, p); }, key);
}

inline NeuronKey Delinearize(std::uint64_t index, NeuronKind kind,
                             const ModelProfile& p) {
  const NeuronCounts counts = CountNeurons(p);
  if (kind == NeuronKind::kWord) {
    detail::CheckField(index, counts.word_neurons, "index");
    WordNeuron k;
    k.dim = static_cast<std::uint32_t>(index % p.hidden);
    index /= p.hidden;
    k.position = static_cast<std::uint32_t>(index % p.max_len);
    k.layer = static_cast<std::uint32_t>(index / p.max_len);
    return k;
  }
  detail::CheckField(index, counts.attn_neurons, "index");
  AttentionNeuron k;
  k.j = static_cast<std::uint32_t>(index % p.max_len);
  index /= p.max_len;
  k.i = static_cast<std::uint32_t>(index % p.max_len);
  index /= p.max_len;
  k.head = static_cast<std::uint32_t>(index % p.heads);
  k.layer = static_cast<std::uint32_t>(index / p.heads);
  return k;
}

}  // namespace mncover

#endif  // MNCOVER_NEURON_KEY_HPP_
