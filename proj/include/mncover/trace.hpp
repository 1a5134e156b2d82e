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

#ifndef MNCOVER_TRACE_HPP_
#define MNCOVER_TRACE_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mncover/error.hpp"
#include "mncover/profile.hpp"

namespace mncover {

inline constexpr double kRowSumTolerance = 1e-4;

// One input's activations. Only the T occupied positions are stored:
//   word_acts  [layer][t][dim]       word_layers * T * hidden values
//   attn_acts  [layer][head][i][j]   attn_layers * heads * T * T values
struct ActivationTrace {
  std::uint64_t input_id = 0;
  std::vector<std::uint32_t> token_ids;
  std::vector<float> word_acts;
  std::vector<float> attn_acts;

  std::size_t length() const { return token_ids.size(); }

  friend bool operator==(const ActivationTrace&,
                         const ActivationTrace&) = default;
};

inline std::size_t WordActCount(const ModelProfile& p, std::size_t length) {
  return std::size_t{p.word_layers} * length * p.hidden;
}

inline std::size_t AttnActCount(const ModelProfile& p, std::size_t length) {
  return std::size_t{p.attn_layers} * p.heads * length * length;
}

inline float WordAct(const ActivationTrace& t, const ModelProfile& p,
                     std::size_t layer, std::size_t pos, std::size_t dim) {
  return t.word_acts[(layer * t.length() + pos) * p.hidden + dim];
}

inline float AttnAct(const ActivationTrace& t, const ModelProfile& p,
                     std::size_t layer, std::size_t head, std::size_t i,
                     std::size_t j) {
  const std::size_t n = t.length();
  return t.attn_acts[((layer * p.heads + head) * n + i) * n + j];
}

// Checks shape, vocabulary bounds, finiteness and that every attention row
// is a probability distribution within |row_tolerance|.
inline void ValidateTrace(const ActivationTrace& t, const ModelProfile& p,
                          double row_tolerance = kRowSumTolerance) {
  const std::string id = std::to_string(t.input_id);
  const std::size_t n = t.length();
  if (n > p.max_len) {
    throw Error(ErrorCode::kProfileMismatch,
                "trace " + id + ": length " + std::to_string(n) +
                    " exceeds max_len " + std::to_string(p.max_len));
  }
  for (std::uint32_t tok : t.token_ids) {
    if (tok >= p.vocab_size) {
      throw Error(ErrorCode::kProfileMismatch,
                  "trace " + id + ": token id " + std::to_string(tok) +
                      " >= vocab_size " + std::to_string(p.vocab_size));
    }
  }
  if (t.word_acts.size() != WordActCount(p, n)) {
    throw Error(ErrorCode::kProfileMismatch,
                "trace " + id + ": expected " +
                    std::to_string(WordActCount(p, n)) +
                    " word activations, got " +
                    std::to_string(t.word_acts.size()));
  }
  if (t.attn_acts.size() != AttnActCount(p, n)) {
    throw Error(ErrorCode::kProfileMismatch,
                "trace " + id + ": expected " +
                    std::to_string(AttnActCount(p, n)) +
                    " attention values, got " +
                    std::to_string(t.attn_acts.size()));
  }
  for (float v : t.word_acts) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "trace " + id + ": non-finite word activation");
    }
  }
  for (std::size_t row = 0; row * n < t.attn_acts.size(); ++row) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const float v = t.attn_acts[row * n + j];
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "trace " + id + ": non-finite attention value");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > row_tolerance) {
      throw Error(ErrorCode::kInvalidArgument,
                  "trace " + id + ": attention row " + std::to_string(row) +
                      " sums to " + std::to_string(sum));
    }
  }
}

}  // namespace mncover

#endif  // MNCOVER_TRACE_HPP_
