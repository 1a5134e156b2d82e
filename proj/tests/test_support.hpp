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

// Shared fixtures and brute-force oracles for the test suites. The oracles
// only use the public data layout of traces and never call into the coverage
// engine, the binning function or the neuron linearization.

#ifndef MNCOVER_TESTS_TEST_SUPPORT_HPP_
#define MNCOVER_TESTS_TEST_SUPPORT_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <unistd.h>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "mncover/mncover.hpp"

namespace mncover::testing {

// L=8, E=4, word_layers=3, attn_layers=2, H=2, B=5.
inline ModelProfile TinyProfile(std::uint32_t vocab = 50) {
  ModelProfile p;
  p.word_layers = 3;
  p.attn_layers = 2;
  p.heads = 2;
  p.hidden = 4;
  p.max_len = 8;
  p.vocab_size = vocab;
  p.bins = 5;
  p.lambda = 1.0;
  return p;
}

inline TinyModelConfig TinyModelFor(const ModelProfile& p, std::uint64_t seed) {
  TinyModelConfig c;
  c.vocab_size = p.vocab_size;
  c.hidden = p.hidden;
  c.heads = p.heads;
  c.layers = p.attn_layers;
  c.max_len = p.max_len;
  c.seed = seed;
  return c;
}

// Random trace with word activations in [-2, 2) and softmax-normalized
// attention rows. |length| of 0 draws a length in [1, max_len].
inline ActivationTrace RandomTrace(const ModelProfile& p, SplitMix64& rng,
                                   std::uint64_t id, std::size_t length = 0) {
  ActivationTrace t;
  t.input_id = id;
  const std::size_t n = length ? length : 1 + rng.Next() % p.max_len;
  for (std::size_t i = 0; i < n; ++i) {
    t.token_ids.push_back(static_cast<std::uint32_t>(rng.Next() % p.vocab_size));
  }
  t.word_acts.resize(WordActCount(p, n));
  for (float& v : t.word_acts) v = static_cast<float>(rng.NextUnit() * 4.0 - 2.0);
  t.attn_acts.resize(AttnActCount(p, n));
  for (std::size_t row = 0; row * n < t.attn_acts.size(); ++row) {
    double sum = 0.0;
    std::vector<double> raw(n);
    for (auto& r : raw) {
      r = rng.NextUnit() + 1e-3;
      sum += r;
    }
    for (std::size_t j = 0; j < n; ++j) {
      t.attn_acts[row * n + j] = static_cast<float>(raw[j] / sum);
    }
  }
  return t;
}

inline std::vector<ActivationTrace> RandomTraces(const ModelProfile& p,
                                                 std::size_t count,
                                                 std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<ActivationTrace> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(RandomTrace(p, rng, i));
  return out;
}

// Bin by scanning section edges: the largest k with
// (v - lo) * B >= k * (hi - lo).
inline std::uint32_t EdgeScanBin(double v, double lo, double hi,
                                 std::uint32_t bins) {
  if (!(hi > lo)) return 0;
  std::uint32_t b = 0;
  for (std::uint32_t k = 1; k < bins; ++k) {
    if ((v - lo) * bins >= k * (hi - lo)) b = k;
  }
  return b;
}

// (kind, layer, a, b, c, bin): word keys use (layer, t, d, 0), attention
// keys (layer, head, i, j).
using BinKey = std::tuple<int, std::uint32_t, std::uint32_t, std::uint32_t,
                          std::uint32_t, std::uint32_t, std::uint32_t>;

struct OracleBins {
  std::set<BinKey> all;
  std::set<BinKey> masked;
};

// Naive per-neuron ranges: first pass collects every value per neuron key,
// second pass takes min/max.
struct OracleRanges {
  std::map<std::tuple<int, std::uint32_t, std::uint32_t, std::uint32_t,
                      std::uint32_t>,
           std::pair<float, float>>
      by_key;
};

inline OracleRanges NaiveRanges(const ModelProfile& p,
                                const std::vector<ActivationTrace>& traces) {
  std::map<std::tuple<int, std::uint32_t, std::uint32_t, std::uint32_t,
                      std::uint32_t>,
           std::vector<float>>
      values;
  for (const auto& tr : traces) {
    const std::size_t n = tr.length();
    for (std::uint32_t l = 0; l < p.word_layers; ++l)
      for (std::uint32_t t = 0; t < n; ++t)
        for (std::uint32_t d = 0; d < p.hidden; ++d)
          values[{0, l, t, d, 0}].push_back(
              tr.word_acts[(l * n + t) * p.hidden + d]);
    for (std::uint32_t l = 0; l < p.attn_layers; ++l)
      for (std::uint32_t k = 0; k < p.heads; ++k)
        for (std::uint32_t i = 0; i < n; ++i)
          for (std::uint32_t j = 0; j < n; ++j)
            values[{1, l, k, i, j}].push_back(
                tr.attn_acts[((l * p.heads + k) * n + i) * n + j]);
  }
  OracleRanges r;
  for (const auto& [key, vs] : values) {
    float lo = vs[0], hi = vs[0];
    for (float v : vs) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    r.by_key[key] = {lo, hi};
  }
  return r;
}

// Enumerates every activated (neuron, bin) pair of every trace into sets.
// Ranges come from |ranges| looked up with an independent index formula.
inline OracleBins EnumerateBins(const ModelProfile& p, const NeuronRanges& ranges,
                                const std::vector<ActivationTrace>& traces,
                                const MaskPair* masks = nullptr) {
  OracleBins out;
  for (const auto& tr : traces) {
    const std::size_t n = tr.length();
    for (std::uint32_t l = 0; l < p.word_layers; ++l) {
      for (std::uint32_t t = 0; t < n; ++t) {
        for (std::uint32_t d = 0; d < p.hidden; ++d) {
          const std::size_t neuron = std::size_t{l} * p.max_len * p.hidden +
                                     std::size_t{t} * p.hidden + d;
          const float v = tr.word_acts[(l * n + t) * p.hidden + d];
          const std::uint32_t b = EdgeScanBin(v, ranges.word_lo[neuron],
                                              ranges.word_hi[neuron], p.bins);
          BinKey key{0, l, t, d, 0, b, 0};
          out.all.insert(key);
          if (!masks || masks->WordGate(tr.token_ids[t])) out.masked.insert(key);
        }
      }
    }
    for (std::uint32_t l = 0; l < p.attn_layers; ++l) {
      for (std::uint32_t k = 0; k < p.heads; ++k) {
        for (std::uint32_t i = 0; i < n; ++i) {
          for (std::uint32_t j = 0; j < n; ++j) {
            const std::size_t neuron =
                std::size_t{l} * p.heads * p.max_len * p.max_len +
                std::size_t{k} * p.max_len * p.max_len +
                std::size_t{i} * p.max_len + j;
            const float v = tr.attn_acts[((l * p.heads + k) * n + i) * n + j];
            const std::uint32_t b = EdgeScanBin(v, ranges.attn_lo[neuron],
                                                ranges.attn_hi[neuron], p.bins);
            BinKey key{1, l, k, i, j, b, 0};
            out.all.insert(key);
            if (!masks ||
                masks->PairGate(tr.token_ids[i], tr.token_ids[j])) {
              out.masked.insert(key);
            }
          }
        }
      }
    }
  }
  return out;
}

// Converts engine bit sets back into keys.
inline std::set<BinKey> KeysOf(const BitSet& word_bits, const BitSet& attn_bits,
                               const ModelProfile& p) {
  std::set<BinKey> keys;
  for (std::size_t bit = 0; bit < word_bits.size(); ++bit) {
    if (!word_bits.test(bit)) continue;
    const auto k = std::get<WordNeuron>(
        Delinearize(bit / p.bins, NeuronKind::kWord, p));
    keys.insert({0, k.layer, k.position, k.dim, 0,
                 static_cast<std::uint32_t>(bit % p.bins), 0});
  }
  for (std::size_t bit = 0; bit < attn_bits.size(); ++bit) {
    if (!attn_bits.test(bit)) continue;
    const auto k = std::get<AttentionNeuron>(
        Delinearize(bit / p.bins, NeuronKind::kAttention, p));
    keys.insert({1, k.layer, k.head, k.i, k.j,
                 static_cast<std::uint32_t>(bit % p.bins), 0});
  }
  return keys;
}

// Scratch file under the system temp dir, removed on destruction.
class TempFile {
 public:
  explicit TempFile(const std::string& stem) {
    static int counter = 0;
    path_ = (std::filesystem::temp_directory_path() /
             ("mncover_test_" + std::to_string(::getpid()) + "_" +
              std::to_string(counter++) + "_" + stem))
                .string();
  }
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

inline std::string ReadBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Sentences over the bundled synonym, name and contraction vocabularies so
// every builtin transformation has something to rewrite.
inline TestSuite SentenceSuite(std::size_t count, std::uint32_t vocab,
                               std::size_t max_words, std::uint64_t seed) {
  static const std::vector<std::string> kWords = {
      "the", "movie", "was", "good", "and", "John", "did", "not", "like",
      "it", "in", "Paris", "a", "boring", "story", "with", "funny", "actor",
      "i", "am", "very", "happy", "is", "bad", "3", "big", "quick", "show"};
  HashTokenizer tok(vocab);
  SplitMix64 rng(seed);
  TestSuite suite;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t n = 3 + rng.Next() % (max_words - 2);
    Words w;
    for (std::size_t k = 0; k < n; ++k) w.push_back(kWords[rng.Next() % kWords.size()]);
    TestInput in;
    in.id = i;
    in.text = JoinWords(w);
    in.tokens = tok.Encode(w);
    suite.Add(std::move(in));
  }
  return suite;
}

}  // namespace mncover::testing

#endif  // MNCOVER_TESTS_TEST_SUPPORT_HPP_
