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

#ifndef MNCOVER_CALIBRATION_HPP_
#define MNCOVER_CALIBRATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ranges>
#include <string>
#include <vector>

#include "mncover/binary_io.hpp"
#include "mncover/bitset.hpp"
#include "mncover/error.hpp"
#include "mncover/profile.hpp"
#include "mncover/trace.hpp"

namespace mncover {

enum class AttentionRange {
  kCalibrated,  // min/max over the calibration corpus
  kUnit,        // fixed [0, 1]
};

// Per-neuron [lo, hi] intervals in linearized neuron order. Neurons never
// seen during calibration carry [0, 0] and a cleared observed bit.
struct NeuronRanges {
  std::uint64_t profile_digest = 0;
  std::vector<float> word_lo, word_hi;
  std::vector<float> attn_lo, attn_hi;
  BitSet word_observed;
  BitSet attn_observed;

  friend bool operator==(const NeuronRanges&, const NeuronRanges&) = default;
};

// Equal-width section index of |value| over [lo, hi]. Values below lo land in
// section 0, values at or above hi in section bins-1, and a degenerate
// interval (lo >= hi) puts everything in section 0.
inline std::uint32_t BinOf(double value, double lo, double hi,
                           std::uint32_t bins) {
  if (bins <= 1 || !(hi > lo) || !(value > lo)) return 0;
  if (value >= hi) return bins - 1;
  const double scaled = (value - lo) * bins / (hi - lo);
  const auto b = static_cast<std::uint32_t>(scaled);
  return std::min(b, bins - 1);
}

// Streaming min/max accumulator. Partial accumulators over disjoint shards
// merge in any order to the same result.
class RangeAccumulator {
 public:
  RangeAccumulator(const ModelProfile& profile,
                   AttentionRange attention = AttentionRange::kCalibrated)
      : profile_(profile), attention_(attention) {
    const NeuronCounts c = CountNeurons(profile);
    constexpr float kInf = std::numeric_limits<float>::infinity();
    word_lo_.assign(c.word_neurons, kInf);
    word_hi_.assign(c.word_neurons, -kInf);
    word_seen_ = BitSet(c.word_neurons);
    if (attention_ == AttentionRange::kCalibrated) {
      attn_lo_.assign(c.attn_neurons, kInf);
      attn_hi_.assign(c.attn_neurons, -kInf);
      attn_seen_ = BitSet(c.attn_neurons);
    }
  }

  const ModelProfile& profile() const { return profile_; }
  std::size_t traces_seen() const { return traces_; }

  void Add(const ActivationTrace& trace) {
    ValidateTrace(trace, profile_);
    const ModelProfile& p = profile_;
    const std::size_t n = trace.length();
    for (std::size_t l = 0; l < p.word_layers; ++l) {
      for (std::size_t t = 0; t < n; ++t) {
        const std::size_t base = (l * p.max_len + t) * p.hidden;
        const float* src = &trace.word_acts[(l * n + t) * p.hidden];
        for (std::size_t d = 0; d < p.hidden; ++d) {
          Update(word_lo_, word_hi_, word_seen_, base + d, src[d]);
        }
      }
    }
    if (attention_ == AttentionRange::kCalibrated) {
      for (std::size_t lh = 0; lh < std::size_t{p.attn_layers} * p.heads;
           ++lh) {
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t base = (lh * p.max_len + i) * p.max_len;
          const float* src = &trace.attn_acts[(lh * n + i) * n];
          for (std::size_t j = 0; j < n; ++j) {
            Update(attn_lo_, attn_hi_, attn_seen_, base + j, src[j]);
          }
        }
      }
    }
    ++traces_;
  }

  void Merge(const RangeAccumulator& other) {
    if (other.profile_ != profile_ || other.attention_ != attention_) {
      throw Error(ErrorCode::kProfileMismatch,
                  "cannot merge range accumulators with different profiles");
    }
    MergeArrays(word_lo_, word_hi_, other.word_lo_, other.word_hi_);
    word_seen_.merge(other.word_seen_);
    if (attention_ == AttentionRange::kCalibrated) {
      MergeArrays(attn_lo_, attn_hi_, other.attn_lo_, other.attn_hi_);
      attn_seen_.merge(other.attn_seen_);
    }
    traces_ += other.traces_;
  }

  NeuronRanges Finish() const {
    if (traces_ == 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "calibration requires at least one trace");
    }
    NeuronRanges r;
    r.profile_digest = Digest(profile_);
    Finalize(word_lo_, word_hi_, word_seen_, r.word_lo, r.word_hi);
    r.word_observed = word_seen_;
    if (attention_ == AttentionRange::kCalibrated) {
      Finalize(attn_lo_, attn_hi_, attn_seen_, r.attn_lo, r.attn_hi);
      r.attn_observed = attn_seen_;
    } else {
      const std::uint64_t n = CountNeurons(profile_).attn_neurons;
      r.attn_lo.assign(n, 0.0f);
      r.attn_hi.assign(n, 1.0f);
      r.attn_observed = BitSet(n);
      r.attn_observed.set_all();
    }
    return r;
  }

 private:
  static void Update(std::vector<float>& lo, std::vector<float>& hi,
                     BitSet& seen, std::size_t idx, float v) {
    if (v < lo[idx]) lo[idx] = v;
    if (v > hi[idx]) hi[idx] = v;
    seen.set(idx);
  }

  static void MergeArrays(std::vector<float>& lo, std::vector<float>& hi,
                          const std::vector<float>& olo,
                          const std::vector<float>& ohi) {
    for (std::size_t i = 0; i < lo.size(); ++i) {
      lo[i] = std::min(lo[i], olo[i]);
      hi[i] = std::max(hi[i], ohi[i]);
    }
  }

  static void Finalize(const std::vector<float>& lo,
                       const std::vector<float>& hi, const BitSet& seen,
                       std::vector<float>& out_lo, std::vector<float>& out_hi) {
    out_lo.resize(lo.size());
    out_hi.resize(hi.size());
    for (std::size_t i = 0; i < lo.size(); ++i) {
      const bool observed = seen.test(i);
      out_lo[i] = observed ? lo[i] : 0.0f;
      out_hi[i] = observed ? hi[i] : 0.0f;
    }
  }

  ModelProfile profile_;
  AttentionRange attention_;
  std::vector<float> word_lo_, word_hi_, attn_lo_, attn_hi_;
  BitSet word_seen_, attn_seen_;
  std::size_t traces_ = 0;
};

template <std::ranges::input_range R>
  requires std::same_as<std::remove_cvref_t<std::ranges::range_value_t<R>>,
                        ActivationTrace>
NeuronRanges Calibrate(R&& traces, const ModelProfile& profile,
                       AttentionRange attention = AttentionRange::kCalibrated) {
  RangeAccumulator acc(profile, attention);
  for (const ActivationTrace& t : traces) acc.Add(t);
  return acc.Finish();
}

// Ranges file: "MNRG", u32 version, u64 profile digest, then word_lo,
// word_hi, attn_lo, attn_hi as f32 and the word/attention observed bitmaps
// as u64 words, all little-endian.
inline constexpr char kRangesMagic[] = "MNRG";
inline constexpr std::uint32_t kRangesVersion = 1;

inline void SaveRanges(const NeuronRanges& r, const std::string& path) {
  auto out = io::OpenOut(path);
  out.write(kRangesMagic, 4);
  io::PutLe(out, kRangesVersion);
  io::PutLe(out, r.profile_digest);
  io::PutLeArray<float>(out, r.word_lo);
  io::PutLeArray<float>(out, r.word_hi);
  io::PutLeArray<float>(out, r.attn_lo);
  io::PutLeArray<float>(out, r.attn_hi);
  io::PutLeArray<BitSet::Word>(out, r.word_observed.words());
  io::PutLeArray<BitSet::Word>(out, r.attn_observed.words());
  io::CheckWritten(out, path);
}

// Sizes come from |profile|; its digest must match the one on file.
inline NeuronRanges LoadRanges(const std::string& path,
                               const ModelProfile& profile) {
  auto in = io::OpenIn(path);
  io::ExpectMagic(in, "MNRG", "ranges file " + path);
  const auto version = io::GetLe<std::uint32_t>(in, "ranges version");
  if (version != kRangesVersion) {
    throw Error(ErrorCode::kFormat, "ranges file " + path +
                                        ": unsupported version " +
                                        std::to_string(version));
  }
  NeuronRanges r;
  r.profile_digest = io::GetLe<std::uint64_t>(in, "ranges digest");
  if (r.profile_digest != Digest(profile)) {
    throw Error(ErrorCode::kDigestMismatch,
                "ranges file " + path + " was calibrated for another profile");
  }
  const NeuronCounts c = CountNeurons(profile);
  auto read_floats = [&](std::vector<float>& v, std::size_t n,
                         const char* what) {
    v.resize(n);
    io::GetLeArray<float>(in, v, what);
  };
  read_floats(r.word_lo, c.word_neurons, "word_lo");
  read_floats(r.word_hi, c.word_neurons, "word_hi");
  read_floats(r.attn_lo, c.attn_neurons, "attn_lo");
  read_floats(r.attn_hi, c.attn_neurons, "attn_hi");
  auto read_bits = [&](std::size_t n, const char* what) {
    std::vector<BitSet::Word> words((n + BitSet::kWordBits - 1) /
                                    BitSet::kWordBits);
    io::GetLeArray<BitSet::Word>(in, words, what);
    return BitSet::FromWords(n, std::move(words));
  };
  r.word_observed = read_bits(c.word_neurons, "word observed bitmap");
  r.attn_observed = read_bits(c.attn_neurons, "attention observed bitmap");
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::kFormat,
                "ranges file " + path + " has trailing bytes");
  }
  return r;
}

}  // namespace mncover

#endif  // MNCOVER_CALIBRATION_HPP_
