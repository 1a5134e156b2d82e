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

#ifndef MNCOVER_COVERAGE_HPP_
#define MNCOVER_COVERAGE_HPP_

#include <algorithm>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "mncover/binary_io.hpp"
#include "mncover/bitset.hpp"
#include "mncover/calibration.hpp"
#include "mncover/error.hpp"
#include "mncover/masks.hpp"
#include "mncover/profile.hpp"
#include "mncover/trace.hpp"

namespace mncover {

struct EngineOptions {
  // When false, neurons without a calibrated range never activate a bin.
  bool count_unobserved = true;
};

// Increase in Cover and mnCover caused by one input.
struct CoverageGain {
  double cover = 0.0;
  double mncover = 0.0;
};

struct CoverageReport {
  std::uint64_t awb = 0;         // activated word-neuron bins
  std::uint64_t aab = 0;         // activated attention-neuron bins
  std::uint64_t masked_awb = 0;  // ... counted through a gated-in token
  std::uint64_t masked_aab = 0;  // ... counted through a gated-in pair
  std::uint64_t word_bins = 0;   // N(WB)
  std::uint64_t attn_bins = 0;   // N(AB)
  double cover = 0.0;
  double mncover = 0.0;
  // True when no mask was supplied and the masked tallies mirror the
  // unmasked ones.
  bool implicit_all_ones_mask = false;
};

// Activated (neuron, bin) pairs accumulated over inputs. Bit index of a
// pair is neuron_index * bins + bin. The masked sets hold the subset of
// bins that were reached through a gated-in token or token pair; they are
// only allocated when the owning engine carries a mask.
class CoverageState {
 public:
  CoverageState() = default;

  std::uint64_t profile_digest() const { return profile_digest_; }
  std::uint64_t mask_digest() const { return mask_digest_; }
  bool has_mask() const { return has_mask_; }

  const BitSet& word_bits() const { return word_bits_; }
  const BitSet& attn_bits() const { return attn_bits_; }
  const BitSet& masked_word_bits() const {
    return has_mask_ ? masked_word_bits_ : word_bits_;
  }
  const BitSet& masked_attn_bits() const {
    return has_mask_ ? masked_attn_bits_ : attn_bits_;
  }

  // Bitwise union in place.
  void Merge(const CoverageState& other) {
    CheckCompatible(other);
    word_bits_.merge(other.word_bits_);
    attn_bits_.merge(other.attn_bits_);
    if (has_mask_) {
      masked_word_bits_.merge(other.masked_word_bits_);
      masked_attn_bits_.merge(other.masked_attn_bits_);
    }
  }

  friend bool operator==(const CoverageState&,
                         const CoverageState&) = default;

  // Snapshot: "MNCV-STATE", u32 version, u64 profile digest, u64 mask
  // digest, u8 has_mask, then each bit set (word, attention and, when
  // masked, masked word, masked attention) as u64 bit length followed by
  // its u64 words, then the four cached popcounts as u64. Little-endian.
  void Write(std::ostream& out) const {
    out.write("MNCV-STATE", 10);
    io::PutLe(out, kVersion);
    io::PutLe(out, profile_digest_);
    io::PutLe(out, mask_digest_);
    io::PutLe(out, static_cast<std::uint8_t>(has_mask_ ? 1 : 0));
    auto put_bits = [&](const BitSet& b) {
      io::PutLe(out, static_cast<std::uint64_t>(b.size()));
      io::PutLeArray<BitSet::Word>(out, b.words());
    };
    put_bits(word_bits_);
    put_bits(attn_bits_);
    if (has_mask_) {
      put_bits(masked_word_bits_);
      put_bits(masked_attn_bits_);
    }
    io::PutLe(out, static_cast<std::uint64_t>(word_bits_.count()));
    io::PutLe(out, static_cast<std::uint64_t>(attn_bits_.count()));
    io::PutLe(out, static_cast<std::uint64_t>(masked_word_bits().count()));
    io::PutLe(out, static_cast<std::uint64_t>(masked_attn_bits().count()));
  }

  static CoverageState Read(std::istream& in, const std::string& source) {
    io::ExpectMagic(in, "MNCV-STATE", "coverage snapshot " + source);
    const auto version = io::GetLe<std::uint32_t>(in, "snapshot version");
    if (version != kVersion) {
      throw Error(ErrorCode::kFormat, "coverage snapshot " + source +
                                          ": unsupported version " +
                                          std::to_string(version));
    }
    CoverageState s;
    s.profile_digest_ = io::GetLe<std::uint64_t>(in, "profile digest");
    s.mask_digest_ = io::GetLe<std::uint64_t>(in, "mask digest");
    s.has_mask_ = io::GetLe<std::uint8_t>(in, "mask flag") != 0;
    auto get_bits = [&](const char* what) {
      const auto size = io::GetLe<std::uint64_t>(in, what);
      std::vector<BitSet::Word> words((size + BitSet::kWordBits - 1) /
                                      BitSet::kWordBits);
      io::GetLeArray<BitSet::Word>(in, words, what);
      return BitSet::FromWords(size, std::move(words));
    };
    s.word_bits_ = get_bits("word bits");
    s.attn_bits_ = get_bits("attention bits");
    if (s.has_mask_) {
      s.masked_word_bits_ = get_bits("masked word bits");
      s.masked_attn_bits_ = get_bits("masked attention bits");
    }
    const std::uint64_t expected[] = {
        s.word_bits_.count(), s.attn_bits_.count(),
        s.masked_word_bits().count(), s.masked_attn_bits().count()};
    for (std::uint64_t want : expected) {
      if (io::GetLe<std::uint64_t>(in, "popcount") != want) {
        throw Error(ErrorCode::kFormat, "coverage snapshot " + source +
                                            ": popcount does not match bits");
      }
    }
    return s;
  }

  static constexpr std::uint32_t kVersion = 1;

 private:
  friend class CoverageEngine;

  void CheckCompatible(const CoverageState& other) const {
    if (other.profile_digest_ != profile_digest_) {
      throw Error(ErrorCode::kDigestMismatch,
                  "coverage states were built for different profiles");
    }
    if (other.has_mask_ != has_mask_ || other.mask_digest_ != mask_digest_) {
      throw Error(ErrorCode::kDigestMismatch,
                  "coverage states were built with different masks");
    }
    if (other.word_bits_.size() != word_bits_.size() ||
        other.attn_bits_.size() != attn_bits_.size()) {
      throw Error(ErrorCode::kProfileMismatch,
                  "coverage states have different sizes");
    }
  }

  std::uint64_t profile_digest_ = 0;
  std::uint64_t mask_digest_ = 0;
  bool has_mask_ = false;
  BitSet word_bits_, attn_bits_;
  BitSet masked_word_bits_, masked_attn_bits_;
};

inline CoverageState Merge(const CoverageState& a, const CoverageState& b) {
  CoverageState out = a;
  out.Merge(b);
  return out;
}

inline void SaveState(const CoverageState& s, const std::string& path) {
  auto out = io::OpenOut(path);
  s.Write(out);
  io::CheckWritten(out, path);
}

inline CoverageState LoadState(const std::string& path) {
  auto in = io::OpenIn(path);
  return CoverageState::Read(in, path);
}

// Binds a profile, calibrated ranges and an optional mask pair, and maps
// traces onto activated bins. The engine is immutable; states are
// single-writer.
class CoverageEngine {
 public:
  CoverageEngine(const ModelProfile& profile,
                 std::shared_ptr<const NeuronRanges> ranges,
                 std::shared_ptr<const MaskPair> masks = nullptr,
                 EngineOptions options = {})
      : profile_(profile),
        counts_(CountNeurons(profile)),
        ranges_(std::move(ranges)),
        masks_(std::move(masks)),
        options_(options) {
    if (!ranges_) {
      throw Error(ErrorCode::kInvalidArgument, "coverage engine needs ranges");
    }
    if (ranges_->word_lo.size() != counts_.word_neurons ||
        ranges_->word_hi.size() != counts_.word_neurons ||
        ranges_->attn_lo.size() != counts_.attn_neurons ||
        ranges_->attn_hi.size() != counts_.attn_neurons ||
        ranges_->word_observed.size() != counts_.word_neurons ||
        ranges_->attn_observed.size() != counts_.attn_neurons) {
      throw Error(ErrorCode::kProfileMismatch,
                  "neuron ranges do not match the profile's neuron counts");
    }
    if (masks_ && masks_->vocab_size() != profile_.vocab_size) {
      throw Error(ErrorCode::kProfileMismatch,
                  "mask vocab_size " + std::to_string(masks_->vocab_size()) +
                      " != profile vocab_size " +
                      std::to_string(profile_.vocab_size));
    }
    profile_digest_ = Digest(profile_);
    mask_digest_ = masks_ ? masks_->digest() : 0;
  }

  const ModelProfile& profile() const { return profile_; }
  const NeuronCounts& counts() const { return counts_; }
  const NeuronRanges& ranges() const { return *ranges_; }
  const MaskPair* masks() const { return masks_.get(); }
  const EngineOptions& options() const { return options_; }

  CoverageState NewState() const {
    CoverageState s;
    s.profile_digest_ = profile_digest_;
    s.mask_digest_ = mask_digest_;
    s.has_mask_ = masks_ != nullptr;
    s.word_bits_ = BitSet(counts_.word_bins(profile_.bins));
    s.attn_bits_ = BitSet(counts_.attn_bins(profile_.bins));
    if (s.has_mask_) {
      s.masked_word_bits_ = BitSet(counts_.word_bins(profile_.bins));
      s.masked_attn_bits_ = BitSet(counts_.attn_bins(profile_.bins));
    }
    return s;
  }

  // Sets every bin the trace activates and returns the resulting increase.
  CoverageGain Ingest(CoverageState& state, const ActivationTrace& trace) const {
    CheckState(state);
    ValidateTrace(trace, profile_);
    Delta d;
    const bool masked = state.has_mask_;
    ForEachBin(trace, [&](bool is_word, std::size_t bit, bool gated) {
      if (is_word) {
        d.word += state.word_bits_.set(bit);
        if (masked && gated) d.masked_word += state.masked_word_bits_.set(bit);
      } else {
        d.attn += state.attn_bits_.set(bit);
        if (masked && gated) d.masked_attn += state.masked_attn_bits_.set(bit);
      }
    });
    return ToGain(d, masked);
  }

  // The gain Ingest would report, without modifying |state|.
  CoverageGain PeekGain(const CoverageState& state,
                        const ActivationTrace& trace) const {
    CheckState(state);
    ValidateTrace(trace, profile_);
    Delta d;
    const bool masked = state.has_mask_;
    ForEachBin(trace, [&](bool is_word, std::size_t bit, bool gated) {
      if (is_word) {
        d.word += !state.word_bits_.test(bit);
        if (masked && gated) d.masked_word += !state.masked_word_bits_.test(bit);
      } else {
        d.attn += !state.attn_bits_.test(bit);
        if (masked && gated) d.masked_attn += !state.masked_attn_bits_.test(bit);
      }
    });
    return ToGain(d, masked);
  }

  // cover = (N(AWB) + lambda N(AAB)) / (N(WB) + lambda N(AB)); mncover uses
  // the masked numerators over the same denominator.
  CoverageReport Report(const CoverageState& state) const {
    CheckState(state);
    CoverageReport r;
    r.awb = state.word_bits_.count();
    r.aab = state.attn_bits_.count();
    r.masked_awb = state.masked_word_bits().count();
    r.masked_aab = state.masked_attn_bits().count();
    r.word_bins = counts_.word_bins(profile_.bins);
    r.attn_bins = counts_.attn_bins(profile_.bins);
    const double denom = Denominator();
    r.cover = (static_cast<double>(r.awb) +
               profile_.lambda * static_cast<double>(r.aab)) /
              denom;
    r.mncover = (static_cast<double>(r.masked_awb) +
                 profile_.lambda * static_cast<double>(r.masked_aab)) /
                denom;
    r.implicit_all_ones_mask = !state.has_mask_;
    return r;
  }

  // Calls fn(is_word, bit_index, gated) once for every (neuron, bin) pair
  // the trace activates. Padding positions (t >= T) are never visited.
  template <typename Fn>
  void ForEachBin(const ActivationTrace& trace, Fn&& fn) const {
    const ModelProfile& p = profile_;
    const NeuronRanges& r = *ranges_;
    const std::size_t n = trace.length();
    const std::size_t bins = p.bins;
    const bool skip_unobserved = !options_.count_unobserved;

    for (std::size_t l = 0; l < p.word_layers; ++l) {
      for (std::size_t t = 0; t < n; ++t) {
        const bool gated = !masks_ || masks_->WordGate(trace.token_ids[t]);
        const std::size_t base = (l * p.max_len + t) * p.hidden;
        const float* src = &trace.word_acts[(l * n + t) * p.hidden];
        for (std::size_t d = 0; d < p.hidden; ++d) {
          const std::size_t neuron = base + d;
          if (skip_unobserved && !r.word_observed.test(neuron)) continue;
          const std::uint32_t b =
              BinOf(src[d], r.word_lo[neuron], r.word_hi[neuron], p.bins);
          fn(true, neuron * bins + b, gated);
        }
      }
    }

    std::vector<std::uint8_t> pair_gate;
    if (masks_) {
      pair_gate.resize(n * n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          pair_gate[i * n + j] =
              masks_->PairGate(trace.token_ids[i], trace.token_ids[j]);
        }
      }
    }
    for (std::size_t lh = 0; lh < std::size_t{p.attn_layers} * p.heads; ++lh) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t base = (lh * p.max_len + i) * p.max_len;
        const float* src = &trace.attn_acts[(lh * n + i) * n];
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t neuron = base + j;
          if (skip_unobserved && !r.attn_observed.test(neuron)) continue;
          const std::uint32_t b =
              BinOf(src[j], r.attn_lo[neuron], r.attn_hi[neuron], p.bins);
          fn(false, neuron * bins + b, !masks_ || pair_gate[i * n + j] != 0);
        }
      }
    }
  }

 private:
  struct Delta {
    std::uint64_t word = 0, attn = 0, masked_word = 0, masked_attn = 0;
  };

  double Denominator() const {
    return static_cast<double>(counts_.word_bins(profile_.bins)) +
           profile_.lambda *
               static_cast<double>(counts_.attn_bins(profile_.bins));
  }

  CoverageGain ToGain(const Delta& d, bool masked) const {
    const double denom = Denominator();
    CoverageGain g;
    g.cover = (static_cast<double>(d.word) +
               profile_.lambda * static_cast<double>(d.attn)) /
              denom;
    g.mncover = masked ? (static_cast<double>(d.masked_word) +
                          profile_.lambda * static_cast<double>(d.masked_attn)) /
                             denom
                       : g.cover;
    return g;
  }

  void CheckState(const CoverageState& s) const {
    if (s.profile_digest_ != profile_digest_) {
      throw Error(ErrorCode::kDigestMismatch,
                  "coverage state was built for a different profile");
    }
    if (s.has_mask_ != (masks_ != nullptr) || s.mask_digest_ != mask_digest_) {
      throw Error(ErrorCode::kDigestMismatch,
                  "coverage state was built with a different mask");
    }
  }

  ModelProfile profile_;
  NeuronCounts counts_;
  std::shared_ptr<const NeuronRanges> ranges_;
  std::shared_ptr<const MaskPair> masks_;
  EngineOptions options_;
  std::uint64_t profile_digest_ = 0;
  std::uint64_t mask_digest_ = 0;
};

// Ingests |traces| split into |shards| contiguous shards on separate threads
// and merges the partial states. The result does not depend on |shards|.
inline CoverageState IngestSharded(const CoverageEngine& engine,
                                   std::span<const ActivationTrace> traces,
                                   std::size_t shards) {
  shards = std::max<std::size_t>(1, std::min(shards, traces.size()));
  std::vector<CoverageState> parts(shards, engine.NewState());
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(shards);
  const std::size_t per = (traces.size() + shards - 1) / std::max<std::size_t>(shards, 1);
  for (std::size_t s = 0; s < shards; ++s) {
    workers.emplace_back([&, s] {
      try {
        const std::size_t begin = std::min(traces.size(), s * per);
        const std::size_t end = std::min(traces.size(), begin + per);
        for (std::size_t k = begin; k < end; ++k) {
          engine.Ingest(parts[s], traces[k]);
        }
      } catch (...) {
        errors[s] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  CoverageState out = engine.NewState();
  for (const auto& part : parts) out.Merge(part);
  return out;
}

}  // namespace mncover

#endif  // MNCOVER_COVERAGE_HPP_
