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

#ifndef MNCOVER_MASKS_HPP_
#define MNCOVER_MASKS_HPP_

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mncover/binary_io.hpp"
#include "mncover/bitset.hpp"
#include "mncover/error.hpp"

namespace mncover {

// Binary word importance mask over the vocabulary plus a sparse binary
// interaction mask over ordered vocabulary pairs. The interaction mask is a
// default value flipped for every pair in |exceptions|. Tokens outside the
// vocabulary gate to |oov_gate|.
class MaskPair {
 public:
  using TokenPair = std::pair<std::uint32_t, std::uint32_t>;

  MaskPair() = default;

  MaskPair(std::uint32_t vocab_size, BitSet word_mask, bool pair_default,
           std::vector<TokenPair> exceptions, std::string provenance = {},
           bool oov_gate = true)
      : vocab_size_(vocab_size),
        word_mask_(std::move(word_mask)),
        pair_default_(pair_default),
        oov_gate_(oov_gate),
        exceptions_(std::move(exceptions)),
        provenance_(std::move(provenance)) {
    if (word_mask_.size() != vocab_size_) {
      throw Error(ErrorCode::kInvalidArgument,
                  "word mask size " + std::to_string(word_mask_.size()) +
                      " != vocab_size " + std::to_string(vocab_size_));
    }
    std::sort(exceptions_.begin(), exceptions_.end());
    exceptions_.erase(std::unique(exceptions_.begin(), exceptions_.end()),
                      exceptions_.end());
    for (const auto& [a, b] : exceptions_) {
      if (a >= vocab_size_ || b >= vocab_size_) {
        throw Error(ErrorCode::kOutOfRange,
                    "interaction mask pair (" + std::to_string(a) + ", " +
                        std::to_string(b) + ") outside vocabulary of size " +
                        std::to_string(vocab_size_));
      }
    }
  }

  static MaskPair AllOnes(std::uint32_t vocab_size) {
    BitSet w(vocab_size);
    w.set_all();
    return MaskPair(vocab_size, std::move(w), true, {}, "all-ones");
  }

  static MaskPair AllZeros(std::uint32_t vocab_size) {
    return MaskPair(vocab_size, BitSet(vocab_size), false, {}, "all-zeros");
  }

  std::uint32_t vocab_size() const { return vocab_size_; }
  const BitSet& word_mask() const { return word_mask_; }
  bool pair_default() const { return pair_default_; }
  bool oov_gate() const { return oov_gate_; }
  const std::vector<TokenPair>& exceptions() const { return exceptions_; }
  const std::string& provenance() const { return provenance_; }

  bool IsAllOnes() const {
    return word_mask_.count() == vocab_size_ && pair_default_ &&
           exceptions_.empty();
  }

  // M_W[token].
  bool WordGate(std::uint32_t token) const {
    if (token >= vocab_size_) return oov_gate_;
    return word_mask_.test(token);
  }

  // M_A[attending, attended]; the order of the arguments matters.
  bool PairGate(std::uint32_t attending, std::uint32_t attended) const {
    if (attending >= vocab_size_ || attended >= vocab_size_) return oov_gate_;
    const bool flipped = std::binary_search(
        exceptions_.begin(), exceptions_.end(), TokenPair{attending, attended});
    return flipped ? !pair_default_ : pair_default_;
  }

  // Hash of the serialized mask; binds coverage states to the mask used.
  std::uint64_t digest() const {
    std::ostringstream buf;
    Write(buf);
    return Fnv1a(buf.str());
  }

  // "MNMK", u32 version, u32 vocab_size, u8 flags (bit0 oov/word default,
  // bit1 pair default), u32 provenance length + bytes, M_W bitmap as u64
  // words, u64 exception count, sorted (u32, u32) pairs. Little-endian.
  void Write(std::ostream& out) const {
    out.write("MNMK", 4);
    io::PutLe(out, kVersion);
    io::PutLe(out, vocab_size_);
    const std::uint8_t flags =
        (oov_gate_ ? 1U : 0U) | (pair_default_ ? 2U : 0U);
    io::PutLe(out, flags);
    io::PutLe(out, static_cast<std::uint32_t>(provenance_.size()));
    out.write(provenance_.data(),
              static_cast<std::streamsize>(provenance_.size()));
    io::PutLeArray<BitSet::Word>(out, word_mask_.words());
    io::PutLe(out, static_cast<std::uint64_t>(exceptions_.size()));
    for (const auto& [a, b] : exceptions_) {
      io::PutLe(out, a);
      io::PutLe(out, b);
    }
  }

  static MaskPair Read(std::istream& in, const std::string& source) {
    io::ExpectMagic(in, "MNMK", "mask file " + source);
    const auto version = io::GetLe<std::uint32_t>(in, "mask version");
    if (version != kVersion) {
      throw Error(ErrorCode::kFormat, "mask file " + source +
                                          ": unsupported version " +
                                          std::to_string(version));
    }
    const auto vocab = io::GetLe<std::uint32_t>(in, "mask vocab_size");
    const auto flags = io::GetLe<std::uint8_t>(in, "mask flags");
    if (flags > 3) {
      throw Error(ErrorCode::kFormat,
                  "mask file " + source + ": unknown flag bits");
    }
    const auto prov_len = io::GetLe<std::uint32_t>(in, "provenance length");
    std::string prov(prov_len, '\0');
    in.read(prov.data(), prov_len);
    if (in.gcount() != static_cast<std::streamsize>(prov_len)) {
      throw Error(ErrorCode::kTruncated,
                  "mask file " + source + ": truncated provenance");
    }
    std::vector<BitSet::Word> words((vocab + BitSet::kWordBits - 1) /
                                    BitSet::kWordBits);
    io::GetLeArray<BitSet::Word>(in, words, "word mask bitmap");
    BitSet word_mask = BitSet::FromWords(vocab, std::move(words));
    const auto n = io::GetLe<std::uint64_t>(in, "exception count");
    std::vector<TokenPair> pairs;
    pairs.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1 << 20)));
    for (std::uint64_t k = 0; k < n; ++k) {
      const auto a = io::GetLe<std::uint32_t>(in, "exception pair");
      const auto b = io::GetLe<std::uint32_t>(in, "exception pair");
      if (!pairs.empty() && !(pairs.back() < TokenPair{a, b})) {
        throw Error(ErrorCode::kFormat,
                    "mask file " + source + ": exception pairs not sorted");
      }
      pairs.emplace_back(a, b);
    }
    if (in.peek() != std::char_traits<char>::eof()) {
      throw Error(ErrorCode::kFormat,
                  "mask file " + source + " has trailing bytes");
    }
    return MaskPair(vocab, std::move(word_mask), (flags & 2U) != 0,
                    std::move(pairs), std::move(prov), (flags & 1U) != 0);
  }

  friend bool operator==(const MaskPair&, const MaskPair&) = default;

  static constexpr std::uint32_t kVersion = 1;

 private:
  std::uint32_t vocab_size_ = 0;
  BitSet word_mask_;
  bool pair_default_ = true;
  bool oov_gate_ = true;
  std::vector<TokenPair> exceptions_;
  std::string provenance_;
};

inline void SaveMasks(const MaskPair& masks, const std::string& path) {
  auto out = io::OpenOut(path);
  masks.Write(out);
  io::CheckWritten(out, path);
}

// |expected_vocab| of 0 skips the vocabulary check.
inline MaskPair LoadMasks(const std::string& path,
                          std::uint32_t expected_vocab = 0) {
  auto in = io::OpenIn(path);
  MaskPair m = MaskPair::Read(in, path);
  if (expected_vocab != 0 && m.vocab_size() != expected_vocab) {
    throw Error(ErrorCode::kProfileMismatch,
                "mask file " + path + " has vocab_size " +
                    std::to_string(m.vocab_size()) + ", profile expects " +
                    std::to_string(expected_vocab));
  }
  return m;
}

}  // namespace mncover

#endif  // MNCOVER_MASKS_HPP_
