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

#ifndef MNCOVER_BITSET_HPP_
#define MNCOVER_BITSET_HPP_

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "mncover/error.hpp"

namespace mncover {

// Fixed-size bit set over 64-bit words with a cached population count.
// Bits are numbered LSB-first within each word.
class BitSet {
 public:
  using Word = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;

  BitSet() = default;
  explicit BitSet(std::size_t size)
      : size_(size), words_((size + kWordBits - 1) / kWordBits, 0) {}

  std::size_t size() const { return size_; }
  std::size_t count() const { return count_; }
  bool empty() const { return count_ == 0; }

  bool test(std::size_t pos) const {
    return (words_[pos / kWordBits] >> (pos % kWordBits)) & 1U;
  }

  // Returns true when the bit flipped from 0 to 1.
  bool set(std::size_t pos) {
    Word& w = words_[pos / kWordBits];
    const Word mask = Word{1} << (pos % kWordBits);
    if (w & mask) return false;
    w |= mask;
    ++count_;
    return true;
  }

  void set_all() {
    for (Word& w : words_) w = ~Word{0};
    ClearTail();
    count_ = size_;
  }

  // Bitwise union in place.
  void merge(const BitSet& other) {
    if (other.size_ != size_) {
      throw Error(ErrorCode::kProfileMismatch,
                  "cannot merge bit sets of different sizes");
    }
    std::size_t total = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      words_[i] |= other.words_[i];
      total += static_cast<std::size_t>(std::popcount(words_[i]));
    }
    count_ = total;
  }

  std::size_t recount() const {
    std::size_t total = 0;
    for (Word w : words_) total += static_cast<std::size_t>(std::popcount(w));
    return total;
  }

  std::span<const Word> words() const { return words_; }

  // Rebuilds from raw words. Stray bits past size() are rejected.
  static BitSet FromWords(std::size_t size, std::vector<Word> words) {
    BitSet b;
    b.size_ = size;
    if (words.size() != (size + kWordBits - 1) / kWordBits) {
      throw Error(ErrorCode::kFormat, "bit set word count does not match size");
    }
    b.words_ = std::move(words);
    const std::size_t tail = size % kWordBits;
    if (tail != 0 && (b.words_.back() >> tail) != 0) {
      throw Error(ErrorCode::kFormat, "bit set has bits set past its size");
    }
    b.count_ = b.recount();
    return b;
  }

  friend bool operator==(const BitSet& a, const BitSet& b) {
    return a.size_ == b.size_ && a.words_ == b.words_;
  }

 private:
  void ClearTail() {
    const std::size_t tail = size_ % kWordBits;
    if (tail != 0 && !words_.empty()) {
      words_.back() &= (Word{1} << tail) - 1;
    }
  }

  std::size_t size_ = 0;
  std::vector<Word> words_;
  std::size_t count_ = 0;
};

}  // namespace mncover

#endif  // MNCOVER_BITSET_HPP_
