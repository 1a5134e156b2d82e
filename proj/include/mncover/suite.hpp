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

#ifndef MNCOVER_SUITE_HPP_
#define MNCOVER_SUITE_HPP_

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "mncover/binary_io.hpp"
#include "mncover/error.hpp"

namespace mncover {

using Words = std::vector<std::string>;

inline Words SplitWords(std::string_view text) {
  Words out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
    std::size_t j = i;
    while (j < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[j])))
      ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string JoinWords(const Words& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

// Whitespace word tokenizer. "#<n>" with n < vocab_size maps to id n so
// that id-only inputs survive a render/tokenize round trip; any other word
// hashes into the vocabulary.
class HashTokenizer {
 public:
  explicit HashTokenizer(std::uint32_t vocab_size) : vocab_size_(vocab_size) {
    if (vocab_size_ == 0) {
      throw Error(ErrorCode::kInvalidArgument, "vocab_size must be >= 1");
    }
  }

  std::uint32_t vocab_size() const { return vocab_size_; }

  std::uint32_t TokenId(std::string_view word) const {
    if (word.size() > 1 && word[0] == '#') {
      std::uint32_t id = 0;
      const char* first = word.data() + 1;
      const char* last = word.data() + word.size();
      auto [ptr, ec] = std::from_chars(first, last, id);
      if (ec == std::errc() && ptr == last && id < vocab_size_) return id;
    }
    return static_cast<std::uint32_t>(Fnv1a(word) % vocab_size_);
  }

  std::vector<std::uint32_t> Encode(const Words& words) const {
    std::vector<std::uint32_t> ids;
    ids.reserve(words.size());
    for (const auto& w : words) ids.push_back(TokenId(w));
    return ids;
  }

  static Words Render(const std::vector<std::uint32_t>& ids) {
    Words out;
    out.reserve(ids.size());
    for (std::uint32_t id : ids) out.push_back("#" + std::to_string(id));
    return out;
  }

 private:
  std::uint32_t vocab_size_;
};

struct TestInput {
  std::uint64_t id = 0;
  std::vector<std::uint32_t> tokens;
  std::optional<std::string> text;
  std::optional<std::string> tag;

  // Words of |text|, or the rendered token ids when there is no text.
  Words words() const {
    return text ? SplitWords(*text) : HashTokenizer::Render(tokens);
  }

  friend bool operator==(const TestInput&, const TestInput&) = default;
};

// Ordered inputs with unique ids.
class TestSuite {
 public:
  TestSuite() = default;
  explicit TestSuite(std::vector<TestInput> inputs) {
    for (auto& in : inputs) Add(std::move(in));
  }

  void Add(TestInput input) {
    if (!ids_.insert(input.id).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate test input id " + std::to_string(input.id));
    }
    inputs_.push_back(std::move(input));
  }

  const std::vector<TestInput>& inputs() const { return inputs_; }
  std::size_t size() const { return inputs_.size(); }
  bool empty() const { return inputs_.empty(); }
  const TestInput& operator[](std::size_t i) const { return inputs_[i]; }
  auto begin() const { return inputs_.begin(); }
  auto end() const { return inputs_.end(); }

  std::uint64_t NextFreeId() const {
    std::uint64_t next = 0;
    for (const auto& in : inputs_) next = std::max(next, in.id + 1);
    return next;
  }

 private:
  std::vector<TestInput> inputs_;
  std::unordered_set<std::uint64_t> ids_;
};

inline nlohmann::json ToJson(const TestInput& in) {
  nlohmann::json j{{"id", in.id}, {"tokens", in.tokens}};
  if (in.text) j["text"] = *in.text;
  if (in.tag) j["tag"] = *in.tag;
  return j;
}

// Suite file: one JSON object per line with keys "id", "tokens" and the
// optional "text" and "tag". Blank lines are ignored. When "tokens" is
// absent, |tokenizer| (if given) encodes "text".
inline TestSuite ReadSuite(std::istream& in, const std::string& source,
                           const HashTokenizer* tokenizer = nullptr) {
  TestSuite suite;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    try {
      const auto j = nlohmann::json::parse(line);
      TestInput input;
      input.id = j.at("id").get<std::uint64_t>();
      if (j.contains("text")) input.text = j.at("text").get<std::string>();
      if (j.contains("tag")) input.tag = j.at("tag").get<std::string>();
      if (j.contains("tokens")) {
        input.tokens = j.at("tokens").get<std::vector<std::uint32_t>>();
      } else if (input.text && tokenizer) {
        input.tokens = tokenizer->Encode(SplitWords(*input.text));
      } else {
        throw Error(ErrorCode::kFormat, where + ": record has no tokens");
      }
      suite.Add(std::move(input));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kFormat, where + ": " + e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kFormat) throw;
      throw Error(e.code(), where + ": " + e.what());
    }
  }
  return suite;
}

inline void WriteSuite(std::ostream& out, const TestSuite& suite) {
  for (const auto& in : suite) out << ToJson(in).dump() << '\n';
}

inline TestSuite LoadSuite(const std::string& path,
                           const HashTokenizer* tokenizer = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open for reading: " + path);
  return ReadSuite(in, path, tokenizer);
}

inline void SaveSuite(const TestSuite& suite, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open for writing: " + path);
  WriteSuite(out, suite);
  io::CheckWritten(out, path);
}

}  // namespace mncover

#endif  // MNCOVER_SUITE_HPP_
