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

// Seeded word-sequence rewrites used as the transformation pool for
// coverage-guided augmentation. A rewrite that does not apply to its input
// (no eligible word, too few words) returns std::nullopt.

#ifndef MNCOVER_TRANSFORMATIONS_HPP_
#define MNCOVER_TRANSFORMATIONS_HPP_

#include <array>
#include <cctype>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mncover/reference_transformer.hpp"
#include "mncover/suite.hpp"

namespace mncover {

struct Transformation {
  using Fn = std::function<std::optional<Words>(const Words&, SplitMix64&)>;

  std::string name;
  Fn fn;

  std::optional<Words> Apply(const Words& words, std::uint64_t seed) const {
    SplitMix64 rng(seed);
    return fn(words, rng);
  }
};

namespace detail {

inline std::size_t Pick(SplitMix64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng.Next() % n);
}

inline std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool IsAlpha(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) != 0;
}

// Indices of words with at least |min_alpha| letters.
inline std::vector<std::size_t> EligibleWords(const Words& words,
                                              std::size_t min_alpha) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::size_t letters = 0;
    for (char c : words[i]) letters += IsAlpha(c);
    if (letters >= min_alpha) out.push_back(i);
  }
  return out;
}

inline std::vector<std::size_t> AlphaPositions(const std::string& w) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (IsAlpha(w[i])) out.push_back(i);
  }
  return out;
}

inline char RandomLetter(SplitMix64& rng) {
  return static_cast<char>('a' + Pick(rng, 26));
}

// Applies |edit| to one random word with at least |min_alpha| letters.
template <typename Edit>
std::optional<Words> EditOneWord(const Words& words, SplitMix64& rng,
                                 std::size_t min_alpha, Edit edit) {
  const auto eligible = EligibleWords(words, min_alpha);
  if (eligible.empty()) return std::nullopt;
  Words out = words;
  std::string& w = out[eligible[Pick(rng, eligible.size())]];
  if (!edit(w, rng)) return std::nullopt;
  return out;
}

inline std::string MatchCase(const std::string& like, std::string word) {
  if (!like.empty() && std::isupper(static_cast<unsigned char>(like[0])) &&
      !word.empty()) {
    word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
  }
  return word;
}

}  // namespace detail

// Lowercase QWERTY neighbours.
inline std::string_view QwertyNeighbors(char c) {
  static const std::array<std::string_view, 26> kTable = {
      "qwsz", "vghn", "xdfv", "serfcx", "wsdr",  "drtgvc", "ftyhbv",
      "gyujnb", "ujko", "huikmn", "jiolm", "kop", "njk",  "bhjm",
      "iklp", "ol",  "wa",  "edft", "awedxz", "rfgy", "yhji",
      "cfgb", "qase", "zsdc", "tghu", "asx"};
  const char l = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (l < 'a' || l > 'z') return {};
  return kTable[static_cast<std::size_t>(l - 'a')];
}

// Bundled synonym groups. Every word in a group may replace any other.
inline const std::vector<std::vector<std::string>>& SynonymGroups() {
  static const std::vector<std::vector<std::string>> kGroups = {
      {"good", "great", "fine", "nice", "excellent"},
      {"bad", "awful", "terrible", "poor", "lousy"},
      {"movie", "film", "picture"},
      {"happy", "glad", "pleased", "cheerful"},
      {"sad", "unhappy", "gloomy", "sorrowful"},
      {"big", "large", "huge", "enormous"},
      {"small", "little", "tiny"},
      {"fast", "quick", "rapid", "swift"},
      {"love", "adore", "enjoy"},
      {"hate", "dislike", "detest", "loathe"},
      {"boring", "dull", "tedious"},
      {"funny", "amusing", "hilarious", "comic"},
      {"beautiful", "pretty", "lovely", "gorgeous"},
      {"story", "plot", "narrative", "tale"},
      {"actor", "performer", "player"},
      {"really", "truly", "genuinely"},
      {"very", "extremely", "highly"},
      {"smart", "clever", "bright", "intelligent"},
      {"strange", "odd", "weird", "peculiar"},
      {"begin", "start", "commence"},
      {"end", "finish", "conclude"},
      {"buy", "purchase", "acquire"},
      {"help", "assist", "aid"},
      {"show", "display", "exhibit"},
      {"quiet", "silent", "calm"},
      {"angry", "mad", "furious", "irate"},
  };
  return kGroups;
}

inline const std::vector<std::string>* FindSynonyms(std::string_view word) {
  const std::string lw = detail::Lower(word);
  for (const auto& group : SynonymGroups()) {
    for (const auto& w : group) {
      if (w == lw) return &group;
    }
  }
  return nullptr;
}

// (expanded, contracted) pairs; expanded forms are two words.
inline const std::vector<std::pair<std::string, std::string>>&
ContractionTable() {
  static const std::vector<std::pair<std::string, std::string>> kTable = {
      {"do not", "don't"},       {"does not", "doesn't"},
      {"did not", "didn't"},     {"is not", "isn't"},
      {"are not", "aren't"},     {"was not", "wasn't"},
      {"were not", "weren't"},   {"will not", "won't"},
      {"would not", "wouldn't"}, {"should not", "shouldn't"},
      {"could not", "couldn't"}, {"have not", "haven't"},
      {"has not", "hasn't"},     {"can not", "can't"},
      {"i am", "i'm"},           {"you are", "you're"},
      {"we are", "we're"},       {"they are", "they're"},
      {"it is", "it's"},         {"that is", "that's"},
      {"i will", "i'll"},        {"i have", "i've"},
      {"let us", "let's"},       {"he is", "he's"},
      {"she is", "she's"},
  };
  return kTable;
}

inline const std::vector<std::string>& NameList() {
  static const std::vector<std::string> kNames = {
      "John", "Mary", "James", "Linda", "Robert", "Susan", "Michael",
      "Karen", "David", "Emma", "Daniel", "Sofia", "Ahmed", "Mei", "Ivan"};
  return kNames;
}

inline const std::vector<std::string>& LocationList() {
  static const std::vector<std::string> kPlaces = {
      "London", "Paris", "Tokyo", "Berlin", "Chicago", "Madrid", "Cairo",
      "Lima", "Toronto", "Sydney", "Mumbai", "Nairobi", "Oslo", "Seoul"};
  return kPlaces;
}

namespace detail {

inline std::optional<Words> SwapFromList(const Words& words, SplitMix64& rng,
                                         const std::vector<std::string>& list) {
  std::vector<std::size_t> hits;
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (const auto& n : list) {
      if (words[i] == n) {
        hits.push_back(i);
        break;
      }
    }
  }
  if (hits.empty() || list.size() < 2) return std::nullopt;
  Words out = words;
  std::string& w = out[hits[Pick(rng, hits.size())]];
  std::string repl;
  do {
    repl = list[Pick(rng, list.size())];
  } while (repl == w);
  w = repl;
  return out;
}

inline bool IsNumber(const std::string& w) {
  if (w.empty()) return false;
  for (char c : w) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace detail

inline std::optional<Words> Contract(const Words& words, SplitMix64& rng) {
  std::vector<std::pair<std::size_t, const std::string*>> hits;
  for (std::size_t i = 0; i + 1 < words.size(); ++i) {
    const std::string bigram =
        detail::Lower(words[i]) + " " + detail::Lower(words[i + 1]);
    for (const auto& [longer, shorter] : ContractionTable()) {
      if (bigram == longer) hits.emplace_back(i, &shorter);
    }
  }
  if (hits.empty()) return std::nullopt;
  const auto [pos, repl] = hits[detail::Pick(rng, hits.size())];
  Words out(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(pos));
  out.push_back(detail::MatchCase(words[pos], *repl));
  out.insert(out.end(), words.begin() + static_cast<std::ptrdiff_t>(pos) + 2,
             words.end());
  return out;
}

inline std::optional<Words> Expand(const Words& words, SplitMix64& rng) {
  std::vector<std::pair<std::size_t, const std::string*>> hits;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::string lw = detail::Lower(words[i]);
    for (const auto& [longer, shorter] : ContractionTable()) {
      if (lw == shorter) hits.emplace_back(i, &longer);
    }
  }
  if (hits.empty()) return std::nullopt;
  const auto [pos, repl] = hits[detail::Pick(rng, hits.size())];
  Words out(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(pos));
  Words parts = SplitWords(*repl);
  parts[0] = detail::MatchCase(words[pos], parts[0]);
  out.insert(out.end(), parts.begin(), parts.end());
  out.insert(out.end(), words.begin() + static_cast<std::ptrdiff_t>(pos) + 1,
             words.end());
  return out;
}

inline std::vector<Transformation> BuiltinTransformations() {
  using detail::EditOneWord;
  using detail::Pick;
  std::vector<Transformation> pool;

  pool.push_back({"neighboring_character_swap", [](const Words& w, SplitMix64& rng) {
    return EditOneWord(w, rng, 2, [](std::string& s, SplitMix64& r) {
      const auto pos = detail::AlphaPositions(s);
      std::vector<std::size_t> pairs;
      for (std::size_t k = 0; k + 1 < pos.size(); ++k) {
        if (pos[k + 1] == pos[k] + 1 && s[pos[k]] != s[pos[k] + 1]) {
          pairs.push_back(pos[k]);
        }
      }
      if (pairs.empty()) return false;
      const std::size_t at = pairs[Pick(r, pairs.size())];
      std::swap(s[at], s[at + 1]);
      return true;
    });
  }});

  pool.push_back({"random_character_deletion", [](const Words& w, SplitMix64& rng) {
    return EditOneWord(w, rng, 2, [](std::string& s, SplitMix64& r) {
      const auto pos = detail::AlphaPositions(s);
      s.erase(pos[Pick(r, pos.size())], 1);
      return true;
    });
  }});

  pool.push_back({"random_character_insertion", [](const Words& w, SplitMix64& rng) {
    return EditOneWord(w, rng, 1, [](std::string& s, SplitMix64& r) {
      const std::size_t at = Pick(r, s.size() + 1);
      s.insert(s.begin() + static_cast<std::ptrdiff_t>(at), detail::RandomLetter(r));
      return true;
    });
  }});

  pool.push_back({"random_character_substitution", [](const Words& w, SplitMix64& rng) {
    return EditOneWord(w, rng, 1, [](std::string& s, SplitMix64& r) {
      const auto pos = detail::AlphaPositions(s);
      char& c = s[pos[Pick(r, pos.size())]];
      char repl;
      do {
        repl = detail::RandomLetter(r);
      } while (repl == std::tolower(static_cast<unsigned char>(c)));
      c = repl;
      return true;
    });
  }});

  pool.push_back({"qwerty_substitution", [](const Words& w, SplitMix64& rng) {
    return EditOneWord(w, rng, 1, [](std::string& s, SplitMix64& r) {
      const auto pos = detail::AlphaPositions(s);
      char& c = s[pos[Pick(r, pos.size())]];
      const std::string_view near = QwertyNeighbors(c);
      c = near[Pick(r, near.size())];
      return true;
    });
  }});

  pool.push_back({"homoglyph_swap", [](const Words& w, SplitMix64& rng) {
    return EditOneWord(w, rng, 1, [](std::string& s, SplitMix64& r) {
      static const std::string_view kFrom = "olieasbg";
      static const std::string_view kTo = "01134589";
      std::vector<std::size_t> hits;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (kFrom.find(s[i]) != std::string_view::npos) hits.push_back(i);
      }
      if (hits.empty()) return false;
      char& c = s[hits[Pick(r, hits.size())]];
      c = kTo[kFrom.find(c)];
      return true;
    });
  }});

  pool.push_back({"synonym_swap", [](const Words& w, SplitMix64& rng) -> std::optional<Words> {
    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (FindSynonyms(w[i])) hits.push_back(i);
    }
    if (hits.empty()) return std::nullopt;
    Words out = w;
    std::string& word = out[hits[Pick(rng, hits.size())]];
    const auto& group = *FindSynonyms(word);
    const std::string lw = detail::Lower(word);
    std::string repl;
    do {
      repl = group[Pick(rng, group.size())];
    } while (repl == lw);
    word = detail::MatchCase(word, repl);
    return out;
  }});

  pool.push_back({"synonym_insertion", [](const Words& w, SplitMix64& rng) -> std::optional<Words> {
    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (FindSynonyms(w[i])) hits.push_back(i);
    }
    if (hits.empty()) return std::nullopt;
    const auto& group = *FindSynonyms(w[hits[Pick(rng, hits.size())]]);
    Words out = w;
    const std::size_t at = Pick(rng, out.size() + 1);
    out.insert(out.begin() + static_cast<std::ptrdiff_t>(at),
               group[Pick(rng, group.size())]);
    return out;
  }});

  pool.push_back({"contract", Contract});
  pool.push_back({"expand", Expand});

  pool.push_back({"random_word_swap", [](const Words& w, SplitMix64& rng) -> std::optional<Words> {
    if (w.size() < 2) return std::nullopt;
    Words out = w;
    const std::size_t a = Pick(rng, w.size());
    std::size_t b = Pick(rng, w.size() - 1);
    if (b >= a) ++b;
    std::swap(out[a], out[b]);
    return out;
  }});

  pool.push_back({"change_number", [](const Words& w, SplitMix64& rng) -> std::optional<Words> {
    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (detail::IsNumber(w[i])) hits.push_back(i);
    }
    if (hits.empty()) return std::nullopt;
    Words out = w;
    std::string& word = out[hits[Pick(rng, hits.size())]];
    std::string repl;
    do {
      repl = std::to_string(1 + Pick(rng, 1000));
    } while (repl == word);
    word = repl;
    return out;
  }});

  pool.push_back({"change_name", [](const Words& w, SplitMix64& rng) {
    return detail::SwapFromList(w, rng, NameList());
  }});

  pool.push_back({"change_location", [](const Words& w, SplitMix64& rng) {
    return detail::SwapFromList(w, rng, LocationList());
  }});

  return pool;
}

}  // namespace mncover

#endif  // MNCOVER_TRANSFORMATIONS_HPP_
