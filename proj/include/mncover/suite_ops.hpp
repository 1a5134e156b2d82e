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

// Coverage-driven test-suite procedures: gain filtering, benchmark
// comparison and coverage-guided greedy augmentation.

#ifndef MNCOVER_SUITE_OPS_HPP_
#define MNCOVER_SUITE_OPS_HPP_

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mncover/coverage.hpp"
#include "mncover/error.hpp"
#include "mncover/reference_transformer.hpp"
#include "mncover/suite.hpp"
#include "mncover/trace.hpp"
#include "mncover/transformations.hpp"

namespace mncover {

enum class Metric { kCover, kMnCover };

inline double Select(const CoverageGain& g, Metric m) {
  return m == Metric::kCover ? g.cover : g.mncover;
}

// Produces the activation trace of a test input.
using TraceSource = std::function<ActivationTrace(const TestInput&)>;

inline TraceSource ModelTraceSource(std::shared_ptr<const TinyModel> model) {
  return [model = std::move(model)](const TestInput& in) {
    return Forward(*model, in.tokens, in.id);
  };
}

// Looks traces up by input id; the stored token ids must match the input.
inline TraceSource FileTraceSource(std::vector<ActivationTrace> traces) {
  auto index = std::make_shared<std::unordered_map<std::uint64_t, ActivationTrace>>();
  for (auto& t : traces) {
    const std::uint64_t id = t.input_id;
    if (!index->emplace(id, std::move(t)).second) {
      throw Error(ErrorCode::kFormat,
                  "duplicate trace for input id " + std::to_string(id));
    }
  }
  return [index](const TestInput& in) {
    auto it = index->find(in.id);
    if (it == index->end()) {
      throw Error(ErrorCode::kNotFound,
                  "no trace for input id " + std::to_string(in.id));
    }
    if (it->second.token_ids != in.tokens) {
      throw Error(ErrorCode::kProfileMismatch,
                  "trace for input id " + std::to_string(in.id) +
                      " was recorded for different tokens");
    }
    return it->second;
  };
}

// Fisher-Yates with a splitmix64 stream, identical on every platform.
inline TestSuite ShuffledSuite(const TestSuite& suite, std::uint64_t seed) {
  std::vector<TestInput> inputs = suite.inputs();
  SplitMix64 rng(seed);
  for (std::size_t i = inputs.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.Next() % i);
    std::swap(inputs[i - 1], inputs[j]);
  }
  return TestSuite(std::move(inputs));
}

// ---------------------------------------------------------------------------
// Filtering

struct CurvePoint {
  std::size_t index = 0;  // position in the suite
  std::uint64_t input_id = 0;
  double cover = 0.0;
  double mncover = 0.0;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct FilterOutcome {
  std::vector<std::uint64_t> kept;
  std::vector<std::uint64_t> discarded;
  std::vector<CurvePoint> curve;  // one point per kept input
  double threshold = 0.0;
  double size_reduction = 0.0;    // |discarded| / |suite|
  Metric metric = Metric::kMnCover;
  CoverageReport final_report;
};

struct FilterOptions {
  double threshold = 0.0;
  Metric metric = Metric::kMnCover;
};

// Walks the suite in order and keeps an input only when its prospective gain
// on the selected metric is strictly greater than the threshold. Only kept
// inputs are committed to the running state.
inline FilterOutcome Filter(const TestSuite& suite, const CoverageEngine& engine,
                            const TraceSource& source,
                            const FilterOptions& options = {}) {
  if (!(options.threshold >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "threshold must be >= 0");
  }
  FilterOutcome out;
  out.threshold = options.threshold;
  out.metric = options.metric;
  CoverageState state = engine.NewState();
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const TestInput& input = suite[i];
    const ActivationTrace trace = source(input);
    const double gain = Select(engine.PeekGain(state, trace), options.metric);
    if (gain > options.threshold) {
      engine.Ingest(state, trace);
      const CoverageReport r = engine.Report(state);
      out.kept.push_back(input.id);
      out.curve.push_back({i, input.id, r.cover, r.mncover});
    } else {
      out.discarded.push_back(input.id);
    }
  }
  out.size_reduction =
      suite.empty() ? 0.0
                    : static_cast<double>(out.discarded.size()) /
                          static_cast<double>(suite.size());
  out.final_report = engine.Report(state);
  return out;
}

// ---------------------------------------------------------------------------
// Comparison

struct CompareOutcome {
  std::vector<CoverageReport> individual;  // each suite alone
  std::vector<CoverageReport> cumulative;  // suites[0..i] together
};

inline CoverageState IngestSuite(const TestSuite& suite,
                                 const CoverageEngine& engine,
                                 const TraceSource& source) {
  CoverageState state = engine.NewState();
  for (const auto& input : suite) engine.Ingest(state, source(input));
  return state;
}

inline CompareOutcome Compare(std::span<const TestSuite> suites,
                              const CoverageEngine& engine,
                              const TraceSource& source) {
  if (suites.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "compare needs at least one suite");
  }
  CompareOutcome out;
  CoverageState running = engine.NewState();
  for (const auto& suite : suites) {
    const CoverageState alone = IngestSuite(suite, engine, source);
    running.Merge(alone);
    out.individual.push_back(engine.Report(alone));
    out.cumulative.push_back(engine.Report(running));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Coverage-guided greedy augmentation

// Maps token ids to a trace under the model that defines coverage.
using TokenTracer = std::function<ActivationTrace(
    const std::vector<std::uint32_t>& tokens, std::uint64_t input_id)>;

inline TokenTracer ModelTokenTracer(std::shared_ptr<const TinyModel> model) {
  return [model = std::move(model)](const std::vector<std::uint32_t>& tokens,
                                    std::uint64_t id) {
    return Forward(*model, tokens, id);
  };
}

// Mean over positions of the last layer's word activations.
inline std::vector<double> MeanPooledFinalLayer(const ActivationTrace& trace,
                                                const ModelProfile& profile) {
  std::vector<double> out(profile.hidden, 0.0);
  const std::size_t n = trace.length();
  if (n == 0) return out;
  const std::size_t last = profile.word_layers - 1;
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t d = 0; d < profile.hidden; ++d) {
      out[d] += WordAct(trace, profile, last, t, d);
    }
  }
  for (double& v : out) v /= static_cast<double>(n);
  return out;
}

// Cosine similarity; zero vectors compare as 0.
inline double CosineSimilarity(std::span<const double> a,
                               std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

struct AugmentOptions {
  std::size_t max_iter = 10;
  double similarity_floor = 0.85;
  Metric metric = Metric::kMnCover;
  std::uint64_t seed = 0;
};

// One candidate evaluation in the greedy search.
struct AugmentAttempt {
  std::size_t seed_index = 0;
  std::uint64_t seed_id = 0;
  std::size_t iteration = 0;
  std::size_t first = 0;   // pool index of T1
  std::size_t second = 0;  // pool index of T2
  bool first_from_queue = false;
  bool applied = false;    // both rewrites applied and the result fits
  double gain = 0.0;
  double similarity = 0.0;
  bool accepted = false;
  std::vector<std::uint32_t> tokens;  // candidate tokens when applied
  std::string text;
};

struct AugmentOutcome {
  TestSuite generated;
  std::vector<AugmentAttempt> log;
  CoverageReport final_report;
};

// For every seed: commit the seed's bins, then try up to max_iter candidates
// T2(T1(text)). T1 comes from the FIFO queue of previously successful
// rewrites when it is non-empty and from the pool otherwise; T2 always comes
// from the pool. A candidate is accepted when its gain on the selected
// metric is positive and its mean-pooled final-layer embedding has cosine
// similarity >= the floor with the seed's. An accepted candidate is
// committed to the state, T1 and T2 are enqueued and the search moves to the
// next seed. The queue persists across seeds.
inline AugmentOutcome Augment(const TestSuite& seeds,
                              std::span<const Transformation> pool,
                              const CoverageEngine& engine,
                              const TokenTracer& tracer,
                              const AugmentOptions& options = {}) {
  if (pool.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "transformation pool is empty");
  }
  if (seeds.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "seed suite is empty");
  }
  const ModelProfile& profile = engine.profile();
  const HashTokenizer tokenizer(profile.vocab_size);
  SplitMix64 rng(options.seed);
  std::deque<std::size_t> queue;
  CoverageState state = engine.NewState();
  AugmentOutcome out;
  std::uint64_t next_id = seeds.NextFreeId();

  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const TestInput& seed = seeds[s];
    const ActivationTrace seed_trace = tracer(seed.tokens, seed.id);
    engine.Ingest(state, seed_trace);
    const std::vector<double> seed_embedding =
        MeanPooledFinalLayer(seed_trace, profile);
    const Words text = seed.words();

    for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
      AugmentAttempt a;
      a.seed_index = s;
      a.seed_id = seed.id;
      a.iteration = iter;
      if (!queue.empty()) {
        a.first = queue.front();
        queue.pop_front();
        a.first_from_queue = true;
      } else {
        a.first = static_cast<std::size_t>(rng.Next() % pool.size());
      }
      a.second = static_cast<std::size_t>(rng.Next() % pool.size());
      const std::uint64_t seed1 = rng.Next();
      const std::uint64_t seed2 = rng.Next();

      std::optional<Words> candidate = pool[a.first].Apply(text, seed1);
      if (candidate) candidate = pool[a.second].Apply(*candidate, seed2);
      if (candidate && !candidate->empty() &&
          candidate->size() <= profile.max_len) {
        a.applied = true;
        a.tokens = tokenizer.Encode(*candidate);
        a.text = JoinWords(*candidate);
        const ActivationTrace trace = tracer(a.tokens, next_id);
        a.gain = Select(engine.PeekGain(state, trace), options.metric);
        a.similarity = CosineSimilarity(MeanPooledFinalLayer(trace, profile),
                                        seed_embedding);
        if (a.gain > 0.0 && a.similarity >= options.similarity_floor) {
          a.accepted = true;
          engine.Ingest(state, trace);
          queue.push_back(a.first);
          queue.push_back(a.second);
          TestInput g;
          g.id = next_id++;
          g.tokens = a.tokens;
          g.text = a.text;
          g.tag = pool[a.first].name + "+" + pool[a.second].name;
          out.generated.Add(std::move(g));
        }
      }
      const bool accepted = a.accepted;
      out.log.push_back(std::move(a));
      if (accepted) break;
    }
  }
  out.final_report = engine.Report(state);
  return out;
}

}  // namespace mncover

#endif  // MNCOVER_SUITE_OPS_HPP_
