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

// A small frozen transformer used to produce activation traces without an
// external model. Each layer computes, per head k with head dim d = E / H:
//
//   alpha_k[i][j] = softmax_j( (Wq h_i)_k . (Wk h_j)_k / sqrt(d) )
//   hbar_i        = concat_k  sum_j alpha_k[i][j] (Wv h_j)_k
//   h'_i          = relu(hbar_i Wr + b1) Wo + b2
//
// There is no layer norm and no residual path. Weights are drawn uniformly
// from [-0.5, 0.5) by a splitmix64 stream, so a model is fully described by
// its shape and seed.

#ifndef MNCOVER_REFERENCE_TRANSFORMER_HPP_
#define MNCOVER_REFERENCE_TRANSFORMER_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mncover/binary_io.hpp"
#include "mncover/error.hpp"
#include "mncover/profile.hpp"
#include "mncover/trace.hpp"

namespace mncover {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t Next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double NextUnit() { return static_cast<double>(Next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

// The six integers that reproduce a model.
struct TinyModelConfig {
  std::uint32_t vocab_size = 200;
  std::uint32_t hidden = 32;
  std::uint32_t heads = 4;
  std::uint32_t layers = 3;
  std::uint32_t max_len = 16;
  std::uint64_t seed = 0;

  friend bool operator==(const TinyModelConfig&,
                         const TinyModelConfig&) = default;
};

// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct TransformerLayer {
  Matrix query;   // E x E, applied as W h
  Matrix key;     // E x E
  Matrix value;   // E x E
  Matrix ffn_in;  // E x E, applied as hbar Wr
  Matrix ffn_out; // E x E
  std::vector<double> bias_in;
  std::vector<double> bias_out;

  friend bool operator==(const TransformerLayer&,
                         const TransformerLayer&) = default;
};

struct TinyModel {
  TinyModelConfig config;
  Matrix embedding;  // vocab_size x E
  std::vector<TransformerLayer> layers;

  static TinyModel Generate(const TinyModelConfig& cfg) {
    if (cfg.vocab_size == 0 || cfg.hidden == 0 || cfg.heads == 0 ||
        cfg.layers == 0 || cfg.max_len == 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "model dimensions must all be >= 1");
    }
    if (cfg.hidden % cfg.heads != 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "hidden size " + std::to_string(cfg.hidden) +
                      " is not divisible by heads " +
                      std::to_string(cfg.heads));
    }
    SplitMix64 rng(cfg.seed);
    auto fill = [&](Matrix& m) {
      for (double& v : m.data) v = rng.NextUnit() - 0.5;
    };
    const std::size_t e = cfg.hidden;
    TinyModel model;
    model.config = cfg;
    model.embedding = Matrix(cfg.vocab_size, e);
    fill(model.embedding);
    for (std::uint32_t l = 0; l < cfg.layers; ++l) {
      TransformerLayer layer;
      for (Matrix* m : {&layer.query, &layer.key, &layer.value, &layer.ffn_in,
                        &layer.ffn_out}) {
        *m = Matrix(e, e);
        fill(*m);
      }
      layer.bias_in.resize(e);
      layer.bias_out.resize(e);
      for (double& v : layer.bias_in) v = rng.NextUnit() - 0.5;
      for (double& v : layer.bias_out) v = rng.NextUnit() - 0.5;
      model.layers.push_back(std::move(layer));
    }
    return model;
  }

  ModelProfile Profile(std::uint32_t bins = kDefaultBins,
                       double lambda = kDefaultLambda) const {
    ModelProfile p;
    p.word_layers = config.layers + 1;
    p.attn_layers = config.layers;
    p.heads = config.heads;
    p.hidden = config.hidden;
    p.max_len = config.max_len;
    p.vocab_size = config.vocab_size;
    p.bins = bins;
    p.lambda = lambda;
    return p;
  }
};

namespace detail {

inline void CheckTokens(const TinyModel& model,
                        std::span<const std::uint32_t> tokens) {
  if (tokens.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "input has no tokens");
  }
  if (tokens.size() > model.config.max_len) {
    throw Error(ErrorCode::kInvalidArgument,
                "input length " + std::to_string(tokens.size()) +
                    " exceeds max_len " +
                    std::to_string(model.config.max_len));
  }
  for (std::uint32_t t : tokens) {
    if (t >= model.config.vocab_size) {
      throw Error(ErrorCode::kOutOfRange,
                  "token id " + std::to_string(t) + " >= vocab_size " +
                      std::to_string(model.config.vocab_size));
    }
  }
}

// rows of |x| times W^T, i.e. y_i = W x_i.
inline Matrix ApplyLeft(const Matrix& w, const Matrix& x) {
  Matrix y(x.rows, w.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t o = 0; o < w.rows; ++o) {
      double acc = 0.0;
      for (std::size_t c = 0; c < w.cols; ++c) acc += w(o, c) * x(i, c);
      y(i, o) = acc;
    }
  }
  return y;
}

// rows of |x| times W, i.e. y_i = x_i W.
inline Matrix ApplyRight(const Matrix& x, const Matrix& w) {
  Matrix y(x.rows, w.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t c = 0; c < w.rows; ++c) {
      const double xv = x(i, c);
      for (std::size_t o = 0; o < w.cols; ++o) y(i, o) += xv * w(c, o);
    }
  }
  return y;
}

}  // namespace detail

// T x E matrix of layer-0 states (embedding rows).
inline Matrix Embed(const TinyModel& model,
                    std::span<const std::uint32_t> tokens) {
  detail::CheckTokens(model, tokens);
  const std::size_t e = model.config.hidden;
  Matrix h(tokens.size(), e);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    for (std::size_t d = 0; d < e; ++d) h(t, d) = model.embedding(tokens[t], d);
  }
  return h;
}

// Pre-softmax scores [head][i][j] of |layer| given its input states.
inline std::vector<double> AttentionLogits(const TinyModel& model,
                                           std::size_t layer,
                                           const Matrix& states) {
  const TransformerLayer& w = model.layers.at(layer);
  const std::size_t n = states.rows;
  const std::size_t heads = model.config.heads;
  const std::size_t d = model.config.hidden / heads;
  const Matrix q = detail::ApplyLeft(w.query, states);
  const Matrix k = detail::ApplyLeft(w.key, states);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<double> logits(heads * n * n);
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double dot = 0.0;
        for (std::size_t c = h * d; c < (h + 1) * d; ++c) dot += q(i, c) * k(j, c);
        logits[(h * n + i) * n + j] = dot * scale;
      }
    }
  }
  return logits;
}

inline ActivationTrace Forward(const TinyModel& model,
                               std::span<const std::uint32_t> tokens,
                               std::uint64_t input_id = 0) {
  const TinyModelConfig& cfg = model.config;
  const std::size_t n = tokens.size();
  const std::size_t e = cfg.hidden;
  const std::size_t heads = cfg.heads;
  const std::size_t hd = e / heads;

  ActivationTrace trace;
  trace.input_id = input_id;
  trace.token_ids.assign(tokens.begin(), tokens.end());
  trace.word_acts.reserve((cfg.layers + 1) * n * e);
  trace.attn_acts.reserve(cfg.layers * heads * n * n);

  Matrix h = Embed(model, tokens);
  auto emit_states = [&](const Matrix& m) {
    for (double v : m.data) trace.word_acts.push_back(static_cast<float>(v));
  };
  emit_states(h);

  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const TransformerLayer& w = model.layers[l];
    std::vector<double> alpha = AttentionLogits(model, l, h);
    for (std::size_t row = 0; row < heads * n; ++row) {
      double* r = &alpha[row * n];
      double mx = r[0];
      for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, r[j]);
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        r[j] = std::exp(r[j] - mx);
        sum += r[j];
      }
      for (std::size_t j = 0; j < n; ++j) r[j] /= sum;
    }
    for (double a : alpha) trace.attn_acts.push_back(static_cast<float>(a));

    const Matrix v = detail::ApplyLeft(w.value, h);
    Matrix mixed(n, e);
    for (std::size_t k = 0; k < heads; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const double a = alpha[(k * n + i) * n + j];
          for (std::size_t c = k * hd; c < (k + 1) * hd; ++c) {
            mixed(i, c) += a * v(j, c);
          }
        }
      }
    }
    Matrix inner = detail::ApplyRight(mixed, w.ffn_in);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < e; ++c) {
        inner(i, c) = std::max(0.0, inner(i, c) + w.bias_in[c]);
      }
    }
    h = detail::ApplyRight(inner, w.ffn_out);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < e; ++c) h(i, c) += w.bias_out[c];
    }
    emit_states(h);
  }
  return trace;
}

inline nlohmann::json ToJson(const TinyModelConfig& c) {
  return nlohmann::json{{"vocab_size", c.vocab_size}, {"hidden", c.hidden},
                        {"heads", c.heads},           {"layers", c.layers},
                        {"max_len", c.max_len},       {"seed", c.seed}};
}

inline TinyModelConfig ModelConfigFromJson(const nlohmann::json& j) {
  TinyModelConfig c;
  try {
    c.vocab_size = j.at("vocab_size").get<std::uint32_t>();
    c.hidden = j.at("hidden").get<std::uint32_t>();
    c.heads = j.at("heads").get<std::uint32_t>();
    c.layers = j.at("layers").get<std::uint32_t>();
    c.max_len = j.at("max_len").get<std::uint32_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat,
                std::string("malformed model file: ") + e.what());
  }
  return c;
}

inline void SaveModelConfig(const TinyModelConfig& c, const std::string& path) {
  auto out = io::OpenOut(path);
  out << ToJson(c).dump() << '\n';
  io::CheckWritten(out, path);
}

inline TinyModelConfig LoadModelConfig(const std::string& path) {
  auto in = io::OpenIn(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat,
                "model file " + path + " is not JSON: " + e.what());
  }
  return ModelConfigFromJson(j);
}

}  // namespace mncover

#endif  // MNCOVER_REFERENCE_TRANSFORMER_HPP_
