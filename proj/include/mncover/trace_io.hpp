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

// Trace file layout, all integers and floats little-endian:
//
//   header  "MNTR" | u32 version | u32 n | n bytes canonical profile JSON
//           | u64 FNV-1a digest of the JSON
//   record  u64 input_id | u32 T | T x u32 token ids
//           | word_layers*T*hidden x f32 in [layer][t][dim] order
//           | attn_layers*heads*T*T x f32 in [layer][head][i][j] order
//
// Records follow the header until end of file. Record size is a function of
// T and the profile, so a short record is always detected.

#ifndef MNCOVER_TRACE_IO_HPP_
#define MNCOVER_TRACE_IO_HPP_

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mncover/binary_io.hpp"
#include "mncover/error.hpp"
#include "mncover/profile.hpp"
#include "mncover/trace.hpp"

namespace mncover {

inline constexpr std::uint32_t kTraceFormatVersion = 1;

class TraceWriter {
 public:
  TraceWriter(const std::string& path, const ModelProfile& profile)
      : path_(path), profile_(profile), out_(io::OpenOut(path)) {
    Validate(profile_);
    const std::string json = CanonicalJson(profile_);
    out_.write("MNTR", 4);
    io::PutLe(out_, kTraceFormatVersion);
    io::PutLe(out_, static_cast<std::uint32_t>(json.size()));
    out_.write(json.data(), static_cast<std::streamsize>(json.size()));
    io::PutLe(out_, Fnv1a(json));
    io::CheckWritten(out_, path_);
  }

  const ModelProfile& profile() const { return profile_; }

  void Write(const ActivationTrace& trace) {
    const std::size_t n = trace.length();
    if (n > profile_.max_len || trace.word_acts.size() != WordActCount(profile_, n) ||
        trace.attn_acts.size() != AttnActCount(profile_, n)) {
      throw Error(ErrorCode::kProfileMismatch,
                  "trace " + std::to_string(trace.input_id) +
                      " does not conform to the trace file profile");
    }
    for (std::uint32_t t : trace.token_ids) {
      if (t >= profile_.vocab_size) {
        throw Error(ErrorCode::kProfileMismatch,
                    "trace " + std::to_string(trace.input_id) +
                        ": token id out of vocabulary");
      }
    }
    io::PutLe(out_, trace.input_id);
    io::PutLe(out_, static_cast<std::uint32_t>(n));
    io::PutLeArray<std::uint32_t>(out_, trace.token_ids);
    io::PutLeArray<float>(out_, trace.word_acts);
    io::PutLeArray<float>(out_, trace.attn_acts);
    io::CheckWritten(out_, path_);
  }

  void Close() {
    out_.flush();
    io::CheckWritten(out_, path_);
    out_.close();
  }

 private:
  std::string path_;
  ModelProfile profile_;
  std::ofstream out_;
};

// Streaming reader. Holds at most one record in memory.
class TraceReader {
 public:
  explicit TraceReader(const std::string& path)
      : path_(path), in_(io::OpenIn(path)) {
    io::ExpectMagic(in_, "MNTR", "trace file " + path);
    const auto version = io::GetLe<std::uint32_t>(in_, "trace version");
    if (version != kTraceFormatVersion) {
      throw Error(ErrorCode::kFormat, "trace file " + path +
                                          ": unsupported version " +
                                          std::to_string(version));
    }
    const auto len = io::GetLe<std::uint32_t>(in_, "profile length");
    if (len > (1U << 20)) {
      throw Error(ErrorCode::kFormat,
                  "trace file " + path + ": implausible profile length");
    }
    std::string json(len, '\0');
    in_.read(json.data(), len);
    if (in_.gcount() != static_cast<std::streamsize>(len)) {
      throw Error(ErrorCode::kTruncated,
                  "trace file " + path + ": truncated profile");
    }
    digest_ = io::GetLe<std::uint64_t>(in_, "profile digest");
    if (digest_ != Fnv1a(json)) {
      throw Error(ErrorCode::kDigestMismatch,
                  "trace file " + path + ": profile digest mismatch");
    }
    try {
      profile_ = ProfileFromJson(nlohmann::json::parse(json));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kFormat,
                  "trace file " + path + ": bad profile JSON: " + e.what());
    }
    if (CanonicalJson(profile_) != json) {
      throw Error(ErrorCode::kFormat,
                  "trace file " + path + ": profile JSON is not canonical");
    }
  }

  const ModelProfile& profile() const { return profile_; }
  std::uint64_t digest() const { return digest_; }

  // Reads the next record into |trace|, reusing its buffers. Returns false
  // at a clean end of file.
  bool Next(ActivationTrace& trace) {
    if (in_.peek() == std::char_traits<char>::eof()) return false;
    const std::string where = "trace file " + path_ + " record " +
                              std::to_string(records_);
    trace.input_id = io::GetLe<std::uint64_t>(in_, where);
    const auto n = io::GetLe<std::uint32_t>(in_, where);
    if (n > profile_.max_len) {
      throw Error(ErrorCode::kFormat, where + ": length " + std::to_string(n) +
                                          " exceeds max_len");
    }
    trace.token_ids.resize(n);
    io::GetLeArray<std::uint32_t>(in_, trace.token_ids, where);
    trace.word_acts.resize(WordActCount(profile_, n));
    io::GetLeArray<float>(in_, trace.word_acts, where);
    trace.attn_acts.resize(AttnActCount(profile_, n));
    io::GetLeArray<float>(in_, trace.attn_acts, where);
    ++records_;
    const std::size_t bytes = trace.token_ids.capacity() * 4 +
                              trace.word_acts.capacity() * 4 +
                              trace.attn_acts.capacity() * 4;
    peak_record_bytes_ = std::max(peak_record_bytes_, bytes);
    return true;
  }

  std::optional<ActivationTrace> Next() {
    ActivationTrace t;
    if (!Next(t)) return std::nullopt;
    return t;
  }

  std::size_t records_read() const { return records_; }
  // Largest buffer footprint of any record handed out through Next(trace&).
  std::size_t peak_record_bytes() const { return peak_record_bytes_; }

 private:
  std::string path_;
  std::ifstream in_;
  ModelProfile profile_;
  std::uint64_t digest_ = 0;
  std::size_t records_ = 0;
  std::size_t peak_record_bytes_ = 0;
};

inline void WriteTraces(const std::string& path, const ModelProfile& profile,
                        const std::vector<ActivationTrace>& traces) {
  TraceWriter w(path, profile);
  for (const auto& t : traces) w.Write(t);
  w.Close();
}

inline std::pair<ModelProfile, std::vector<ActivationTrace>> ReadTraces(
    const std::string& path) {
  TraceReader r(path);
  std::vector<ActivationTrace> traces;
  ActivationTrace t;
  while (r.Next(t)) traces.push_back(t);
  return {r.profile(), std::move(traces)};
}

}  // namespace mncover

#endif  // MNCOVER_TRACE_IO_HPP_
