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

// Command-line driver: generate traces from the reference model, calibrate
// neuron ranges, and measure, filter, compare or augment test suites.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mncover/mncover.hpp"
#include "nlohmann/json.hpp"

namespace mncover {
namespace {

using Json = nlohmann::ordered_json;

constexpr int kUsageExit = 2;
constexpr int kInternalExit = 1;

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return 3;
    case ErrorCode::kOutOfRange: return 4;
    case ErrorCode::kOverflow: return 5;
    case ErrorCode::kProfileMismatch: return 6;
    case ErrorCode::kDigestMismatch: return 7;
    case ErrorCode::kFormat: return 8;
    case ErrorCode::kTruncated: return 9;
    case ErrorCode::kIo: return 10;
    case ErrorCode::kNotFound: return 11;
  }
  return kInternalExit;
}

void PrintError(std::string_view code, int exit_code, const std::string& message) {
  std::cerr << "error code=" << code << " exit=" << exit_code
            << " message=" << nlohmann::json(message).dump() << '\n';
}

struct Options {
  // Inputs.
  std::string traces, ranges, masks, model;
  std::vector<std::string> suites;
  // Outputs.
  std::string out, state, curve, kept, log, report, csv, model_out;
  // Numeric options; bins and lambda fall back to the data's profile.
  std::optional<std::uint32_t> bins;
  std::optional<double> lambda;
  double threshold = 0.0;
  std::size_t max_iter = 10;
  double sim_floor = 0.85;
  std::uint64_t seed = 0;
  bool shuffle = false;
  std::size_t shards = 1;
  Metric metric = Metric::kMnCover;
  AttentionRange attention = AttentionRange::kCalibrated;
  TinyModelConfig shape;
};

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string Hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

const char* MetricName(Metric m) {
  return m == Metric::kCover ? "cover" : "mncover";
}

void RequireFile(const std::string& path, const char* what) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) {
    throw Error(ErrorCode::kNotFound, std::string(what) + " not found: " + path);
  }
}

void WriteFile(const std::string& path, const std::string& content) {
  auto out = io::OpenOut(path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  io::CheckWritten(out, path);
}

ModelProfile WithOverrides(ModelProfile p, const Options& o) {
  if (o.bins) p.bins = *o.bins;
  if (o.lambda) p.lambda = *o.lambda;
  Validate(p);
  return p;
}

Json ReportJson(const CoverageReport& r, const ModelProfile& p) {
  Json j;
  j["bins"] = p.bins;
  j["lambda"] = p.lambda;
  j["awb"] = r.awb;
  j["aab"] = r.aab;
  j["masked_awb"] = r.masked_awb;
  j["masked_aab"] = r.masked_aab;
  j["word_bins"] = r.word_bins;
  j["attn_bins"] = r.attn_bins;
  j["cover"] = r.cover;
  j["mncover"] = r.mncover;
  j["implicit_all_ones_mask"] = r.implicit_all_ones_mask;
  return j;
}

std::string ReportText(const CoverageReport& r) {
  std::string s;
  s += "word bins activated:      " + std::to_string(r.awb) + " / " +
       std::to_string(r.word_bins) + "\n";
  s += "attention bins activated: " + std::to_string(r.aab) + " / " +
       std::to_string(r.attn_bins) + "\n";
  s += "masked word bins:         " + std::to_string(r.masked_awb) + "\n";
  s += "masked attention bins:    " + std::to_string(r.masked_aab) + "\n";
  s += "cover:   " + Num(r.cover) + "\n";
  s += "mncover: " + Num(r.mncover) + (r.implicit_all_ones_mask ? " (no mask)" : "") + "\n";
  return s;
}

// Everything the suite-level subcommands share: the engine and a way to
// obtain each input's trace.
struct Context {
  ModelProfile profile;
  std::shared_ptr<const TinyModel> model;
  std::unique_ptr<CoverageEngine> engine;
  TraceSource source;
};

Context LoadContext(const Options& o, bool need_model) {
  Context c;
  ModelProfile base;
  if (!o.model.empty()) {
    c.model = std::make_shared<TinyModel>(TinyModel::Generate(LoadModelConfig(o.model)));
    base = c.model->Profile(o.bins.value_or(kDefaultBins),
                            o.lambda.value_or(kDefaultLambda));
    c.source = ModelTraceSource(c.model);
  } else if (need_model) {
    throw Error(ErrorCode::kInvalidArgument, "--model is required");
  } else if (!o.traces.empty()) {
    auto [profile, traces] = ReadTraces(o.traces);
    base = profile;
    c.source = FileTraceSource(std::move(traces));
  } else {
    throw Error(ErrorCode::kInvalidArgument, "one of --traces or --model is required");
  }
  c.profile = WithOverrides(base, o);
  auto ranges = std::make_shared<NeuronRanges>(LoadRanges(o.ranges, base));
  std::shared_ptr<const MaskPair> masks;
  if (!o.masks.empty()) {
    masks = std::make_shared<MaskPair>(LoadMasks(o.masks, base.vocab_size));
  }
  c.engine = std::make_unique<CoverageEngine>(c.profile, std::move(ranges), std::move(masks));
  return c;
}

TestSuite LoadSuiteFor(const std::string& path, const ModelProfile& profile) {
  const HashTokenizer tokenizer(profile.vocab_size);
  return LoadSuite(path, &tokenizer);
}

// ---------------------------------------------------------------------------
// Subcommands

void GenTraces(const Options& o) {
  TinyModelConfig cfg = o.shape;
  if (!o.model.empty()) cfg = LoadModelConfig(o.model);
  const TinyModel model = TinyModel::Generate(cfg);
  const ModelProfile profile =
      model.Profile(o.bins.value_or(kDefaultBins), o.lambda.value_or(kDefaultLambda));
  const TestSuite suite = LoadSuiteFor(o.suites.at(0), profile);
  if (!o.model_out.empty()) SaveModelConfig(cfg, o.model_out);
  TraceWriter writer(o.out, profile);
  for (const auto& input : suite) writer.Write(Forward(model, input.tokens, input.id));
  writer.Close();
  std::cout << "wrote " << suite.size() << " traces to " << o.out
            << " (profile digest " << Hex(Digest(profile)) << ")\n";
}

void CalibrateCmd(const Options& o) {
  TraceReader reader(o.traces);
  RangeAccumulator acc(reader.profile(), o.attention);
  ActivationTrace t;
  while (reader.Next(t)) acc.Add(t);
  const NeuronRanges r = acc.Finish();
  SaveRanges(r, o.out);
  std::cout << "calibrated on " << acc.traces_seen() << " traces\n"
            << "word neurons observed:      " << r.word_observed.count() << " / "
            << r.word_observed.size() << "\n"
            << "attention neurons observed: " << r.attn_observed.count() << " / "
            << r.attn_observed.size() << "\n";
}

void CoverCmd(const Options& o) {
  TraceReader reader(o.traces);
  const ModelProfile base = reader.profile();
  const ModelProfile profile = WithOverrides(base, o);
  auto ranges = std::make_shared<NeuronRanges>(LoadRanges(o.ranges, base));
  std::shared_ptr<const MaskPair> masks;
  if (!o.masks.empty()) {
    masks = std::make_shared<MaskPair>(LoadMasks(o.masks, base.vocab_size));
  }
  const CoverageEngine engine(profile, std::move(ranges), std::move(masks));
  CoverageState state = engine.NewState();
  std::size_t n = 0;
  if (o.shards > 1) {
    std::vector<ActivationTrace> traces;
    while (auto t = reader.Next()) traces.push_back(std::move(*t));
    n = traces.size();
    state = IngestSharded(engine, traces, o.shards);
  } else {
    ActivationTrace t;
    while (reader.Next(t)) {
      engine.Ingest(state, t);
      ++n;
    }
  }
  const CoverageReport r = engine.Report(state);
  if (!o.state.empty()) SaveState(state, o.state);
  Json j = ReportJson(r, profile);
  j["traces"] = n;
  if (!o.out.empty()) WriteFile(o.out, j.dump(2) + "\n");
  std::cout << "traces: " << n << "\n" << ReportText(r);
}

void FilterCmd(const Options& o) {
  Context c = LoadContext(o, false);
  TestSuite suite = LoadSuiteFor(o.suites.at(0), c.profile);
  if (o.shuffle) suite = ShuffledSuite(suite, o.seed);
  const FilterOutcome f = Filter(suite, *c.engine, c.source, {o.threshold, o.metric});

  Json j;
  j["metric"] = MetricName(f.metric);
  j["threshold"] = f.threshold;
  j["shuffled"] = o.shuffle;
  j["seed"] = o.seed;
  j["suite_size"] = suite.size();
  j["kept_count"] = f.kept.size();
  j["size_reduction"] = f.size_reduction;
  j["kept"] = f.kept;
  j["discarded"] = f.discarded;
  j["report"] = ReportJson(f.final_report, c.profile);
  Json curve = Json::array();
  std::string csv = "index,input_id,cover,mncover\n";
  for (const auto& pt : f.curve) {
    curve.push_back({{"index", pt.index}, {"input_id", pt.input_id},
                     {"cover", pt.cover}, {"mncover", pt.mncover}});
    csv += std::to_string(pt.index) + "," + std::to_string(pt.input_id) + "," +
           Num(pt.cover) + "," + Num(pt.mncover) + "\n";
  }
  j["curve"] = std::move(curve);
  if (!o.out.empty()) WriteFile(o.out, j.dump(2) + "\n");
  if (!o.curve.empty()) WriteFile(o.curve, csv);
  if (!o.kept.empty()) {
    TestSuite kept;
    for (const auto& pt : f.curve) kept.Add(suite[pt.index]);
    SaveSuite(kept, o.kept);
  }
  std::cout << "kept " << f.kept.size() << " of " << suite.size()
            << " inputs (threshold " << Num(f.threshold) << " on "
            << MetricName(f.metric) << ")\n"
            << "size reduction: " << Num(f.size_reduction) << "\n"
            << ReportText(f.final_report);
}

void CompareCmd(const Options& o) {
  Context c = LoadContext(o, false);
  std::vector<TestSuite> suites;
  for (const auto& path : o.suites) suites.push_back(LoadSuiteFor(path, c.profile));
  const CompareOutcome out = Compare(suites, *c.engine, c.source);

  Json rows = Json::array();
  std::string csv =
      "suite,path,size,cover,mncover,cumulative_cover,cumulative_mncover\n";
  for (std::size_t i = 0; i < suites.size(); ++i) {
    const auto& a = out.individual[i];
    const auto& b = out.cumulative[i];
    rows.push_back({{"path", o.suites[i]},
                    {"size", suites[i].size()},
                    {"individual", ReportJson(a, c.profile)},
                    {"cumulative", ReportJson(b, c.profile)}});
    csv += std::to_string(i) + "," + o.suites[i] + "," +
           std::to_string(suites[i].size()) + "," + Num(a.cover) + "," +
           Num(a.mncover) + "," + Num(b.cover) + "," + Num(b.mncover) + "\n";
    std::cout << "suite " << i << " (" << o.suites[i] << ", "
              << suites[i].size() << " inputs): cover " << Num(a.cover)
              << " mncover " << Num(a.mncover) << "; cumulative cover "
              << Num(b.cover) << " mncover " << Num(b.mncover) << "\n";
  }
  Json j;
  j["suites"] = std::move(rows);
  if (!o.out.empty()) WriteFile(o.out, j.dump(2) + "\n");
  if (!o.csv.empty()) WriteFile(o.csv, csv);
}

void AugmentCmd(const Options& o) {
  Context c = LoadContext(o, true);
  const TestSuite seeds = LoadSuiteFor(o.suites.at(0), c.profile);
  const auto pool = BuiltinTransformations();
  AugmentOptions opts;
  opts.max_iter = o.max_iter;
  opts.similarity_floor = o.sim_floor;
  opts.metric = o.metric;
  opts.seed = o.seed;
  const AugmentOutcome out =
      Augment(seeds, pool, *c.engine, ModelTokenTracer(c.model), opts);

  if (!o.out.empty()) SaveSuite(out.generated, o.out);
  if (!o.log.empty()) {
    std::string csv =
        "seed_index,seed_id,iteration,first,second,first_from_queue,applied,"
        "gain,similarity,accepted\n";
    for (const auto& a : out.log) {
      csv += std::to_string(a.seed_index) + "," + std::to_string(a.seed_id) +
             "," + std::to_string(a.iteration) + "," + pool[a.first].name +
             "," + pool[a.second].name + "," + (a.first_from_queue ? "1" : "0") +
             "," + (a.applied ? "1" : "0") + "," + Num(a.gain) + "," +
             Num(a.similarity) + "," + (a.accepted ? "1" : "0") + "\n";
    }
    WriteFile(o.log, csv);
  }
  if (!o.report.empty()) {
    Json j;
    j["metric"] = MetricName(o.metric);
    j["max_iter"] = o.max_iter;
    j["sim_floor"] = o.sim_floor;
    j["seed"] = o.seed;
    j["seeds"] = seeds.size();
    j["generated"] = out.generated.size();
    j["attempts"] = out.log.size();
    j["report"] = ReportJson(out.final_report, c.profile);
    WriteFile(o.report, j.dump(2) + "\n");
  }
  std::cout << "generated " << out.generated.size() << " inputs from "
            << seeds.size() << " seeds in " << out.log.size() << " attempts\n"
            << ReportText(out.final_report);
}

// ---------------------------------------------------------------------------
// Argument parsing

void AddBinsLambda(CLI::App* cmd, Options& o) {
  cmd->add_option("--bins", o.bins, "Bins per neuron (default: from the data, else 10)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--lambda", o.lambda, "Attention weight (default: from the data, else 1.0)")
      ->check(CLI::NonNegativeNumber);
}

void AddEngineInputs(CLI::App* cmd, Options& o) {
  cmd->add_option("--ranges", o.ranges, "Calibrated ranges file")->required();
  cmd->add_option("--masks", o.masks, "Mask file (default: all-ones)");
  AddBinsLambda(cmd, o);
}

void AddTraceOrModel(CLI::App* cmd, Options& o) {
  auto* t = cmd->add_option("--traces", o.traces, "Trace file holding every input");
  auto* m = cmd->add_option("--model", o.model, "Reference model config (JSON)");
  t->excludes(m);
}

void AddMetric(CLI::App* cmd, Options& o) {
  cmd->add_option("--metric", o.metric, "Gain metric: cover or mncover")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, Metric>{{"cover", Metric::kCover},
                                        {"mncover", Metric::kMnCover}}));
}

int Run(int argc, char** argv) {
  CLI::App app{"Mask neuron coverage for transformer test suites"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen-traces", "Run the reference model over a suite");
  gen->add_option("--suite", o.suites, "Input suite (JSONL)")->required()->expected(1);
  gen->add_option("--out", o.out, "Trace file to write")->required();
  gen->add_option("--model", o.model, "Model config (JSON); overrides the shape flags");
  gen->add_option("--model-out", o.model_out, "Write the model config here");
  gen->add_option("--vocab", o.shape.vocab_size, "Vocabulary size")->capture_default_str();
  gen->add_option("--hidden", o.shape.hidden, "Hidden size")->capture_default_str();
  gen->add_option("--heads", o.shape.heads, "Attention heads")->capture_default_str();
  gen->add_option("--layers", o.shape.layers, "Transformer layers")->capture_default_str();
  gen->add_option("--max-len", o.shape.max_len, "Maximum sequence length")->capture_default_str();
  gen->add_option("--seed", o.shape.seed, "Weight seed")->capture_default_str();
  AddBinsLambda(gen, o);

  auto* cal = app.add_subcommand("calibrate", "Compute per-neuron ranges");
  cal->add_option("--traces", o.traces, "Calibration trace file")->required();
  cal->add_option("--out", o.out, "Ranges file to write")->required();
  cal->add_option("--attention-range", o.attention, "calibrated or unit")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, AttentionRange>{{"calibrated", AttentionRange::kCalibrated},
                                                {"unit", AttentionRange::kUnit}}));

  auto* cover = app.add_subcommand("cover", "Report coverage of a trace file");
  cover->add_option("--traces", o.traces, "Trace file")->required();
  AddEngineInputs(cover, o);
  cover->add_option("--out", o.out, "Report (JSON)");
  cover->add_option("--state", o.state, "Write a coverage state snapshot");
  cover->add_option("--shards", o.shards, "Ingest on this many threads")
      ->check(CLI::PositiveNumber);

  auto* filter = app.add_subcommand("filter", "Drop inputs that add little coverage");
  filter->add_option("--suite", o.suites, "Suite to filter (JSONL)")->required()->expected(1);
  AddTraceOrModel(filter, o);
  AddEngineInputs(filter, o);
  AddMetric(filter, o);
  filter->add_option("--threshold", o.threshold, "Keep inputs whose gain exceeds this")
      ->check(CLI::NonNegativeNumber);
  filter->add_flag("--shuffle", o.shuffle, "Shuffle the suite with --seed first");
  filter->add_option("--seed", o.seed, "Shuffle seed");
  filter->add_option("--out", o.out, "Report (JSON)");
  filter->add_option("--curve", o.curve, "Coverage curve rows (CSV)");
  filter->add_option("--kept", o.kept, "Filtered suite (JSONL)");

  auto* compare = app.add_subcommand("compare", "Compare the coverage of several suites");
  compare->add_option("--suite", o.suites, "Suite (JSONL); repeat for each")->required();
  AddTraceOrModel(compare, o);
  AddEngineInputs(compare, o);
  compare->add_option("--out", o.out, "Report (JSON)");
  compare->add_option("--csv", o.csv, "Per-suite rows (CSV)");

  auto* aug = app.add_subcommand("augment", "Generate coverage-increasing inputs");
  aug->add_option("--suite", o.suites, "Seed suite (JSONL)")->required()->expected(1);
  aug->add_option("--model", o.model, "Reference model config (JSON)")->required();
  AddEngineInputs(aug, o);
  AddMetric(aug, o);
  aug->add_option("--max-iter", o.max_iter, "Candidates tried per seed")->capture_default_str();
  aug->add_option("--sim-floor", o.sim_floor, "Minimum cosine similarity to the seed")
      ->capture_default_str();
  aug->add_option("--seed", o.seed, "Search seed");
  aug->add_option("--out", o.out, "Generated suite (JSONL)");
  aug->add_option("--log", o.log, "Every attempt (CSV)");
  aug->add_option("--report", o.report, "Report (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    PrintError("usage", kUsageExit, e.what());
    return kUsageExit;
  }

  try {
    for (const auto& p : {o.traces, o.ranges, o.masks, o.model}) {
      if (!p.empty()) RequireFile(p, "input file");
    }
    for (const auto& p : o.suites) RequireFile(p, "suite file");

    if (*gen) GenTraces(o);
    else if (*cal) CalibrateCmd(o);
    else if (*cover) CoverCmd(o);
    else if (*filter) FilterCmd(o);
    else if (*compare) CompareCmd(o);
    else if (*aug) AugmentCmd(o);
  } catch (const Error& e) {
    const int code = ExitCodeFor(e.code());
    PrintError(ErrorCodeName(e.code()), code, e.what());
    return code;
  } catch (const std::exception& e) {
    PrintError("internal", kInternalExit, e.what());
    return kInternalExit;
  }
  return 0;
}

}  // namespace
}  // namespace mncover

int main(int argc, char** argv) { return mncover::Run(argc, argv); }
