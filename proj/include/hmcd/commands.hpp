#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hmcd/dataset_io.hpp"
#include "hmcd/factorize.hpp"
#include "hmcd/metrics.hpp"
#include "hmcd/report_io.hpp"
#include "hmcd/synth.hpp"

// The three pipeline steps behind the command-line tool, as plain functions
// over option structs. Argument parsing and logging live in the tool itself.

namespace hmcd {

inline constexpr const char* kTruthName = "truth.json";
inline constexpr const char* kTraceName = "trace.csv";
inline constexpr const char* kPartitionsName = "partitions.json";
inline constexpr const char* kGlobalCsvName = "global.csv";
inline constexpr const char* kReportJsonName = "report.json";
inline constexpr const char* kReportCsvName = "report.csv";

inline std::optional<AlignmentMode> parse_alignment_mode(std::string_view s) {
  if (s == "full") return AlignmentMode::full;
  if (s == "partial") return AlignmentMode::partial;
  return std::nullopt;
}

// "NETWORK:ATTRIBUTE:TERM=VALUE", e.g. "G1:content:theta=0.5". Overrides one
// weight of one block, starting from the defaults for untouched terms.
inline void apply_weight_override(Hyperparameters& hyper, const std::string& spec) {
  const auto eq = spec.rfind('=');
  const auto c2 = spec.rfind(':', eq);
  const auto c1 = c2 == std::string::npos || c2 == 0 ? std::string::npos : spec.rfind(':', c2 - 1);
  if (eq == std::string::npos || c2 == std::string::npos || c1 == std::string::npos || c1 == 0)
    throw InputError("weight override '" + spec + "' is not NETWORK:ATTRIBUTE:TERM=VALUE");
  const std::string network = spec.substr(0, c1);
  const auto kind = parse_attribute(spec.substr(c1 + 1, c2 - c1 - 1));
  const std::string term = spec.substr(c2 + 1, eq - c2 - 1);
  double value = 0.0;
  if (!kind) throw InputError("weight override '" + spec + "': unknown attribute");
  if (!detail::parse_number(std::string_view(spec).substr(eq + 1), value))
    throw InputError("weight override '" + spec + "': value is not a number");
  auto [it, inserted] = hyper.overrides.try_emplace({network, *kind}, hyper.defaults);
  auto& w = it->second;
  if (term == "alpha") w.alpha = value;
  else if (term == "beta") w.beta = value;
  else if (term == "gamma") w.gamma = value;
  else if (term == "theta") w.theta = value;
  else throw InputError("weight override '" + spec + "': unknown term '" + term + "'");
}

// ---------------------------------------------------------------------------
// generate

struct GenerateOptions {
  SynthConfig synth;
  AlignmentMode mode = AlignmentMode::partial;
  std::filesystem::path out;
};

struct GenerateResult {
  SynthOutput output;
  std::vector<std::string> warnings;
};

inline GenerateResult cmd_generate(const GenerateOptions& opt) {
  if (opt.out.empty()) throw InputError("generate: no output directory");
  GenerateResult r;
  r.output = generate_dataset(opt.synth, opt.mode);
  for (std::size_t l = 0; l < r.output.truth.layers.size(); ++l) {
    std::vector<bool> used(opt.synth.k_planted, false);
    for (auto c : r.output.truth.layers[l].labels) used[c] = true;
    std::size_t empty = 0;
    for (bool u : used) empty += !u;
    if (empty)
      r.warnings.push_back(layer_id(l) + ": " + std::to_string(empty) +
                           " planted communities have no members");
  }
  save_dataset(r.output.dataset, opt.out);
  write_json_file(opt.out / kTruthName, truth_to_json(r.output.dataset, r.output.truth));
  return r;
}

// ---------------------------------------------------------------------------
// detect

struct DetectOptions {
  std::filesystem::path dataset;
  Hyperparameters hyper;
  std::filesystem::path out;
  bool timings = false;  // fill the trace's seconds column (not reproducible)
};

struct DetectResult {
  HmcdResult run;
  DetectionOutput partitions;
  std::vector<std::string> warnings;
};

inline std::string partition_csv_name(const char* prefix, std::size_t network, AttributeKind kind) {
  return std::string(prefix) + "_" + std::to_string(network) + "_" + std::string(to_string(kind)) +
         ".csv";
}

inline DetectResult cmd_detect(const DetectOptions& opt) {
  if (opt.out.empty()) throw InputError("detect: no output directory");
  const auto ds = load_dataset(opt.dataset);
  DetectResult r;
  r.run = run_hmcd(ds, opt.hyper);
  r.partitions = collect_partitions(r.run);
  r.warnings = r.run.problem.warnings;
  if (!r.run.uncovered_global_users.empty())
    r.warnings.push_back(std::to_string(r.run.uncovered_global_users.size()) +
                         " global users belong to no network; their consensus rows are zero");

  std::filesystem::create_directories(opt.out);
  write_stream_file(opt.out / kTraceName,
                    [&](std::ostream& os) { write_trace_csv(os, r.run.trace, opt.timings); });
  write_json_file(opt.out / kPartitionsName, partitions_to_json(ds, r.partitions));
  write_stream_file(opt.out / kGlobalCsvName, [&](std::ostream& os) {
    write_partition_csv(os, ds.global_users, r.partitions.global);
  });
  for (const auto& [key, part] : r.partitions.local)
    write_stream_file(opt.out / partition_csv_name("local", key.first, key.second),
                      [&](std::ostream& os) {
                        write_partition_csv(os, ds.networks[key.first].users, part);
                      });
  for (const auto& [key, part] : r.partitions.overlap)
    write_stream_file(opt.out / partition_csv_name("overlap", key.first, key.second),
                      [&](std::ostream& os) {
                        write_partition_csv(os, ds.networks[key.first].overlapping_users, part);
                      });
  return r;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOptions {
  std::filesystem::path dataset;
  std::filesystem::path partitions;       // partitions.json written by detect
  std::optional<std::filesystem::path> truth;  // default: <dataset>/truth.json
  std::filesystem::path out;
};

struct EvaluateResult {
  MetricReport report;
  std::vector<std::string> warnings;
};

inline EvaluateResult cmd_evaluate(const EvaluateOptions& opt) {
  if (opt.out.empty()) throw InputError("evaluate: no output directory");
  const auto ds = load_dataset(opt.dataset);
  const auto parts = partitions_from_json(ds, read_json_file(opt.partitions));

  EvaluateResult r;
  const auto truth_path = opt.truth.value_or(opt.dataset / kTruthName);
  std::optional<std::map<std::size_t, Partition>> truth;
  if (std::filesystem::exists(truth_path))
    truth = truth_from_json(ds, read_json_file(truth_path));
  else
    r.warnings.push_back("no truth file at " + truth_path.string() +
                         "; planted-label NMI skipped");

  r.report = evaluate_partitions(ds, to_detection_partitions(parts), truth ? &*truth : nullptr);
  r.warnings.insert(r.warnings.end(), r.report.warnings.begin(), r.report.warnings.end());
  std::filesystem::create_directories(opt.out);
  write_json_file(opt.out / kReportJsonName, report_to_json(r.report));
  write_stream_file(opt.out / kReportCsvName,
                    [&](std::ostream& os) { write_report_csv(os, r.report); });
  return r;
}

}  // namespace hmcd
