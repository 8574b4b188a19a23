// hmcd: generate benchmark datasets, detect communities, evaluate partitions.
//
// Every subcommand accepts --config FILE with `key = value` lines whose keys
// are the long option names (see README); flags given on the command line
// override the file.

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "hmcd/commands.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kSolver = 3 };

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("hmcd");
  logger->set_pattern("hmcd: %l: %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("HMCD_LOG")) {
    const std::string level = env;
    if (level == "error") spdlog::set_level(spdlog::level::err);
    else if (level == "warn") spdlog::set_level(spdlog::level::warn);
    else if (level == "info") spdlog::set_level(spdlog::level::info);
    else if (level == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::warn("ignoring HMCD_LOG='{}' (expected error, warn, info or debug)", level);
  }
}

// Expands `<sub> --config FILE` into the file's `key = value` items as
// options placed before the command-line ones; with last-value-wins parsing,
// flags on the command line override the file.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::vector<std::string> from_file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    std::size_t erase = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      erase = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      erase = 1;
    }
    if (erase == 0) continue;
    for (const auto& item : CLI::ConfigTOML().from_file(path)) {
      if (item.name == "++" || item.name == "--") continue;  // section markers
      if (!item.parents.empty())
        throw CLI::ConversionError("config key '" + item.fullname() + "' has a section prefix");
      const std::string opt = (item.name.size() == 1 ? "-" : "--") + item.name;
      for (const auto& value : item.inputs) {
        from_file.push_back(opt);
        from_file.push_back(value);
      }
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
               args.begin() + static_cast<std::ptrdiff_t>(i + erase));
    --i;
  }
  if (!from_file.empty() && !args.empty())
    args.insert(args.begin() + 1, from_file.begin(), from_file.end());
  return args;
}

void log_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) spdlog::warn("{}", w);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Community detection for partially aligned multiple social networks"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  // generate
  hmcd::GenerateOptions gen;
  std::string gen_out, alignment = "partial";
  auto* g = app.add_subcommand("generate", "write a planted multilayer benchmark dataset");
  std::string config_path;  // consumed by expand_config, listed for --help
  g->add_option("--config", config_path, "key = value configuration file");
  g->add_option("--out", gen_out, "output dataset directory")->required();
  g->add_option("--alignment", alignment, "full or partial")->check(CLI::IsMember({"full", "partial"}));
  g->add_option("--layers", gen.synth.layers);
  g->add_option("--nodes", gen.synth.nodes_per_layer, "nodes per layer");
  g->add_option("--k-planted", gen.synth.k_planted);
  g->add_option("--mu", gen.synth.mu, "mixing parameter");
  g->add_option("--p", gen.synth.p, "label copy probability between layers");
  g->add_option("--k-min", gen.synth.k_min);
  g->add_option("--k-max", gen.synth.k_max);
  g->add_option("--t-k", gen.synth.t_k, "degree power-law exponent");
  g->add_option("--seed", gen.synth.seed);

  // detect
  hmcd::DetectOptions det;
  std::string det_dataset, det_out;
  std::vector<std::string> weight_overrides;
  auto& hp = det.hyper;
  auto* d = app.add_subcommand("detect", "run the factorization and write partitions");
  d->add_option("--config", config_path, "key = value configuration file");
  d->add_option("--dataset", det_dataset, "dataset directory")->required();
  d->add_option("--out", det_out, "output directory")->required();
  d->add_option("-k,--k", hp.k, "community count");
  d->add_option("--alpha", hp.defaults.alpha);
  d->add_option("--beta", hp.defaults.beta);
  d->add_option("--gamma", hp.defaults.gamma);
  d->add_option("--theta", hp.defaults.theta);
  d->add_option("--weight", weight_overrides, "per-block override NETWORK:ATTRIBUTE:TERM=VALUE")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  d->add_option("--inner-max-iters", hp.inner_max_iters);
  d->add_option("--outer-max-iters", hp.outer_max_iters);
  d->add_option("--rel-tol", hp.rel_tol);
  d->add_option("--guard-eps", hp.guard_eps);
  d->add_option("--seed", hp.seed);
  d->add_option("--relation-diagonal", hp.relation_diagonal, "added to the diagonal of initial D");
  d->add_option("--scaled-init", hp.scaled_init, "rescale the initial D to the adjacency mass");
  d->add_option("--monotone-guard", hp.monotone_guard, "backtrack steps that raise the objective");
  d->add_flag("--timings", det.timings, "record wall-clock seconds in the trace");

  // evaluate
  hmcd::EvaluateOptions ev;
  std::string ev_dataset, ev_partitions, ev_truth, ev_out;
  auto* e = app.add_subcommand("evaluate", "compute quality and fusion metrics");
  e->add_option("--config", config_path, "key = value configuration file");
  e->add_option("--dataset", ev_dataset, "dataset directory")->required();
  e->add_option("--partitions", ev_partitions, "partitions.json from detect")->required();
  e->add_option("--truth", ev_truth, "planted labels (default: <dataset>/truth.json)");
  e->add_option("--out", ev_out, "output directory")->required();

  try {
    auto args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (g->parsed()) gen.synth.validate();
    if (d->parsed()) {
      for (const auto& w : weight_overrides) hmcd::apply_weight_override(hp, w);
      hp.validate();
    }
  } catch (const hmcd::InputError& err) {
    spdlog::error("invalid configuration: {}", err.what());
    return kUsage;
  }

  try {
    if (g->parsed()) {
      gen.out = gen_out;
      gen.mode = *hmcd::parse_alignment_mode(alignment);
      spdlog::info("generating {} layers x {} nodes, seed {}", gen.synth.layers,
                   gen.synth.nodes_per_layer, gen.synth.seed);
      const auto r = hmcd::cmd_generate(gen);
      log_warnings(r.warnings);
      spdlog::info("wrote {} ({} global users)", gen_out, r.output.dataset.global_users.size());
    } else if (d->parsed()) {
      det.dataset = det_dataset;
      det.out = det_out;
      spdlog::info("detecting K={} communities in {}", hp.k, det_dataset);
      const auto r = hmcd::cmd_detect(det);
      log_warnings(r.warnings);
      const auto& trace = r.run.trace;
      for (std::size_t t = 0; t < trace.outer_objectives.size(); ++t)
        spdlog::debug("outer {}: objective {}", t, trace.outer_objectives[t]);
      spdlog::info("{} after {} outer iterations, objective {}",
                   trace.converged ? "converged" : "stopped", trace.outer_objectives.size() - 1,
                   trace.outer_objectives.back());
    } else if (e->parsed()) {
      ev.dataset = ev_dataset;
      ev.partitions = ev_partitions;
      if (!ev_truth.empty()) ev.truth = ev_truth;
      ev.out = ev_out;
      const auto r = hmcd::cmd_evaluate(ev);
      log_warnings(r.warnings);
      spdlog::info("wrote report for {} blocks to {}", r.report.blocks.size(), ev_out);
    }
  } catch (const hmcd::SolverError& err) {
    spdlog::error("solver: {}", err.what());
    return kSolver;
  } catch (const std::exception& err) {
    spdlog::error("{}", err.what());
    return kData;
  }
  return kOk;
}
