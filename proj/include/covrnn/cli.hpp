#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "covrnn/dataset.hpp"
#include "covrnn/harness.hpp"
#include "covrnn/model.hpp"
#include "covrnn/report.hpp"

namespace covrnn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kOutputDirEnv = "COVRNN_OUTPUT_DIR";

struct CliArgs {
  std::string model;
  std::string dataset;
  std::string labels;
  std::string vocab;
  std::string synonyms;
  std::size_t test_case_num = 2000;
  std::string coverage_target;  // "metric:rate"
  double threshold_cc = 6.0;
  double threshold_gc = 0.85;
  std::size_t symbols_sq = 2;
  std::string seq;  // empty: last min(6, n) steps
  std::size_t layer = 0;  // 1-based; 0: last LSTM layer
  int minimal_test = 0;
  std::string mode = "test";
  std::string output;
  std::string input_log;
  double radius = 0.1;
  std::uint64_t seeds_rng = 0;
  std::uint64_t mutation_rng = 0;
  std::size_t seed_count = 100;
  std::size_t mutations_per_seed = 10;
  std::string epsilon = "0.001,0.01";
  std::string tau = "1,5";
  std::string clamp = "0,1";
  std::size_t workers = 1;
  std::size_t index = 0;
};

// "lo,hi" or "[lo,hi]".
inline std::pair<std::string, std::string> split_pair(std::string text, const std::string& flag) {
  text.erase(std::remove_if(text.begin(), text.end(), [](char c) { return c == ' '; }), text.end());
  if (!text.empty() && text.front() == '[' && text.back() == ']') text = text.substr(1, text.size() - 2);
  const auto comma = text.find(',');
  if (comma == std::string::npos || comma == 0 || comma + 1 == text.size()) {
    throw ConfigError(flag + ": expected lo,hi but got '" + text + "'");
  }
  return {text.substr(0, comma), text.substr(comma + 1)};
}

inline Interval parse_interval(const std::string& text, const std::string& flag) {
  const auto [lo, hi] = split_pair(text, flag);
  try {
    return {parse_double(lo), parse_double(hi)};
  } catch (const ParseError&) {
    throw ConfigError(flag + ": bad number in '" + text + "'");
  }
}

inline std::pair<std::int64_t, std::int64_t> parse_int_pair(const std::string& text, const std::string& flag) {
  const auto [lo, hi] = split_pair(text, flag);
  try {
    return {static_cast<std::int64_t>(parse_count(lo)), static_cast<std::int64_t>(parse_count(hi))};
  } catch (const ParseError&) {
    throw ConfigError(flag + ": bad integer in '" + text + "'");
  }
}

inline CoverageTarget parse_target(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("--coverage_target: expected metric:rate");
  const std::string metric = text.substr(0, colon);
  CoverageTarget t;
  if (metric == "cell") {
    t.metric = CoverageMetric::cell;
  } else if (metric == "gate") {
    t.metric = CoverageMetric::gate;
  } else if (metric == "seq_pos") {
    t.metric = CoverageMetric::seq_pos;
  } else if (metric == "seq_neg") {
    t.metric = CoverageMetric::seq_neg;
  } else {
    throw ConfigError("--coverage_target: unknown metric '" + metric + "'");
  }
  try {
    t.rate = parse_double(text.substr(colon + 1));
  } catch (const ParseError&) {
    throw ConfigError("--coverage_target: bad rate in '" + text + "'");
  }
  return t;
}

inline std::filesystem::path default_output() {
  const char* dir = std::getenv(kOutputDirEnv);
  return std::filesystem::path(dir && *dir ? dir : "covrnn_out") / "record.txt";
}

/// Maps parsed flags onto a campaign configuration for `model`.
inline CampaignConfig to_campaign_config(const CliArgs& a, const ModelSpec& model, std::size_t dataset_size) {
  CampaignConfig cfg;
  if (a.coverage_target.empty()) {
    cfg.stop = TestCaseCount{a.test_case_num};
  } else {
    cfg.stop = parse_target(a.coverage_target);
  }
  cfg.seeds_rng = a.seeds_rng;
  cfg.seed_count = std::min(a.seed_count == 0 ? dataset_size : a.seed_count, dataset_size);
  cfg.mutations_per_seed = a.mutations_per_seed;
  cfg.minimal_suite = a.minimal_test != 0;
  cfg.workers = a.workers;

  cfg.coverage.alpha_h = a.threshold_cc;
  cfg.coverage.alpha_f = a.threshold_gc;
  cfg.coverage.symbol_count = a.symbols_sq;
  const std::size_t n = model.timesteps();
  if (a.seq.empty()) {
    cfg.coverage.seq_range = {n > 6 ? n - 5 : 1, n};
  } else {
    const auto [lo, hi] = parse_int_pair(a.seq, "--seq");
    cfg.coverage.seq_range = {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
  }
  const std::size_t layers = model.lstm_layers().size();
  if (a.layer > layers) throw ConfigError("--layer " + std::to_string(a.layer) + " exceeds lstm layer count");
  cfg.coverage.target_layer = a.layer == 0 ? layers - 1 : a.layer - 1;

  cfg.mutation.epsilon_range = parse_interval(a.epsilon, "--epsilon");
  const auto [tau_lo, tau_hi] = parse_int_pair(a.tau, "--tau");
  cfg.mutation.tau_min = tau_lo;
  cfg.mutation.tau_max = tau_hi;
  cfg.mutation.clamp = parse_interval(a.clamp, "--clamp");
  cfg.mutation.rng_seed = a.mutation_rng;
  cfg.oracle.radius = a.radius;
  cfg.validate(model);
  return cfg;
}

inline Dataset load_dataset(const CliArgs& a, const ModelSpec& model) {
  const std::filesystem::path path = a.dataset;
  if (!a.vocab.empty()) {
    std::optional<std::filesystem::path> syn;
    if (!a.synonyms.empty()) syn = a.synonyms;
    return load_token_dataset(path, a.vocab, syn, model.timesteps());
  }
  if (path.extension() == ".json") return load_json_dataset(path);
  std::optional<std::filesystem::path> labels;
  if (!a.labels.empty()) labels = a.labels;
  return load_idx_dataset(path, labels);
}

inline nlohmann::ordered_json trace_to_json(const Trace& tr) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const auto& layer : tr.layers) {
    nlohmann::ordered_json steps = nlohmann::ordered_json::array();
    for (const auto& s : layer) {
      steps.push_back({{"f", s.f}, {"i", s.i}, {"o", s.o}, {"c", s.c}, {"h", s.h}});
    }
    layers.push_back(std::move(steps));
  }
  j["layers"] = std::move(layers);
  j["logits"] = tr.logits;
  j["probabilities"] = tr.probabilities;
  j["predicted_class"] = tr.predicted_class;
  return j;
}

inline void build_app(CLI::App& app, CliArgs& a) {
  app.description("Coverage-guided testing for LSTM classifiers");
  app.add_option("--mode", a.mode, "test: run a campaign; trace: dump one input's trace; report: re-export a saved log")
      ->check(CLI::IsMember({"test", "trace", "report"}))
      ->capture_default_str();
  app.add_option("--model", a.model, "Weight file (JSON)")->check(CLI::ExistingFile);
  app.add_option("--dataset", a.dataset, "IDX image file, JSON sequence dataset, or token lines")
      ->check(CLI::ExistingFile);
  app.add_option("--labels", a.labels, "IDX label file for an IDX dataset")->check(CLI::ExistingFile);
  app.add_option("--vocab", a.vocab, "Vocabulary file; marks --dataset as token sequences")->check(CLI::ExistingFile);
  app.add_option("--synonyms", a.synonyms, "Synonym table token<TAB>syn1,syn2")->check(CLI::ExistingFile);
  auto* count = app.add_option("--TestCaseNum", a.test_case_num, "Stop after this many valid test cases")
                    ->capture_default_str();
  app.add_option("--coverage_target", a.coverage_target, "Stop when METRIC:RATE is reached (cell, gate, seq_pos, seq_neg)")
      ->excludes(count);
  app.add_option("--threshold_CC", a.threshold_cc, "Cell coverage threshold alpha_h")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--threshold_GC", a.threshold_gc, "Forget-gate coverage threshold alpha_f")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app.add_option("--symbols_SQ", a.symbols_sq, "Symbols for sequence coverage")
      ->check(CLI::Range(2, 26))
      ->capture_default_str();
  app.add_option("--seq", a.seq, "Sequence coverage timesteps lo,hi (1-based, inclusive) [default: last 6]");
  app.add_option("--layer", a.layer, "LSTM layer under test, 1-based [default: last]");
  app.add_option("--minimalTest", a.minimal_test, "1: emit a minimal suite covering the same conditions")
      ->check(CLI::IsMember({0, 1}))
      ->capture_default_str();
  app.add_option("--output", a.output, std::string("Log path; other outputs go beside it [default: $") +
                                           kOutputDirEnv + "/record.txt or covrnn_out/record.txt]");
  app.add_option("--input", a.input_log, "Saved log to re-export (report mode)")->check(CLI::ExistingFile);
  app.add_option("--radius", a.radius, "Oracle norm-ball radius (L2)")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--seeds_rng", a.seeds_rng, "Seed-selection random seed")->capture_default_str();
  app.add_option("--mutation_rng", a.mutation_rng, "Mutation random seed")->capture_default_str();
  app.add_option("--seed_count", a.seed_count, "Seeds drawn from the dataset, 0 for all")->capture_default_str();
  app.add_option("--mutations_per_seed", a.mutations_per_seed, "Mutants per seed visit")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--epsilon", a.epsilon, "Gradient magnitude range lo,hi")->capture_default_str();
  app.add_option("--tau", a.tau, "Gradient step-count range lo,hi")->capture_default_str();
  app.add_option("--clamp", a.clamp, "Valid feature interval lo,hi")->capture_default_str();
  app.add_option("--workers", a.workers, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--index", a.index, "Dataset index for trace mode")->capture_default_str();
}

inline int run_test_mode(const CliArgs& a, std::ostream& out) {
  const auto model = load_model(a.model);
  const auto dataset = load_dataset(a, model);
  const auto cfg = to_campaign_config(a, model, dataset.size());
  const auto result = run_campaign(model, dataset, cfg, a.model, a.dataset);
  const std::filesystem::path log = a.output.empty() ? default_output() : std::filesystem::path(a.output);
  export_campaign(result.report, result.suite, ExportPaths::beside(log));
  const auto rates = result.report.final_rates();
  out << "status " << to_string(result.report.status) << ", " << result.report.suite_size << " test cases, "
      << result.report.adversarial_count() << " adversarial\n"
      << "coverage cell " << rates.cell << " gate " << rates.gate << " seq+ " << rates.seq_pos << " seq- "
      << rates.seq_neg << "\n"
      << "log written to " << log.string() << "\n";
  return kExitOk;
}

inline int run_trace_mode(const CliArgs& a, std::ostream& out) {
  const auto model = load_model(a.model);
  const auto dataset = load_dataset(a, model);
  if (a.index >= dataset.size()) {
    throw ConfigError("--index " + std::to_string(a.index) + " out of range for " +
                      std::to_string(dataset.size()) + " inputs");
  }
  const auto text = trace_to_json(run_forward(model, dataset.inputs[a.index])).dump(2) + "\n";
  if (a.output.empty()) {
    out << text;
  } else {
    write_text(a.output, text);
  }
  return kExitOk;
}

inline int run_report_mode(const CliArgs& a, std::ostream& out) {
  const auto report = load_log(a.input_log);
  const std::filesystem::path log = a.output.empty() ? default_output() : std::filesystem::path(a.output);
  export_report(report, ExportPaths::beside(log));
  out << "re-exported " << a.input_log << " to " << log.parent_path().string() << "\n";
  return kExitOk;
}

/// Full command-line entry point; returns the process exit code.
inline int parse_and_run(int argc, const char* const* argv, std::ostream& out = std::cout,
                         std::ostream& err = std::cerr) {
  CLI::App app{"covrnn"};
  CliArgs a;
  build_app(app, a);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << "run with --help for options\n";
    return kExitUsage;
  }

  try {
    if (a.mode == "report") {
      if (a.input_log.empty()) throw ConfigError("report mode needs --input");
      return run_report_mode(a, out);
    }
    if (a.model.empty()) throw ConfigError("--model is required");
    if (a.dataset.empty()) throw ConfigError("--dataset is required");
    if (a.mode == "trace") return run_trace_mode(a, out);
    return run_test_mode(a, out);
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace covrnn::cli
