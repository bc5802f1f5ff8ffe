#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "covrnn/coverage.hpp"
#include "covrnn/dataset.hpp"
#include "covrnn/error.hpp"
#include "covrnn/format.hpp"
#include "covrnn/model.hpp"
#include "covrnn/mutation.hpp"
#include "covrnn/oracle.hpp"
#include "covrnn/report.hpp"
#include "covrnn/rng.hpp"

namespace covrnn {

enum class CoverageMetric { cell, gate, seq_pos, seq_neg };

inline const char* to_string(CoverageMetric m) {
  switch (m) {
    case CoverageMetric::cell: return "cell";
    case CoverageMetric::gate: return "gate";
    case CoverageMetric::seq_pos: return "seq_pos";
    case CoverageMetric::seq_neg: return "seq_neg";
  }
  return "?";
}

inline double rate_of(const CoverageRates& r, CoverageMetric m) {
  switch (m) {
    case CoverageMetric::cell: return r.cell;
    case CoverageMetric::gate: return r.gate;
    case CoverageMetric::seq_pos: return r.seq_pos;
    case CoverageMetric::seq_neg: return r.seq_neg;
  }
  return 0.0;
}

struct TestCaseCount {
  std::size_t count = 0;
};

struct CoverageTarget {
  CoverageMetric metric = CoverageMetric::cell;
  double rate = 1.0;
};

using StopCriterion = std::variant<TestCaseCount, CoverageTarget>;

struct CampaignConfig {
  StopCriterion stop = TestCaseCount{2000};
  std::uint64_t seeds_rng = 0;
  std::size_t seed_count = 0;  // 0 selects every dataset input
  std::size_t mutations_per_seed = 10;
  bool minimal_suite = false;
  CoverageConfig coverage;
  MutationConfig mutation;
  OracleConfig oracle;
  std::size_t workers = 1;       // never changes results
  std::size_t curve_points = 10;  // adversarial curve samples radius * k / curve_points

  void validate(const ModelSpec& model) const {
    coverage.validate(model.timesteps(), model.lstm_layers().size());
    mutation.validate();
    oracle.validate();
    if (mutations_per_seed == 0) throw ConfigError("mutations per seed must be positive");
    if (curve_points == 0) throw ConfigError("curve points must be positive");
    if (const auto* t = std::get_if<CoverageTarget>(&stop); t && !(t->rate > 0.0 && t->rate <= 1.0)) {
      throw ConfigError("coverage target rate must lie in (0, 1]");
    }
  }
};

struct TokenProvenance {
  DiscreteOp op = DiscreteOp::random_swap;
  bool unchanged = true;
};

using Provenance = std::variant<SgaParams, TokenProvenance>;

struct TestCase {
  std::size_t id = 0;            // position in generation order among valid mutants
  std::size_t seed_index = 0;    // dataset index of the seed
  std::size_t mutant_index = 0;  // position among all generated mutants
  Sequence input;
  std::optional<std::vector<TokenId>> tokens;
  Provenance provenance;
  Verdict verdict;
  std::vector<ConditionId> satisfied_conditions;  // sorted
};

struct TestSuite {
  std::vector<TestCase> cases;
  std::vector<std::pair<std::string, std::string>> settings;
  std::optional<Symbolizer> symbolizer;
};

/// Uniform sample of `count` dataset indices without replacement, in draw
/// order (a partial Fisher-Yates shuffle).
inline std::vector<std::size_t> select_seeds(std::size_t dataset_size, std::size_t count, std::uint64_t seeds_rng) {
  if (count > dataset_size) {
    throw ConfigError("cannot select " + std::to_string(count) + " seeds from " + std::to_string(dataset_size) +
                      " inputs");
  }
  std::vector<std::size_t> idx(dataset_size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seeds_rng);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t j = k + rng.below(dataset_size - k);
    std::swap(idx[k], idx[j]);
  }
  idx.resize(count);
  return idx;
}

// ---------------------------------------------------------------------------
// Minimization

namespace detail {

using Bits = std::vector<std::uint64_t>;

struct CoverInstance {
  std::vector<Bits> sets;
  Bits universe;
  std::size_t words = 0;
};

inline CoverInstance make_cover_instance(const std::vector<std::vector<ConditionId>>& sets) {
  std::set<ConditionId> all;
  for (const auto& s : sets) all.insert(s.begin(), s.end());
  const std::vector<ConditionId> ordered(all.begin(), all.end());
  CoverInstance inst;
  inst.words = (ordered.size() + 63) / 64;
  inst.universe.assign(inst.words, 0);
  for (const auto& s : sets) {
    Bits b(inst.words, 0);
    for (const auto& c : s) {
      const auto bit = static_cast<std::size_t>(std::lower_bound(ordered.begin(), ordered.end(), c) - ordered.begin());
      b[bit / 64] |= std::uint64_t{1} << (bit % 64);
    }
    for (std::size_t w = 0; w < inst.words; ++w) inst.universe[w] |= b[w];
    inst.sets.push_back(std::move(b));
  }
  return inst;
}

inline std::size_t popcount_missing(const Bits& set, const Bits& covered) {
  std::size_t n = 0;
  for (std::size_t w = 0; w < set.size(); ++w) n += static_cast<std::size_t>(__builtin_popcountll(set[w] & ~covered[w]));
  return n;
}

}  // namespace detail

/// Greedy set cover: repeatedly keep the case adding the most uncovered
/// conditions (lowest index on ties). Returns kept indices ascending.
inline std::vector<std::size_t> greedy_cover(const std::vector<std::vector<ConditionId>>& sets) {
  auto inst = detail::make_cover_instance(sets);
  detail::Bits covered(inst.words, 0);
  std::vector<std::size_t> kept;
  for (;;) {
    std::size_t best = sets.size();
    std::size_t best_gain = 0;
    for (std::size_t k = 0; k < sets.size(); ++k) {
      const std::size_t gain = detail::popcount_missing(inst.sets[k], covered);
      if (gain > best_gain) {
        best_gain = gain;
        best = k;
      }
    }
    if (best_gain == 0) break;
    kept.push_back(best);
    for (std::size_t w = 0; w < inst.words; ++w) covered[w] |= inst.sets[best][w];
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

/// Minimum-cardinality cover by enumerating subsets in increasing size; the
/// lexicographically first optimal index set wins. Exponential in the number
/// of cases that contribute anything.
inline std::vector<std::size_t> exact_cover(const std::vector<std::vector<ConditionId>>& sets) {
  auto inst = detail::make_cover_instance(sets);
  std::vector<std::size_t> useful;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    if (!sets[k].empty()) useful.push_back(k);
  }
  const detail::Bits zero(inst.words, 0);
  if (inst.universe == zero) return {};
  std::vector<std::size_t> pick;
  for (std::size_t size = 1; size <= useful.size(); ++size) {
    pick.resize(size);
    std::iota(pick.begin(), pick.end(), std::size_t{0});
    for (;;) {
      detail::Bits covered(inst.words, 0);
      for (auto p : pick) {
        for (std::size_t w = 0; w < inst.words; ++w) covered[w] |= inst.sets[useful[p]][w];
      }
      if (covered == inst.universe) {
        std::vector<std::size_t> out;
        for (auto p : pick) out.push_back(useful[p]);
        return out;
      }
      std::size_t i = size;
      while (i > 0 && pick[i - 1] == useful.size() - size + i - 1) --i;
      if (i == 0) break;
      ++pick[i - 1];
      for (std::size_t j = i; j < size; ++j) pick[j] = pick[j - 1] + 1;
    }
  }
  return useful;
}

inline constexpr std::size_t kExactCoverLimit = 20;

/// Subset of the suite covering the same conditions. Suites with at most
/// kExactCoverLimit contributing cases are solved exactly; larger ones greedily.
inline TestSuite minimal_test_suite(const TestSuite& suite) {
  std::vector<std::vector<ConditionId>> sets;
  sets.reserve(suite.cases.size());
  std::size_t contributing = 0;
  for (const auto& tc : suite.cases) {
    sets.push_back(tc.satisfied_conditions);
    if (!tc.satisfied_conditions.empty()) ++contributing;
  }
  const auto kept = contributing <= kExactCoverLimit ? exact_cover(sets) : greedy_cover(sets);
  TestSuite out;
  out.settings = suite.settings;
  out.symbolizer = suite.symbolizer;
  for (auto k : kept) out.cases.push_back(suite.cases[k]);
  return out;
}

// ---------------------------------------------------------------------------
// Campaign

struct CampaignResult {
  TestSuite suite;  // minimal suite when requested, otherwise every valid mutant
  CampaignReport report;
};

inline std::vector<std::pair<std::string, std::string>> describe(const CampaignConfig& cfg,
                                                                  const std::string& model_name,
                                                                  const std::string& dataset_name) {
  std::vector<std::pair<std::string, std::string>> s;
  s.emplace_back("model", model_name);
  s.emplace_back("dataset", dataset_name);
  if (const auto* n = std::get_if<TestCaseCount>(&cfg.stop)) {
    s.emplace_back("stop", "test_case_count " + std::to_string(n->count));
  } else {
    const auto& t = std::get<CoverageTarget>(cfg.stop);
    s.emplace_back("stop", std::string("coverage_target ") + to_string(t.metric) + " " + fmt_double(t.rate));
  }
  s.emplace_back("alpha_h", fmt_double(cfg.coverage.alpha_h));
  s.emplace_back("alpha_f", fmt_double(cfg.coverage.alpha_f));
  s.emplace_back("symbols", std::to_string(cfg.coverage.symbol_count));
  s.emplace_back("seq_range",
                 std::to_string(cfg.coverage.seq_range.lo) + "," + std::to_string(cfg.coverage.seq_range.hi));
  s.emplace_back("layer", std::to_string(cfg.coverage.target_layer + 1));
  s.emplace_back("oracle_radius", fmt_double(cfg.oracle.radius));
  s.emplace_back("epsilon_range", fmt_double(cfg.mutation.epsilon_range.lo) + "," +
                                      fmt_double(cfg.mutation.epsilon_range.hi));
  s.emplace_back("tau_range", std::to_string(cfg.mutation.tau_min) + "," + std::to_string(cfg.mutation.tau_max));
  s.emplace_back("clamp", fmt_double(cfg.mutation.clamp.lo) + "," + fmt_double(cfg.mutation.clamp.hi));
  s.emplace_back("mutation_rng", std::to_string(cfg.mutation.rng_seed));
  s.emplace_back("seeds_rng", std::to_string(cfg.seeds_rng));
  s.emplace_back("seed_count", std::to_string(cfg.seed_count));
  s.emplace_back("mutations_per_seed", std::to_string(cfg.mutations_per_seed));
  s.emplace_back("minimal_suite", cfg.minimal_suite ? "1" : "0");
  s.emplace_back("mutation_label", "seed_prediction");
  return s;
}

namespace detail {

struct Candidate {
  Sequence input;
  std::optional<std::vector<TokenId>> tokens;
  Provenance provenance;
  Verdict verdict;
  TraceConditions conditions;
};

template <class Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k; (k = next.fetch_add(1)) < count;) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// Generates, judges and commits mutants until the stopping criterion holds.
///
/// Seeds are visited round-robin, `mutations_per_seed` mutants per visit. The
/// mutant drawn at (visit v, slot m) uses the stream Rng::stream(rng_seed,
/// {v, m}), and commits happen in (v, m) order, so the worker count never
/// changes the output. The sequence-coverage symbolizer is fitted on the
/// seed traces and frozen; coverage itself counts only suite members.
///
/// Termination: a test-case-count campaign gives up ("exhausted") after a
/// full pass over the seeds produced no valid mutant; a coverage-target
/// campaign gives up ("target_not_reached") after a full pass satisfied no
/// new condition.
inline CampaignResult run_campaign(const ModelSpec& model, const Dataset& dataset, const CampaignConfig& cfg,
                                   const std::string& model_name = "model",
                                   const std::string& dataset_name = "dataset") {
  cfg.validate(model);
  if (dataset.size() == 0) throw ConfigError("dataset is empty");
  for (const auto& in : dataset.inputs) detail::check_input(model, in);

  const std::size_t seed_count = cfg.seed_count == 0 ? dataset.size() : cfg.seed_count;
  const auto seeds = select_seeds(dataset.size(), seed_count, cfg.seeds_rng);

  std::vector<Trace> seed_traces(seeds.size());
  detail::parallel_for(seeds.size(), cfg.workers,
                       [&](std::size_t k) { seed_traces[k] = run_forward(model, dataset.inputs[seeds[k]]); });
  const Symbolizer symbolizer = fit_symbolizer(seed_traces, cfg.coverage);

  CoverageState state(model.timesteps());
  state.set_symbolizer(symbolizer);

  CampaignResult result;
  auto& report = result.report;
  report.settings = describe(cfg, model_name, dataset_name);
  report.symbolizer = symbolizer;
  report.initial = coverage_rates(state, cfg.coverage);
  TestSuite full;
  full.settings = report.settings;
  full.symbolizer = symbolizer;

  auto make_candidate = [&](std::size_t visit, std::size_t slot) {
    const std::size_t pos = visit % seeds.size();
    const std::size_t seed_index = seeds[pos];
    const Sequence& seed = dataset.inputs[seed_index];
    Rng rng = Rng::stream(cfg.mutation.rng_seed, {visit, slot});
    detail::Candidate c;
    if (dataset.tokens) {
      const auto op = static_cast<DiscreteOp>(rng.below(4));
      const DiscreteInput in{dataset.tokens->sequences[seed_index], dataset.tokens->lexicon};
      auto mutated = mutate_discrete(in, op, rng);
      c.input = one_hot_encode(mutated.result.tokens, model.features(), model.timesteps());
      c.tokens = std::move(mutated.result.tokens);
      c.provenance = TokenProvenance{op, mutated.unchanged};
    } else {
      const auto params = sample_params(cfg.mutation, rng);
      c.input = sga_mutate(model, seed, params.epsilon, params.tau, cfg.mutation);
      c.provenance = params;
    }
    const bool empty_tokens = c.tokens && c.tokens->empty();
    const Trace tr = run_forward(model, c.input);
    c.verdict = judge_predicted(seed, seed_traces[pos].predicted_class, c.input, tr.predicted_class, cfg.oracle);
    if (empty_tokens) {
      c.verdict.valid = false;
      c.verdict.adversarial = false;
    }
    c.verdict.seed_label = dataset.label(seed_index);
    if (c.verdict.valid) c.conditions = trace_conditions(tr, cfg.coverage, &symbolizer);
    return c;
  };

  const auto* count_stop = std::get_if<TestCaseCount>(&cfg.stop);
  const auto* target_stop = std::get_if<CoverageTarget>(&cfg.stop);
  bool done = false;
  if (count_stop && count_stop->count == 0) {
    done = true;
    report.status = CampaignStatus::completed;
  }
  if (target_stop && rate_of(report.initial, target_stop->metric) >= target_stop->rate) {
    done = true;
    report.status = CampaignStatus::target_reached;
  }

  std::size_t adversarial = 0;
  double perturbation_sum = 0.0;
  std::size_t mutant_index = 0;
  bool pass_valid = false;
  bool pass_progress = false;
  const std::size_t batch_visits = std::max<std::size_t>(1, cfg.workers);
  const std::size_t per_visit = cfg.mutations_per_seed;

  for (std::size_t visit0 = 0; !done; visit0 += batch_visits) {
    std::vector<detail::Candidate> batch(batch_visits * per_visit);
    detail::parallel_for(batch.size(), cfg.workers, [&](std::size_t k) {
      batch[k] = make_candidate(visit0 + k / per_visit, k % per_visit);
    });

    for (std::size_t k = 0; k < batch.size() && !done; ++k) {
      auto& c = batch[k];
      ++report.generated;
      const std::size_t this_mutant = mutant_index++;
      if (c.verdict.valid) {
        ++report.valid;
        pass_valid = true;
        if (!state.commit(c.conditions).empty()) pass_progress = true;
        if (c.verdict.adversarial) {
          ++adversarial;
          perturbation_sum += c.verdict.distance;
        }
        TestCase tc;
        tc.id = full.cases.size();
        tc.seed_index = seeds[(visit0 + k / per_visit) % seeds.size()];
        tc.mutant_index = this_mutant;
        tc.input = std::move(c.input);
        tc.tokens = std::move(c.tokens);
        tc.provenance = c.provenance;
        tc.verdict = c.verdict;
        tc.satisfied_conditions = c.conditions.ids();
        std::sort(tc.satisfied_conditions.begin(), tc.satisfied_conditions.end());
        full.cases.push_back(std::move(tc));

        const auto rates = coverage_rates(state, cfg.coverage);
        append_record(report, {full.cases.size(), rates, adversarial, perturbation_sum});
        if (count_stop && full.cases.size() >= count_stop->count) {
          report.status = CampaignStatus::completed;
          done = true;
        } else if (target_stop && rate_of(rates, target_stop->metric) >= target_stop->rate) {
          report.status = CampaignStatus::target_reached;
          done = true;
        }
      }
      const bool end_of_visit = (k + 1) % per_visit == 0;
      const std::size_t visit = visit0 + k / per_visit;
      if (!done && end_of_visit && (visit + 1) % seeds.size() == 0) {
        if (count_stop && !pass_valid) {
          report.status = CampaignStatus::exhausted;
          done = true;
        } else if (target_stop && !pass_progress) {
          report.status = CampaignStatus::target_not_reached;
          done = true;
        }
        pass_valid = false;
        pass_progress = false;
      }
    }
  }

  report.times = coverage_times(state);
  std::vector<JudgedPair> pairs;
  pairs.reserve(full.cases.size());
  for (const auto& tc : full.cases) {
    pairs.push_back({tc.verdict.distance, tc.verdict.seed_class, tc.verdict.mutant_class});
  }
  std::vector<double> radii;
  if (!full.cases.empty()) {
    for (std::size_t k = 0; k <= cfg.curve_points; ++k) {
      radii.push_back(cfg.oracle.radius * static_cast<double>(k) / static_cast<double>(cfg.curve_points));
    }
  }
  report.curve = adversarial_curve(pairs, radii);
  report.suite_size = full.cases.size();

  if (cfg.minimal_suite) {
    result.suite = minimal_test_suite(full);
    report.minimal_suite_size = result.suite.cases.size();
  } else {
    result.suite = std::move(full);
  }
  return result;
}

/// Replays suite inputs into a fresh registry with the suite's symbolizer.
inline CoverageState replay_coverage(const ModelSpec& model, const TestSuite& suite, const CoverageConfig& cfg) {
  CoverageState state(model.timesteps());
  if (suite.symbolizer) state.set_symbolizer(*suite.symbolizer);
  for (const auto& tc : suite.cases) update_coverage(state, run_forward(model, tc.input), cfg);
  return state;
}

// ---------------------------------------------------------------------------
// Suite file

inline nlohmann::ordered_json suite_to_json(const TestSuite& suite) {
  using nlohmann::ordered_json;
  ordered_json j;
  ordered_json settings = ordered_json::object();
  for (const auto& [k, v] : suite.settings) settings[k] = v;
  j["settings"] = std::move(settings);
  if (suite.symbolizer) {
    ordered_json sym = ordered_json::array();
    for (std::size_t k = 0; k < suite.symbolizer->pos_bounds.size(); ++k) {
      sym.push_back({{"t", suite.symbolizer->range.lo + k},
                     {"pos", suite.symbolizer->pos_bounds[k]},
                     {"neg", suite.symbolizer->neg_bounds[k]}});
    }
    j["symbolizer"] = std::move(sym);
  }
  ordered_json cases = ordered_json::array();
  for (const auto& tc : suite.cases) {
    ordered_json c;
    c["id"] = tc.id;
    c["seed_index"] = tc.seed_index;
    c["mutant_index"] = tc.mutant_index;
    if (const auto* p = std::get_if<SgaParams>(&tc.provenance)) {
      c["mutation"] = {{"kind", "sga"}, {"epsilon", p->epsilon}, {"tau", p->tau}};
    } else {
      const auto& t = std::get<TokenProvenance>(tc.provenance);
      c["mutation"] = {{"kind", "discrete"}, {"op", to_string(t.op)}, {"unchanged", t.unchanged}};
    }
    c["valid"] = tc.verdict.valid;
    c["adversarial"] = tc.verdict.adversarial;
    c["distance"] = tc.verdict.distance;
    c["seed_class"] = tc.verdict.seed_class;
    c["mutant_class"] = tc.verdict.mutant_class;
    c["seed_label"] = tc.verdict.seed_label ? ordered_json(*tc.verdict.seed_label) : nullptr;
    ordered_json conds = ordered_json::array();
    for (const auto& id : tc.satisfied_conditions) conds.push_back(id.str());
    c["conditions"] = std::move(conds);
    if (tc.tokens) c["tokens"] = *tc.tokens;
    ordered_json rows = ordered_json::array();
    for (std::size_t t = 0; t < tc.input.steps(); ++t) {
      const auto r = tc.input.step(t);
      rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    c["input"] = std::move(rows);
    cases.push_back(std::move(c));
  }
  j["cases"] = std::move(cases);
  return j;
}

inline TestSuite suite_from_json(const nlohmann::ordered_json& j) {
  TestSuite s;
  try {
    for (const auto& [k, v] : j.at("settings").items()) s.settings.emplace_back(k, v.get<std::string>());
    if (j.contains("symbolizer")) {
      Symbolizer sym;
      const auto& arr = j["symbolizer"];
      for (std::size_t k = 0; k < arr.size(); ++k) {
        if (k == 0) sym.range.lo = arr[k].at("t").get<std::size_t>();
        sym.range.hi = arr[k].at("t").get<std::size_t>();
        sym.pos_bounds.push_back(arr[k].at("pos").get<Vector>());
        sym.neg_bounds.push_back(arr[k].at("neg").get<Vector>());
      }
      if (!sym.pos_bounds.empty()) sym.symbol_count = sym.pos_bounds.front().size() + 1;
      s.symbolizer = std::move(sym);
    }
    for (const auto& c : j.at("cases")) {
      TestCase tc;
      tc.id = c.at("id").get<std::size_t>();
      tc.seed_index = c.at("seed_index").get<std::size_t>();
      tc.mutant_index = c.at("mutant_index").get<std::size_t>();
      const auto& m = c.at("mutation");
      if (m.at("kind") == "sga") {
        tc.provenance = SgaParams{m.at("epsilon").get<double>(), m.at("tau").get<std::int64_t>()};
      } else {
        TokenProvenance t;
        const auto op = m.at("op").get<std::string>();
        for (auto cand : {DiscreteOp::synonym_replace, DiscreteOp::random_insert, DiscreteOp::random_swap,
                          DiscreteOp::random_delete}) {
          if (op == to_string(cand)) t.op = cand;
        }
        t.unchanged = m.at("unchanged").get<bool>();
        tc.provenance = t;
      }
      tc.verdict.valid = c.at("valid").get<bool>();
      tc.verdict.adversarial = c.at("adversarial").get<bool>();
      tc.verdict.distance = c.at("distance").get<double>();
      tc.verdict.seed_class = c.at("seed_class").get<std::size_t>();
      tc.verdict.mutant_class = c.at("mutant_class").get<std::size_t>();
      if (!c.at("seed_label").is_null()) tc.verdict.seed_label = c["seed_label"].get<std::size_t>();
      for (const auto& id : c.at("conditions")) tc.satisfied_conditions.push_back(ConditionId::parse(id.get<std::string>()));
      if (c.contains("tokens")) tc.tokens = c["tokens"].get<std::vector<TokenId>>();
      const auto& rows = c.at("input");
      const std::size_t steps = rows.size();
      const std::size_t feats = steps ? rows[0].size() : 0;
      tc.input = Sequence(steps, feats);
      for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t f = 0; f < feats; ++f) tc.input(t, f) = rows[t].at(f).get<double>();
      }
      s.cases.push_back(std::move(tc));
    }
  } catch (const nlohmann::ordered_json::exception& e) {
    throw ParseError(std::string("suite: ") + e.what());
  }
  return s;
}

/// Log, summary, CSV series and the suite file.
inline void export_campaign(const CampaignReport& report, const TestSuite& suite, const ExportPaths& paths) {
  export_report(report, paths);
  write_text(paths.suite, suite_to_json(suite).dump() + '\n');
}

}  // namespace covrnn
