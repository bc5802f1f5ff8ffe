// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "covrnn/covrnn.hpp"
#include "covrnn/synthetic.hpp"
#include "test_support.hpp"

using namespace covrnn;
using namespace covrnn::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Collects failed expectations for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return failed_ == 0; }
  std::string detail() const {
    std::string out;
    for (const auto& n : notes_) out += (out.empty() ? "" : "; ") + n;
    if (failed_ > 0) {
      out += (out.empty() ? "" : "; ") + std::to_string(failed_) + " failed:";
      for (const auto& f : failures_) out += " [" + f + "]";
    }
    return out;
  }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
  std::size_t failed_ = 0;
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

// ---------------------------------------------------------------------------

void forward_oracle(Check& c) {
  const auto start = Clock::now();
  const auto model = load_model(fixture("tiny2.model.json"));
  const auto golden = read_json(fixture("tiny2.golden.json"));
  const auto input = sequence_from_rows(golden["input"].get<std::vector<std::vector<double>>>());
  const auto tr = run_forward(model, input);
  double worst = 0.0;
  auto compare = [&](const Vector& got, const nlohmann::json& want, const std::string& what) {
    c.expect(got.size() == want.size(), what + " length");
    for (std::size_t k = 0; k < std::min(got.size(), want.size()); ++k) {
      const double err = std::fabs(got[k] - want[k].get<double>());
      worst = std::max(worst, err);
      c.expect(err <= 1e-9, what + "[" + std::to_string(k) + "]");
    }
  };
  c.expect(tr.layers[0].size() == golden["steps"].size(), "step count");
  for (std::size_t t = 0; t < std::min<std::size_t>(tr.layers[0].size(), golden["steps"].size()); ++t) {
    const auto& s = tr.layers[0][t];
    const auto& g = golden["steps"][t];
    const std::string at = "t" + std::to_string(t + 1) + ".";
    compare(s.f, g["f"], at + "f");
    compare(s.i, g["i"], at + "i");
    compare(s.o, g["o"], at + "o");
    compare(s.c, g["c"], at + "c");
    compare(s.h, g["h"], at + "h");
  }
  compare(tr.logits, golden["logits"], "logits");
  compare(tr.probabilities, golden["probabilities"], "probabilities");
  c.expect(tr.predicted_class == golden["predicted_class"].get<std::size_t>(), "predicted class");
  const double secs = seconds_since(start);
  c.expect(secs < 1.0, "runtime " + num(secs) + " s >= 1 s");
  c.note("max error " + num(worst) + ", " + num(secs) + " s");
}

void gradient_check(Check& c) {
  const auto start = Clock::now();
  Rng rng(2024);
  const std::size_t models = 120;
  std::size_t components = 0, nonzero = 0;
  double worst = 0.0;
  for (std::size_t m = 0; m < models; ++m) {
    const auto model = random_small_model(rng);
    const auto x = random_input(rng, model.timesteps(), model.features());
    const std::size_t target = rng.below(model.class_count());
    const auto analytic = input_gradient(model, x, target);
    const auto numeric = finite_difference_gradient(model, x, target);
    for (std::size_t k = 0; k < x.flat().size(); ++k) {
      const double a = analytic.flat()[k], n = numeric.flat()[k];
      ++components;
      nonzero += std::fabs(n) > 1e-3 ? 1 : 0;
      const double diff = std::fabs(a - n);
      const double scale = std::max(std::fabs(a), std::fabs(n));
      if (scale > 1e-7) worst = std::max(worst, diff / scale);
      c.expect(gradient_close(a, n), "model " + std::to_string(m) + " component " + std::to_string(k));
    }
  }
  const double secs = seconds_since(start);
  c.expect(nonzero * 2 > components, "most gradient components should be non-trivial");
  c.expect(secs < 30.0, "runtime " + num(secs) + " s >= 30 s");
  c.note(std::to_string(models) + " models, " + std::to_string(components) + " components, max rel error " +
         num(worst) + ", " + num(secs) + " s");
}

Trace step_trace(const std::vector<Vector>& hs, double f) {
  Trace tr;
  tr.layers.resize(1);
  for (const auto& h : hs) tr.layers[0].push_back({Vector(h.size(), f), Vector(h.size(), f), Vector(h.size(), f),
                                                   Vector(h.size(), 0.0), h});
  return tr;
}

void metric_formulas(Check& c) {
  auto agg = [&](Vector h, double plus, double minus) {
    const auto a = aggregate_info(h);
    c.expect(near(a.xi_plus, plus, 1e-15) && near(a.xi_minus, minus, 1e-15), "aggregate_info");
  };
  agg({0.5, -0.3, 0.2}, 0.7, -0.3);
  agg({0, 0, 0}, 0, 0);
  agg({-0.1, -0.9}, 0, -1.0);
  c.expect(near(delta_aggregate({0.7, -0.3}, {0.2, -0.5}), 0.7, 1e-15), "delta (0.7,-0.3)/(0.2,-0.5)");
  c.expect(delta_aggregate({0.7, -0.3}, {0.7, -0.3}) == 0.0, "delta identity");
  c.expect(delta_aggregate({1.0, -2.0}, {0, 0}) == 3.0, "delta from zero");
  c.expect(forget_rate(Vector{1, 1, 1, 1}) == 1.0, "forget rate ones");
  c.expect(near(forget_rate(Vector{0.2, 0.4, 0.6, 0.8}), 0.5, 1e-15), "forget rate ramp");
  c.expect(forget_rate(Vector{0.0}) == 0.0, "forget rate zero");

  CoverageConfig cfg;
  cfg.alpha_h = 1e-12;
  cfg.seq_range = {1, 4};
  CoverageState zeros(4);
  update_onestep_coverage(zeros, step_trace({{0, 0}, {0, 0}, {0, 0}, {0, 0}}, 0.5), cfg);
  c.expect(coverage_rates(zeros, cfg).cell == 0.0, "all-zero h fires no cell");

  const auto zero_trace = run_forward(zero_tiny2(), Sequence(4, 3));
  cfg.alpha_f = 0.49;
  CoverageState below(4);
  update_onestep_coverage(below, zero_trace, cfg);
  c.expect(coverage_rates(below, cfg).gate == 1.0, "alpha_f 0.49 fires every gate");
  cfg.alpha_f = 0.5;
  CoverageState at(4);
  update_onestep_coverage(at, zero_trace, cfg);
  c.expect(coverage_rates(at, cfg).gate == 0.0, "alpha_f 0.5 fires no gate");

  // Registry against a brute-force recomputation.
  const auto model = load_model(fixture("tiny2.model.json"));
  Rng rng(5150);
  std::size_t rounds = 0;
  for (; rounds < 40; ++rounds) {
    std::vector<Trace> traces;
    const std::size_t count = 1 + rng.below(20);
    for (std::size_t k = 0; k < count; ++k) traces.push_back(run_forward(model, random_input(rng, 4, 3, -3, 3)));
    CoverageConfig rc;
    rc.alpha_h = rng.uniform_real(0.01, 0.4);
    rc.alpha_f = rng.uniform_real(0.3, 0.7);
    rc.symbol_count = 2 + rng.below(3);
    rc.seq_range = {1 + rng.below(2), 3 + rng.below(2)};
    const auto sym = fit_symbolizer(traces, rc);
    CoverageState st(4);
    st.set_symbolizer(sym);
    for (const auto& tr : traces) update_coverage(st, tr, rc);
    const auto naive = naive_registry(traces, rc, &sym);
    const auto& t = st.times();
    c.expect(t.cell == naive.cell && t.gate == naive.gate && t.seq_pos == naive.pos && t.seq_neg == naive.neg,
             "registry round " + std::to_string(rounds));
  }
  c.note("example tables and " + std::to_string(rounds) + " brute-force registry rounds");
}

void enumerate_patterns(std::size_t symbols, std::size_t length, std::string& prefix, std::set<std::string>& out) {
  if (prefix.size() == length) {
    out.insert(prefix);
    return;
  }
  for (std::size_t s = 0; s < symbols; ++s) {
    prefix.push_back(static_cast<char>('a' + s));
    enumerate_patterns(symbols, length, prefix, out);
    prefix.pop_back();
  }
}

void sequence_denominator(Check& c) {
  CoverageConfig cfg;
  cfg.symbol_count = 2;
  cfg.seq_range = {19, 24};
  c.expect(sequence_pattern_space(cfg) == 64.0, "2 symbols over 19..24 gives 64");
  std::set<std::string> universe;
  std::string prefix;
  enumerate_patterns(2, 6, prefix, universe);
  c.expect(universe.size() == 64, "enumeration has 64 patterns");

  Rng rng(64);
  std::size_t rounds = 0, most = 0;
  for (; rounds < 30; ++rounds) {
    Rng mrng(rng.next());
    const ModelSpec model({8, 2}, 2, HeadInput::last,
                          {synthetic::random_lstm(mrng, 2, {3, 1.0, 2.0, 0.0, 0.5})},
                          {{synthetic::uniform_matrix(mrng, 2, 3, 1.0), Vector{0, 0}, Activation::softmax}});
    CoverageConfig rc;
    rc.symbol_count = 2;
    rc.seq_range = {2, 7};
    std::vector<Trace> fit, probe;
    for (int k = 0; k < 20; ++k) fit.push_back(run_forward(model, random_input(rng, 8, 2, -2, 2)));
    const std::size_t count = 1 + rng.below(20);
    for (std::size_t k = 0; k < count; ++k) probe.push_back(run_forward(model, random_input(rng, 8, 2, -2, 2)));
    const auto sym = fit_symbolizer(fit, rc);
    CoverageState st(8);
    st.set_symbolizer(sym);
    for (const auto& tr : probe) update_sequence_coverage(st, tr, rc);
    const auto naive = naive_registry(probe, rc, &sym);
    for (const auto& [p, n] : st.times().seq_pos) c.expect(universe.count(p) == 1, "pattern " + p + " outside space");
    for (const auto& [p, n] : st.times().seq_neg) c.expect(universe.count(p) == 1, "pattern " + p + " outside space");
    c.expect(st.times().seq_pos == naive.pos && st.times().seq_neg == naive.neg, "pattern counts");
    const auto rates = coverage_rates(st, rc);
    c.expect(rates.seq_pos == static_cast<double>(naive.pos.size()) / 64.0, "seq+ rate");
    c.expect(rates.seq_neg == static_cast<double>(naive.neg.size()) / 64.0, "seq- rate");
    most = std::max(most, naive.pos.size());
  }
  c.note("denominator 64, " + std::to_string(rounds) + " enumeration rounds, up to " + std::to_string(most) +
         " distinct patterns");
}

std::vector<std::string> csv_rows(const std::string& text) {
  std::vector<std::string> rows;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) rows.push_back(l);
  return rows;
}

std::vector<std::string> csv_fields(const std::string& row) {
  std::vector<std::string> f;
  std::size_t start = 0;
  for (std::size_t pos; (pos = row.find(',', start)) != std::string::npos; start = pos + 1) {
    f.push_back(row.substr(start, pos - start));
  }
  f.push_back(row.substr(start));
  return f;
}

CampaignConfig row_campaign_config(std::size_t count) {
  CampaignConfig cfg;
  cfg.stop = TestCaseCount{count};
  cfg.seed_count = 100;
  cfg.coverage.alpha_h = 6.0;
  cfg.coverage.alpha_f = 0.85;
  cfg.coverage.symbol_count = 2;
  cfg.coverage.seq_range = {19, 24};
  cfg.coverage.target_layer = 1;
  return cfg;
}

struct SharedCampaign {
  ModelSpec model = synthetic::row_model(7);
  Dataset dataset = synthetic::stroke_dataset(500, 11);
  std::optional<CampaignResult> result;
  double seconds = 0.0;
};

SharedCampaign& shared() {
  static SharedCampaign s;
  return s;
}

void campaign_shape(Check& c) {
  auto& s = shared();
  c.expect(s.model.timesteps() == 28 && s.model.features() == 28, "28x28 model");
  const auto start = Clock::now();
  s.result = run_campaign(s.model, s.dataset, row_campaign_config(2000), "row_model", "strokes");
  s.seconds = seconds_since(start);
  const auto& r = s.result->report;
  c.expect(r.status == CampaignStatus::completed, std::string("status ") + to_string(r.status));
  c.expect(r.suite_size == 2000, "suite size " + std::to_string(r.suite_size));
  c.expect(s.seconds < 600.0, "runtime " + num(s.seconds) + " s >= 600 s");

  const auto dir = scratch_dir("acceptance_shape");
  const auto paths = ExportPaths::beside(dir / "record.txt");
  export_campaign(r, s.result->suite, paths);

  const auto cov = csv_rows(read_file(paths.coverage_csv));
  c.expect(cov.size() == 2001, "coverage.csv rows " + std::to_string(cov.size()));
  std::vector<double> prev(5, 0.0);
  for (std::size_t k = 1; k < cov.size(); ++k) {
    const auto f = csv_fields(cov[k]);
    if (f.size() != 7) {
      c.expect(false, "coverage.csv field count");
      continue;
    }
    for (std::size_t col = 1; col <= 5; ++col) {
      const double v = parse_double(f[col]);
      c.expect(v >= prev[col - 1], "coverage.csv column " + std::to_string(col) + " decreases at row " +
                                       std::to_string(k));
      prev[col - 1] = v;
    }
  }

  const auto curve = csv_rows(read_file(paths.curve_csv));
  c.expect(curve.size() >= 3, "adversarial curve has samples");
  double last_radius = -1.0, last_count = 0.0;
  for (std::size_t k = 1; k < curve.size(); ++k) {
    const auto f = csv_fields(curve[k]);
    const double radius = parse_double(f.at(0)), count = parse_double(f.at(1));
    c.expect(radius > last_radius && count >= last_count, "adversarial curve monotone at row " + std::to_string(k));
    last_radius = radius;
    last_count = count;
  }

  std::size_t cell_rows = 0, gate_rows = 0;
  for (const auto& row : csv_rows(read_file(paths.times_csv))) {
    cell_rows += row.rfind("cell,", 0) == 0 ? 1 : 0;
    gate_rows += row.rfind("gate,", 0) == 0 ? 1 : 0;
  }
  c.expect(cell_rows == 28, "cell rows " + std::to_string(cell_rows));
  c.expect(gate_rows == 28, "gate rows " + std::to_string(gate_rows));

  const auto rates = r.final_rates();
  c.note("2000 cases in " + num(s.seconds) + " s, " + std::to_string(r.generated) + " generated, " +
         std::to_string(r.adversarial_count()) + " adversarial, coverage cell " + num(rates.cell) + " gate " +
         num(rates.gate) + " seq+ " + num(rates.seq_pos) + " seq- " + num(rates.seq_neg));
}

void oracle_properties(Check& c) {
  auto& s = shared();
  if (!s.result) s.result = run_campaign(s.model, s.dataset, row_campaign_config(2000));
  const double radius = row_campaign_config(0).oracle.radius;
  std::size_t adversarial = 0;
  for (const auto& tc : s.result->suite.cases) {
    const double d = l2_distance(tc.input.flat(), s.dataset.inputs[tc.seed_index].flat());
    const bool changed = predict(s.model, tc.input) != predict(s.model, s.dataset.inputs[tc.seed_index]);
    c.expect(!tc.verdict.adversarial || tc.verdict.valid, "adversarial implies valid, case " + std::to_string(tc.id));
    c.expect(!tc.verdict.valid || d <= radius, "valid implies distance <= radius, case " + std::to_string(tc.id));
    c.expect(tc.verdict.adversarial == (d <= radius && changed), "verdict agrees with recomputation");
    adversarial += tc.verdict.adversarial ? 1 : 0;
  }
  const auto& counts = s.result->report.curve.counts;
  for (std::size_t k = 1; k < counts.size(); ++k) c.expect(counts[k] >= counts[k - 1], "curve monotone");
  c.expect(!counts.empty() && counts.back() == adversarial, "curve at full radius counts every adversarial");

  // Same shape, all weights zero.
  auto zero_lstm_layer = [](std::size_t units, std::size_t in) {
    return LstmLayerWeights{Matrix(units, units + in), Matrix(units, units + in), Matrix(units, units + in),
                            Matrix(units, units + in), Vector(units), Vector(units), Vector(units), Vector(units)};
  };
  const ModelSpec zero({28, 28}, 10, HeadInput::last, {zero_lstm_layer(8, 28), zero_lstm_layer(8, 8)},
                       {{Matrix(10, 8), Vector(10, 0.0), Activation::softmax}});
  auto cfg = row_campaign_config(300);
  cfg.seed_count = 50;
  const auto z = run_campaign(zero, s.dataset, cfg);
  c.expect(z.report.adversarial_count() == 0, "zero model adversarials " + std::to_string(z.report.adversarial_count()));
  c.expect(z.suite.cases.size() == 300, "zero model suite size");
  c.note(std::to_string(s.result->suite.cases.size()) + " cases checked, " + std::to_string(adversarial) +
         " adversarial; zero model: " + std::to_string(z.report.adversarial_count()) + " adversarial in 300");
}

void minimization(Check& c) {
  Rng rng(1212);
  std::size_t trials = 0, optimal = 0;
  for (; trials < 500; ++trials) {
    const std::size_t cases = 1 + rng.below(12);
    const std::size_t conditions = 1 + rng.below(16);
    const double density = rng.uniform_real(0.1, 0.5);
    TestSuite suite;
    std::vector<std::vector<ConditionId>> sets;
    for (std::size_t k = 0; k < cases; ++k) {
      TestCase tc;
      tc.id = k;
      for (std::size_t cond = 0; cond < conditions; ++cond) {
        if (rng.uniform01() < density) {
          const auto kind = rng.below(3);
          tc.satisfied_conditions.push_back(kind == 0   ? ConditionId::cell(cond + 1)
                                            : kind == 1 ? ConditionId::gate(cond + 1)
                                                        : ConditionId::seq_pos(std::string(1, 'a' + cond)));
        }
      }
      std::sort(tc.satisfied_conditions.begin(), tc.satisfied_conditions.end());
      tc.satisfied_conditions.erase(std::unique(tc.satisfied_conditions.begin(), tc.satisfied_conditions.end()),
                                    tc.satisfied_conditions.end());
      sets.push_back(tc.satisfied_conditions);
      suite.cases.push_back(tc);
    }
    const auto kept = minimal_test_suite(suite);
    std::set<ConditionId> full, got;
    for (const auto& s : sets) full.insert(s.begin(), s.end());
    for (const auto& tc : kept.cases) got.insert(tc.satisfied_conditions.begin(), tc.satisfied_conditions.end());
    c.expect(got == full, "union differs in trial " + std::to_string(trials));
    const auto best = exhaustive_min_cover_size(sets);
    c.expect(kept.cases.size() == best, "trial " + std::to_string(trials) + ": kept " +
                                            std::to_string(kept.cases.size()) + ", optimum " + std::to_string(best));
    optimal += kept.cases.size() == best ? 1 : 0;
  }

  // The campaign-sized suite keeps its union too.
  auto& s = shared();
  if (s.result) {
    const auto small = minimal_test_suite(s.result->suite);
    const auto cfg = row_campaign_config(0).coverage;
    const auto before = replay_coverage(s.model, s.result->suite, cfg);
    const auto after = replay_coverage(s.model, small, cfg);
    c.expect(coverage_rates(before, cfg) == coverage_rates(after, cfg), "campaign suite union");
    c.note("campaign suite " + std::to_string(s.result->suite.cases.size()) + " -> " +
           std::to_string(small.cases.size()));
  }
  c.note(std::to_string(optimal) + "/" + std::to_string(trials) + " random suites at the optimum");
}

std::map<std::string, std::string> export_bytes(const CampaignResult& r, const std::string& name) {
  const auto dir = scratch_dir(name);
  const auto paths = ExportPaths::beside(dir / "record.txt");
  export_campaign(r.report, r.suite, paths);
  std::map<std::string, std::string> out;
  for (const auto& p : {paths.log, paths.summary, paths.coverage_csv, paths.curve_csv, paths.times_csv, paths.suite}) {
    out[p.filename().string()] = read_file(p);
  }
  return out;
}

void determinism(Check& c) {
  auto& s = shared();
  auto cfg = row_campaign_config(400);
  cfg.minimal_suite = true;
  const auto a = export_bytes(run_campaign(s.model, s.dataset, cfg, "row_model", "strokes"), "acceptance_det_a");
  const auto b = export_bytes(run_campaign(s.model, s.dataset, cfg, "row_model", "strokes"), "acceptance_det_b");
  cfg.workers = 4;
  const auto d = export_bytes(run_campaign(s.model, s.dataset, cfg, "row_model", "strokes"), "acceptance_det_w4");
  for (const auto& [name, bytes] : a) {
    c.expect(!bytes.empty(), name + " empty");
    c.expect(b.at(name) == bytes, name + " differs between identical runs");
    c.expect(d.at(name) == bytes, name + " differs with 4 workers");
  }
  c.note(std::to_string(a.size()) + " files compared across 3 runs (workers 1, 1, 4)");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"forward-pass oracle", forward_oracle},
      {"gradient check", gradient_check},
      {"metric formulas", metric_formulas},
      {"sequence-coverage denominator", sequence_denominator},
      {"campaign shape", campaign_shape},
      {"oracle properties", oracle_properties},
      {"minimization", minimization},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    std::cout << (c.ok() ? "PASS" : "FAIL") << "  " << name << "  (" << c.detail() << ")" << std::endl;
    failed += c.ok() ? 0 : 1;
  }
  std::cout << (failed == 0 ? "all acceptance criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
