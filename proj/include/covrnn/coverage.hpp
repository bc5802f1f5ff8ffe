#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "covrnn/error.hpp"
#include "covrnn/model.hpp"

namespace covrnn {

// Positive and negative mass of a hidden-state vector.
struct AggregateInfo {
  double xi_plus = 0.0;
  double xi_minus = 0.0;
  friend bool operator==(const AggregateInfo&, const AggregateInfo&) = default;
};

inline AggregateInfo aggregate_info(std::span<const double> h) {
  AggregateInfo a;
  for (double v : h) {
    if (v > 0.0) {
      a.xi_plus += v;
    } else if (v < 0.0) {
      a.xi_minus += v;
    }
  }
  return a;
}

inline double delta_aggregate(const AggregateInfo& cur, const AggregateInfo& prev) {
  return std::abs(cur.xi_plus - prev.xi_plus) + std::abs(cur.xi_minus - prev.xi_minus);
}

// Mean of the forget-gate components.
inline double forget_rate(std::span<const double> f) {
  if (f.empty()) throw DimensionError("forget_rate of an empty gate vector");
  double sum = 0.0;
  for (double v : f) sum += v;
  return sum / static_cast<double>(f.size());
}

/// 1-based inclusive timestep interval.
struct StepRange {
  std::size_t lo = 1;
  std::size_t hi = 1;
  std::size_t length() const { return hi - lo + 1; }
  friend bool operator==(const StepRange&, const StepRange&) = default;
};

struct CoverageConfig {
  double alpha_h = 6.0;
  double alpha_f = 0.85;
  std::size_t symbol_count = 2;
  StepRange seq_range{1, 1};
  std::size_t target_layer = 0;  // index among the model's LSTM layers

  void validate(std::size_t timesteps, std::size_t lstm_layers) const {
    if (!(alpha_h > 0.0) || !std::isfinite(alpha_h)) throw ConfigError("alpha_h must be positive");
    if (!(alpha_f >= 0.0 && alpha_f <= 1.0)) throw ConfigError("alpha_f must lie in [0, 1]");
    if (symbol_count < 2 || symbol_count > 26) throw ConfigError("symbol_count must be in [2, 26]");
    if (seq_range.lo < 1 || seq_range.lo > seq_range.hi || seq_range.hi > timesteps) {
      throw ConfigError("seq range [" + std::to_string(seq_range.lo) + ", " +
                        std::to_string(seq_range.hi) + "] not within [1, " +
                        std::to_string(timesteps) + "]");
    }
    if (target_layer >= lstm_layers) {
      throw ConfigError("target layer " + std::to_string(target_layer + 1) + " but model has " +
                        std::to_string(lstm_layers) + " lstm layers");
    }
  }
};

enum class ConditionKind { cell, gate, seq_pos, seq_neg };

/// One test condition. Cell and gate conditions carry a 1-based timestep;
/// sequence conditions carry a symbol pattern.
struct ConditionId {
  ConditionKind kind = ConditionKind::cell;
  std::size_t step = 0;
  std::string pattern;

  static ConditionId cell(std::size_t t) { return {ConditionKind::cell, t, {}}; }
  static ConditionId gate(std::size_t t) { return {ConditionKind::gate, t, {}}; }
  static ConditionId seq_pos(std::string p) { return {ConditionKind::seq_pos, 0, std::move(p)}; }
  static ConditionId seq_neg(std::string p) { return {ConditionKind::seq_neg, 0, std::move(p)}; }

  std::string str() const {
    switch (kind) {
      case ConditionKind::cell: return "cell:" + std::to_string(step);
      case ConditionKind::gate: return "gate:" + std::to_string(step);
      case ConditionKind::seq_pos: return "seq+:" + pattern;
      case ConditionKind::seq_neg: return "seq-:" + pattern;
    }
    return {};
  }

  static ConditionId parse(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw ParseError("bad condition id '" + s + "'");
    const std::string head = s.substr(0, colon);
    const std::string tail = s.substr(colon + 1);
    if (head == "cell") return cell(std::stoul(tail));
    if (head == "gate") return gate(std::stoul(tail));
    if (head == "seq+") return seq_pos(tail);
    if (head == "seq-") return seq_neg(tail);
    throw ParseError("bad condition id '" + s + "'");
  }

  friend auto operator<=>(const ConditionId&, const ConditionId&) = default;
  friend bool operator==(const ConditionId&, const ConditionId&) = default;
};

// ---------------------------------------------------------------------------
// Symbolic representation for sequence coverage

/// Per-timestep interval boundaries for xi+ and xi-. A value maps to the
/// number of boundaries strictly below it, so a value on a boundary takes the
/// lower symbol.
struct Symbolizer {
  StepRange range;
  std::size_t symbol_count = 2;
  std::vector<Vector> pos_bounds;  // [t - lo][symbol_count - 1], ascending
  std::vector<Vector> neg_bounds;

  static std::size_t symbol_index(double value, std::span<const double> bounds) {
    return static_cast<std::size_t>(std::lower_bound(bounds.begin(), bounds.end(), value) -
                                    bounds.begin());
  }
  static char symbol_char(std::size_t index) { return static_cast<char>('a' + index); }

  friend bool operator==(const Symbolizer&, const Symbolizer&) = default;
};

/// Linear-interpolation quantile over sorted values: position q * (N - 1).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto below = static_cast<std::size_t>(std::floor(pos));
  const std::size_t above = std::min(below + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(below);
  return sorted[below] + frac * (sorted[above] - sorted[below]);
}

inline std::vector<AggregateInfo> layer_aggregates(const Trace& trace, std::size_t layer) {
  std::vector<AggregateInfo> out;
  out.reserve(trace.layers.at(layer).size());
  for (const auto& s : trace.layers[layer]) out.push_back(aggregate_info(s.h));
  return out;
}

/// Equal-frequency boundaries per timestep in the sequence range, fitted on
/// the given traces.
inline Symbolizer fit_symbolizer(std::span<const Trace> traces, const CoverageConfig& cfg) {
  if (traces.empty()) throw ConfigError("fit_symbolizer needs at least one trace");
  Symbolizer sym;
  sym.range = cfg.seq_range;
  sym.symbol_count = cfg.symbol_count;
  const std::size_t len = cfg.seq_range.length();
  std::vector<Vector> pos(len), neg(len);
  for (const auto& tr : traces) {
    const auto agg = layer_aggregates(tr, cfg.target_layer);
    if (agg.size() < cfg.seq_range.hi) throw DimensionError("trace shorter than seq range");
    for (std::size_t k = 0; k < len; ++k) {
      pos[k].push_back(agg[cfg.seq_range.lo - 1 + k].xi_plus);
      neg[k].push_back(agg[cfg.seq_range.lo - 1 + k].xi_minus);
    }
  }
  auto bounds = [&](Vector& values) {
    std::sort(values.begin(), values.end());
    Vector b;
    for (std::size_t s = 1; s < cfg.symbol_count; ++s) {
      b.push_back(quantile_sorted(values, static_cast<double>(s) / static_cast<double>(cfg.symbol_count)));
    }
    return b;
  };
  for (std::size_t k = 0; k < len; ++k) {
    sym.pos_bounds.push_back(bounds(pos[k]));
    sym.neg_bounds.push_back(bounds(neg[k]));
  }
  return sym;
}

struct SymbolPatterns {
  std::string pos;
  std::string neg;
};

inline SymbolPatterns symbolize_trace(const Trace& trace, const Symbolizer& sym,
                                      const CoverageConfig& cfg) {
  if (sym.pos_bounds.size() != cfg.seq_range.length() || sym.range != cfg.seq_range) {
    throw ConfigError("symbolizer not fitted for this sequence range");
  }
  const auto agg = layer_aggregates(trace, cfg.target_layer);
  SymbolPatterns p;
  for (std::size_t k = 0; k < cfg.seq_range.length(); ++k) {
    const auto& a = agg.at(cfg.seq_range.lo - 1 + k);
    p.pos += Symbolizer::symbol_char(Symbolizer::symbol_index(a.xi_plus, sym.pos_bounds[k]));
    p.neg += Symbolizer::symbol_char(Symbolizer::symbol_index(a.xi_minus, sym.neg_bounds[k]));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Registries

/// Conditions one trace satisfies. Computing this is independent per trace;
/// folding it into a CoverageState is the single merge point.
struct TraceConditions {
  std::vector<std::size_t> cells;  // 1-based timesteps
  std::vector<std::size_t> gates;
  std::optional<SymbolPatterns> patterns;

  std::vector<ConditionId> ids() const {
    std::vector<ConditionId> out;
    for (auto t : cells) out.push_back(ConditionId::cell(t));
    for (auto t : gates) out.push_back(ConditionId::gate(t));
    if (patterns) {
      out.push_back(ConditionId::seq_pos(patterns->pos));
      out.push_back(ConditionId::seq_neg(patterns->neg));
    }
    return out;
  }
};

inline TraceConditions onestep_conditions(const Trace& trace, const CoverageConfig& cfg) {
  TraceConditions tc;
  const auto& steps = trace.layers.at(cfg.target_layer);
  AggregateInfo prev;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const auto cur = aggregate_info(steps[t].h);
    if (delta_aggregate(cur, prev) > cfg.alpha_h) tc.cells.push_back(t + 1);
    if (forget_rate(steps[t].f) > cfg.alpha_f) tc.gates.push_back(t + 1);
    prev = cur;
  }
  return tc;
}

inline TraceConditions trace_conditions(const Trace& trace, const CoverageConfig& cfg,
                                        const Symbolizer* sym) {
  auto tc = onestep_conditions(trace, cfg);
  if (sym != nullptr) tc.patterns = symbolize_trace(trace, *sym, cfg);
  return tc;
}

struct CoverageRates {
  double cell = 0.0;
  double gate = 0.0;
  double seq_pos = 0.0;
  double seq_neg = 0.0;
  friend bool operator==(const CoverageRates&, const CoverageRates&) = default;
};

struct CoverageTimes {
  std::vector<std::uint64_t> cell;  // index t-1
  std::vector<std::uint64_t> gate;
  std::map<std::string, std::uint64_t> seq_pos;
  std::map<std::string, std::uint64_t> seq_neg;
  friend bool operator==(const CoverageTimes&, const CoverageTimes&) = default;
};

class CoverageState {
 public:
  explicit CoverageState(std::size_t timesteps) {
    times_.cell.assign(timesteps, 0);
    times_.gate.assign(timesteps, 0);
  }

  std::size_t timesteps() const { return times_.cell.size(); }

  void set_symbolizer(Symbolizer sym) { symbolizer_ = std::move(sym); }
  const std::optional<Symbolizer>& symbolizer() const { return symbolizer_; }

  /// Adds one trace's firings; returns conditions whose count went 0 -> 1.
  std::vector<ConditionId> commit(const TraceConditions& tc) {
    std::vector<ConditionId> fresh;
    for (auto t : tc.cells) {
      if (times_.cell.at(t - 1)++ == 0) fresh.push_back(ConditionId::cell(t));
    }
    for (auto t : tc.gates) {
      if (times_.gate.at(t - 1)++ == 0) fresh.push_back(ConditionId::gate(t));
    }
    if (tc.patterns) {
      if (times_.seq_pos[tc.patterns->pos]++ == 0) fresh.push_back(ConditionId::seq_pos(tc.patterns->pos));
      if (times_.seq_neg[tc.patterns->neg]++ == 0) fresh.push_back(ConditionId::seq_neg(tc.patterns->neg));
    }
    return fresh;
  }

  const CoverageTimes& times() const { return times_; }

 private:
  CoverageTimes times_;
  std::optional<Symbolizer> symbolizer_;
};

inline std::vector<ConditionId> update_onestep_coverage(CoverageState& state, const Trace& trace,
                                                        const CoverageConfig& cfg) {
  return state.commit(onestep_conditions(trace, cfg));
}

inline std::vector<ConditionId> update_sequence_coverage(CoverageState& state, const Trace& trace,
                                                         const CoverageConfig& cfg) {
  if (!state.symbolizer()) throw ConfigError("sequence coverage needs a fitted symbolizer");
  TraceConditions tc;
  tc.patterns = symbolize_trace(trace, *state.symbolizer(), cfg);
  return state.commit(tc);
}

/// Cell, gate and (when a symbolizer is set) sequence conditions together.
inline std::vector<ConditionId> update_coverage(CoverageState& state, const Trace& trace,
                                                const CoverageConfig& cfg) {
  const auto& sym = state.symbolizer();
  return state.commit(trace_conditions(trace, cfg, sym ? &*sym : nullptr));
}

inline double sequence_pattern_space(const CoverageConfig& cfg) {
  return std::pow(static_cast<double>(cfg.symbol_count), static_cast<double>(cfg.seq_range.length()));
}

inline CoverageRates coverage_rates(const CoverageState& state, const CoverageConfig& cfg) {
  CoverageRates r;
  const auto& t = state.times();
  const auto n = static_cast<double>(state.timesteps());
  auto positive = [](const std::vector<std::uint64_t>& v) {
    return static_cast<double>(std::count_if(v.begin(), v.end(), [](auto c) { return c > 0; }));
  };
  if (n > 0) {
    r.cell = positive(t.cell) / n;
    r.gate = positive(t.gate) / n;
  }
  const double space = sequence_pattern_space(cfg);
  r.seq_pos = static_cast<double>(t.seq_pos.size()) / space;
  r.seq_neg = static_cast<double>(t.seq_neg.size()) / space;
  return r;
}

inline CoverageTimes coverage_times(const CoverageState& state) { return state.times(); }

}  // namespace covrnn
