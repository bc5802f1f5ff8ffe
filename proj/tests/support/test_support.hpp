#pragma once

// Test-only helpers: fixture paths, model builders, and oracles that are
// deliberately independent of the library's implementation paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "covrnn/covrnn.hpp"
#include "covrnn/synthetic.hpp"

namespace covrnn::testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(COVRNN_FIXTURE_DIR) / name;
}

inline nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("covrnn_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline Sequence sequence_from_rows(const std::vector<std::vector<double>>& rows) {
  Sequence s(rows.size(), rows.front().size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t k = 0; k < rows[t].size(); ++k) s(t, k) = rows[t][k];
  }
  return s;
}

inline LstmLayerWeights zero_lstm(std::size_t units, std::size_t input_dim) {
  const Matrix w(units, units + input_dim);
  const Vector b(units, 0.0);
  return {w, w, w, w, b, b, b, b};
}

// tiny2's shapes with every weight and bias zero except the dense bias.
inline ModelSpec zero_tiny2(Vector dense_bias = {0.3, -0.2}) {
  return ModelSpec({4, 3}, 2, HeadInput::last, {zero_lstm(2, 3)},
                   {{Matrix(2, 2), std::move(dense_bias), Activation::softmax}});
}

inline Sequence random_input(Rng& rng, std::size_t steps, std::size_t features, double lo = -1.0,
                             double hi = 1.0) {
  Sequence s(steps, features);
  for (auto& v : s.flat()) v = rng.uniform_real(lo, hi);
  return s;
}

/// Small random classifier: 1-2 LSTM layers, 1-2 dense layers, random head wiring.
inline ModelSpec random_small_model(Rng& rng) {
  const std::size_t n = 1 + rng.below(5);
  const std::size_t d = 1 + rng.below(4);
  const std::size_t classes = 2 + rng.below(3);
  const std::size_t lstm_count = 1 + rng.below(2);
  std::vector<LstmLayerWeights> lstm;
  std::size_t width = d;
  for (std::size_t k = 0; k < lstm_count; ++k) {
    synthetic::LstmShape shape{1 + rng.below(4), 0.8, 0.8, rng.uniform_real(-1, 1), 0.5};
    lstm.push_back(synthetic::random_lstm(rng, width, shape));
    width = shape.units;
  }
  const HeadInput head = rng.below(2) ? HeadInput::last : HeadInput::flatten;
  std::size_t in = head == HeadInput::last ? width : width * n;
  std::vector<DenseLayerWeights> dense;
  if (rng.below(2)) {
    const std::size_t hidden = 2 + rng.below(4);
    const Activation act = rng.below(2) ? Activation::relu : Activation::identity;
    dense.push_back({synthetic::uniform_matrix(rng, hidden, in, 1.0), synthetic::uniform_vector(rng, hidden, 0.2, 0.5), act});
    in = hidden;
  }
  const std::uint64_t pick = rng.below(3);
  const Activation last = pick == 0 ? Activation::softmax : pick == 1 ? Activation::identity : Activation::relu;
  dense.push_back({synthetic::uniform_matrix(rng, classes, in, 1.5), synthetic::uniform_vector(rng, classes, 0.3, 0.5), last});
  return ModelSpec({n, d}, classes, head, std::move(lstm), std::move(dense));
}

// ---------------------------------------------------------------------------
// Oracles

/// Central finite differences of the classification loss.
inline Sequence finite_difference_gradient(const ModelSpec& model, const Sequence& input, std::size_t target,
                                           double step = 1e-5) {
  Sequence grad(input.steps(), input.features());
  Sequence probe = input;
  for (std::size_t k = 0; k < probe.flat().size(); ++k) {
    const double orig = probe.flat()[k];
    probe.flat()[k] = orig + step;
    const double up = classification_loss(model, probe, target);
    probe.flat()[k] = orig - step;
    const double down = classification_loss(model, probe, target);
    probe.flat()[k] = orig;
    grad.flat()[k] = (up - down) / (2.0 * step);
  }
  return grad;
}

inline bool gradient_close(double analytic, double numeric, double rel_tol = 1e-4, double abs_floor = 1e-7) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= abs_floor) return true;
  return diff / std::max(std::abs(analytic), std::abs(numeric)) < rel_tol;
}

struct NaiveRegistry {
  std::vector<std::uint64_t> cell, gate;
  std::map<std::string, std::uint64_t> pos, neg;
};

/// Recomputes every registry from raw traces with plain loops: positive and
/// negative sums, step differences against h_0 = 0, forget-gate means, and
/// interval lookup by linear scan.
inline NaiveRegistry naive_registry(const std::vector<Trace>& traces, const CoverageConfig& cfg,
                                    const Symbolizer* sym) {
  NaiveRegistry r;
  const std::size_t n = traces.front().layers[cfg.target_layer].size();
  r.cell.assign(n, 0);
  r.gate.assign(n, 0);
  for (const auto& tr : traces) {
    const auto& steps = tr.layers[cfg.target_layer];
    double prev_plus = 0.0, prev_minus = 0.0;
    std::string pos, neg;
    for (std::size_t t = 0; t < n; ++t) {
      double plus = 0.0, minus = 0.0;
      for (double v : steps[t].h) {
        if (v > 0) plus += v;
        if (v < 0) minus += v;
      }
      const double delta = std::fabs(plus - prev_plus) + std::fabs(minus - prev_minus);
      if (delta > cfg.alpha_h) ++r.cell[t];
      double fsum = 0.0;
      for (double v : steps[t].f) fsum += v;
      if (fsum / static_cast<double>(steps[t].f.size()) > cfg.alpha_f) ++r.gate[t];
      prev_plus = plus;
      prev_minus = minus;
      if (sym && t + 1 >= cfg.seq_range.lo && t + 1 <= cfg.seq_range.hi) {
        const auto& pb = sym->pos_bounds[t + 1 - cfg.seq_range.lo];
        const auto& nb = sym->neg_bounds[t + 1 - cfg.seq_range.lo];
        std::size_t ps = 0, ns = 0;
        for (double b : pb) ps += plus > b ? 1 : 0;
        for (double b : nb) ns += minus > b ? 1 : 0;
        pos += static_cast<char>('a' + ps);
        neg += static_cast<char>('a' + ns);
      }
    }
    if (sym) {
      ++r.pos[pos];
      ++r.neg[neg];
    }
  }
  return r;
}

/// Smallest number of sets whose union equals the union of all sets, by
/// enumerating every subset mask.
inline std::size_t exhaustive_min_cover_size(const std::vector<std::vector<ConditionId>>& sets) {
  std::set<ConditionId> all;
  for (const auto& s : sets) all.insert(s.begin(), s.end());
  std::size_t best = sets.size();
  for (std::uint32_t mask = 0; mask < (1u << sets.size()); ++mask) {
    std::set<ConditionId> got;
    std::size_t size = 0;
    for (std::size_t k = 0; k < sets.size(); ++k) {
      if (mask & (1u << k)) {
        ++size;
        got.insert(sets[k].begin(), sets[k].end());
      }
    }
    if (got == all) best = std::min(best, size);
  }
  return best;
}

}  // namespace covrnn::testing
