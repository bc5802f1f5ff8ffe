#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "covrnn/error.hpp"
#include "covrnn/model.hpp"

namespace covrnn {

struct OracleConfig {
  double radius = 0.1;  // closed Euclidean ball around each seed

  void validate() const {
    if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("oracle radius must be positive");
  }
};

struct Verdict {
  bool valid = false;
  bool adversarial = false;
  double distance = 0.0;
  std::size_t seed_class = 0;
  std::size_t mutant_class = 0;
  std::optional<std::size_t> seed_label;  // dataset ground truth, when known
};

/// Validity is membership in the closed ball; a valid mutant is adversarial
/// when its prediction differs from the seed's.
inline Verdict judge(const ModelSpec& model, const Sequence& seed, const Sequence& mutant,
                     const OracleConfig& cfg) {
  if (!seed.same_shape(mutant)) throw DimensionError("seed and mutant differ in shape");
  Verdict v;
  v.distance = l2_distance(mutant.flat(), seed.flat());
  v.valid = v.distance <= cfg.radius;
  v.seed_class = predict(model, seed);
  v.mutant_class = predict(model, mutant);
  v.adversarial = v.valid && v.seed_class != v.mutant_class;
  return v;
}

// Same as judge() with both predictions already computed.
inline Verdict judge_predicted(const Sequence& seed, std::size_t seed_class, const Sequence& mutant,
                               std::size_t mutant_class, const OracleConfig& cfg) {
  if (!seed.same_shape(mutant)) throw DimensionError("seed and mutant differ in shape");
  Verdict v;
  v.distance = l2_distance(mutant.flat(), seed.flat());
  v.valid = v.distance <= cfg.radius;
  v.seed_class = seed_class;
  v.mutant_class = mutant_class;
  v.adversarial = v.valid && v.seed_class != v.mutant_class;
  return v;
}

struct JudgedPair {
  double distance = 0.0;
  std::size_t seed_class = 0;
  std::size_t mutant_class = 0;
};

struct AdversarialCurve {
  std::vector<double> radii;
  std::vector<std::size_t> counts;
  double area = 0.0;  // trapezoidal area under (radius, count)
};

inline AdversarialCurve adversarial_curve(std::span<const JudgedPair> suite, std::span<const double> radii) {
  for (std::size_t k = 1; k < radii.size(); ++k) {
    if (radii[k] < radii[k - 1]) throw ConfigError("adversarial_curve radii must be ascending");
  }
  AdversarialCurve c;
  c.radii.assign(radii.begin(), radii.end());
  for (double r : radii) {
    std::size_t count = 0;
    for (const auto& p : suite) {
      if (p.distance <= r && p.seed_class != p.mutant_class) ++count;
    }
    c.counts.push_back(count);
  }
  for (std::size_t k = 1; k < radii.size(); ++k) {
    c.area += 0.5 * (radii[k] - radii[k - 1]) *
              static_cast<double>(c.counts[k] + c.counts[k - 1]);
  }
  return c;
}

}  // namespace covrnn
