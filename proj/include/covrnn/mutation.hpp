#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "covrnn/error.hpp"
#include "covrnn/model.hpp"
#include "covrnn/rng.hpp"

namespace covrnn {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

struct MutationConfig {
  Interval epsilon_range{0.001, 0.01};
  std::int64_t tau_min = 1;
  std::int64_t tau_max = 5;
  Interval clamp{0.0, 1.0};
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (!(epsilon_range.lo > 0.0) || epsilon_range.lo > epsilon_range.hi) {
      throw ConfigError("epsilon range must satisfy 0 < lo <= hi");
    }
    if (tau_min < 1 || tau_min > tau_max) throw ConfigError("tau range must satisfy 1 <= lo <= hi");
    if (!(clamp.lo < clamp.hi)) throw ConfigError("clamp interval must satisfy lo < hi");
  }
};

struct SgaParams {
  double epsilon = 0.0;
  std::int64_t tau = 0;
  friend bool operator==(const SgaParams&, const SgaParams&) = default;
};

inline SgaParams sample_params(const MutationConfig& cfg, Rng& rng) {
  SgaParams p;
  p.epsilon = rng.uniform_real(cfg.epsilon_range.lo, cfg.epsilon_range.hi);
  p.tau = rng.uniform_int(cfg.tau_min, cfg.tau_max);
  return p;
}

/// Gradient ascent on the cross-entropy of the seed's own prediction:
/// tau steps of x <- clamp(x + epsilon * grad).
inline Sequence sga_mutate(const ModelSpec& model, const Sequence& seed_input, double epsilon,
                           std::int64_t tau, const MutationConfig& cfg) {
  Sequence x = seed_input;
  if (tau <= 0) return x;
  const std::size_t label = predict(model, seed_input);
  for (std::int64_t step = 0; step < tau; ++step) {
    const Sequence g = input_gradient(model, x, label);
    auto xs = x.flat();
    auto gs = g.flat();
    for (std::size_t k = 0; k < xs.size(); ++k) {
      xs[k] = std::clamp(xs[k] + epsilon * gs[k], cfg.clamp.lo, cfg.clamp.hi);
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// Token-sequence inputs

using TokenId = std::int32_t;

struct Lexicon {
  std::vector<std::string> words;  // id -> surface form
  std::unordered_map<std::string, TokenId> ids;
  std::map<TokenId, std::vector<TokenId>> synonyms;

  TokenId id_of(const std::string& w) const {
    auto it = ids.find(w);
    if (it == ids.end()) throw ParseError("token '" + w + "' not in vocabulary");
    return it->second;
  }

  TokenId add_word(const std::string& w) {
    auto [it, inserted] = ids.emplace(w, static_cast<TokenId>(words.size()));
    if (inserted) words.push_back(w);
    return it->second;
  }
};

struct DiscreteInput {
  std::vector<TokenId> tokens;
  std::shared_ptr<const Lexicon> lexicon;
};

enum class DiscreteOp { synonym_replace, random_insert, random_swap, random_delete };

inline const char* to_string(DiscreteOp op) {
  switch (op) {
    case DiscreteOp::synonym_replace: return "synonym_replace";
    case DiscreteOp::random_insert: return "random_insert";
    case DiscreteOp::random_swap: return "random_swap";
    case DiscreteOp::random_delete: return "random_delete";
  }
  return "?";
}

struct DiscreteMutation {
  DiscreteInput result;
  bool unchanged = true;
};

inline DiscreteMutation mutate_discrete(const DiscreteInput& input, DiscreteOp op, Rng& rng) {
  DiscreteMutation out{input, true};
  auto& toks = out.result.tokens;
  const std::size_t len = toks.size();
  if (len == 0) return out;

  switch (op) {
    case DiscreteOp::synonym_replace: {
      if (!input.lexicon) return out;
      std::vector<std::size_t> candidates;
      for (std::size_t k = 0; k < len; ++k) {
        auto it = input.lexicon->synonyms.find(toks[k]);
        if (it != input.lexicon->synonyms.end() && !it->second.empty()) candidates.push_back(k);
      }
      if (candidates.empty()) return out;
      const std::size_t pos = candidates[rng.below(candidates.size())];
      const auto& syns = input.lexicon->synonyms.at(toks[pos]);
      toks[pos] = syns[rng.below(syns.size())];
      break;
    }
    case DiscreteOp::random_insert: {
      const TokenId tok = toks[rng.below(len)];
      const std::size_t pos = rng.below(len + 1);
      toks.insert(toks.begin() + static_cast<std::ptrdiff_t>(pos), tok);
      out.unchanged = false;
      return out;
    }
    case DiscreteOp::random_swap: {
      if (len < 2) return out;
      const std::size_t a = rng.below(len);
      std::size_t b = rng.below(len - 1);
      if (b >= a) ++b;
      std::swap(toks[a], toks[b]);
      break;
    }
    case DiscreteOp::random_delete: {
      toks.erase(toks.begin() + static_cast<std::ptrdiff_t>(rng.below(len)));
      out.unchanged = false;
      return out;
    }
  }
  out.unchanged = toks == input.tokens;
  return out;
}

/// Reads `token<TAB>syn1,syn2,...` lines. Words outside the vocabulary are
/// skipped, and a token never lists itself as a synonym.
inline void load_synonyms(Lexicon& lex, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open synonym file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected token<TAB>synonyms");
    }
    const auto key_it = lex.ids.find(line.substr(0, tab));
    if (key_it == lex.ids.end()) continue;
    const TokenId key = key_it->second;
    auto& list = lex.synonyms[key];
    std::stringstream rest(line.substr(tab + 1));
    std::string word;
    while (std::getline(rest, word, ',')) {
      const auto syn_it = lex.ids.find(word);
      if (syn_it == lex.ids.end()) continue;
      const TokenId syn = syn_it->second;
      if (syn != key && std::find(list.begin(), list.end(), syn) == list.end()) list.push_back(syn);
    }
  }
}

}  // namespace covrnn
