#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "covrnn/error.hpp"
#include "covrnn/mutation.hpp"
#include "covrnn/tensor.hpp"

namespace covrnn {

struct TokenCorpus {
  std::shared_ptr<const Lexicon> lexicon;
  std::vector<std::vector<TokenId>> sequences;
};

/// Inputs as the model sees them. For token data, `inputs` holds the one-hot
/// encodings of `tokens->sequences`.
struct Dataset {
  std::vector<Sequence> inputs;
  std::vector<std::size_t> labels;  // empty when unlabeled
  std::optional<TokenCorpus> tokens;

  std::size_t size() const { return inputs.size(); }
  std::optional<std::size_t> label(std::size_t index) const {
    if (labels.empty()) return std::nullopt;
    return labels[index];
  }
};

// ---------------------------------------------------------------------------
// IDX

namespace detail {

inline std::uint32_t read_be32(std::istream& in, const std::string& what) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw ParseError(what + ": truncated header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

inline void write_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                     static_cast<char>(v)};
  out.write(b, 4);
}

inline std::vector<unsigned char> read_payload(std::istream& in, std::size_t bytes, const std::string& what) {
  std::vector<unsigned char> data(bytes);
  if (bytes > 0 && !in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes))) {
    throw ParseError(what + ": truncated payload, expected " + std::to_string(bytes) + " bytes");
  }
  return data;
}

}  // namespace detail

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Unsigned-byte IDX image file; each image row becomes one timestep and
/// pixels are scaled to [0, 1].
inline std::vector<Sequence> load_idx_images(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string what = path.string();
  const auto magic = detail::read_be32(in, what);
  if (magic != kIdxImagesMagic) {
    std::ostringstream msg;
    msg << what << ": bad magic 0x" << std::hex << magic << ", expected 0x00000803";
    throw ParseError(msg.str());
  }
  const std::size_t count = detail::read_be32(in, what);
  const std::size_t rows = detail::read_be32(in, what);
  const std::size_t cols = detail::read_be32(in, what);
  const auto data = detail::read_payload(in, count * rows * cols, what);
  std::vector<Sequence> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Sequence s(rows, cols);
    auto flat = s.flat();
    for (std::size_t p = 0; p < rows * cols; ++p) flat[p] = data[k * rows * cols + p] / 255.0;
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<std::size_t> load_idx_labels(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string what = path.string();
  const auto magic = detail::read_be32(in, what);
  if (magic != kIdxLabelsMagic) {
    std::ostringstream msg;
    msg << what << ": bad magic 0x" << std::hex << magic << ", expected 0x00000801";
    throw ParseError(msg.str());
  }
  const std::size_t count = detail::read_be32(in, what);
  const auto data = detail::read_payload(in, count, what);
  return {data.begin(), data.end()};
}

inline void write_idx_images(const std::filesystem::path& path, std::uint32_t rows, std::uint32_t cols,
                             const std::vector<std::vector<unsigned char>>& images) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  detail::write_be32(out, kIdxImagesMagic);
  detail::write_be32(out, static_cast<std::uint32_t>(images.size()));
  detail::write_be32(out, rows);
  detail::write_be32(out, cols);
  for (const auto& img : images) out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
}

inline void write_idx_labels(const std::filesystem::path& path, const std::vector<unsigned char>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  detail::write_be32(out, kIdxLabelsMagic);
  detail::write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

inline Dataset load_idx_dataset(const std::filesystem::path& images,
                                const std::optional<std::filesystem::path>& labels = std::nullopt) {
  Dataset ds;
  ds.inputs = load_idx_images(images);
  if (labels) {
    ds.labels = load_idx_labels(*labels);
    if (ds.labels.size() != ds.inputs.size()) {
      throw DimensionError("label count " + std::to_string(ds.labels.size()) + " != image count " +
                           std::to_string(ds.inputs.size()));
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// JSON sequences: {"inputs": [[[...], ...], ...], "labels": [...]}

inline Dataset parse_json_dataset(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("dataset parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  } catch (const json::exception& e) {
    throw ParseError(std::string("dataset parse error: ") + e.what());
  }
  Dataset ds;
  const auto& inputs = detail::field(doc, "inputs", "$");
  if (!inputs.is_array()) throw ParseError("$.inputs: expected an array");
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Matrix m = detail::read_matrix(inputs[k], "$.inputs[" + std::to_string(k) + "]");
    ds.inputs.emplace_back(m.rows(), m.cols(), std::vector<double>(m.flat().begin(), m.flat().end()));
  }
  if (auto it = doc.find("labels"); it != doc.end()) {
    for (std::size_t k = 0; k < it->size(); ++k) {
      const auto& v = (*it)[k];
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ParseError("$.labels[" + std::to_string(k) + "]: expected a non-negative integer");
      }
      ds.labels.push_back(v.get<std::size_t>());
    }
    if (ds.labels.size() != ds.inputs.size()) throw ParseError("$.labels: length differs from $.inputs");
  }
  return ds;
}

inline Dataset load_json_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_json_dataset(buf.str());
}

// ---------------------------------------------------------------------------
// Token sequences

/// One-hot rows, keeping the last `timesteps` tokens and left-padding shorter
/// sequences with zero rows.
inline Sequence one_hot_encode(std::span<const TokenId> tokens, std::size_t vocab_size, std::size_t timesteps) {
  Sequence s(timesteps, vocab_size);
  const std::size_t used = std::min(tokens.size(), timesteps);
  const std::size_t skip = tokens.size() - used;
  for (std::size_t k = 0; k < used; ++k) {
    const auto tok = tokens[skip + k];
    if (tok < 0 || static_cast<std::size_t>(tok) >= vocab_size) {
      throw DimensionError("token id " + std::to_string(tok) + " outside one-hot width " +
                           std::to_string(vocab_size));
    }
    s(timesteps - used + k, static_cast<std::size_t>(tok)) = 1.0;
  }
  return s;
}

/// `vocab` has one word per line (id = line number). Each line of `sequences`
/// is whitespace-separated words, optionally prefixed by `label<TAB>`.
inline Dataset load_token_dataset(const std::filesystem::path& sequences, const std::filesystem::path& vocab,
                                  const std::optional<std::filesystem::path>& synonyms, std::size_t timesteps) {
  auto lex = std::make_shared<Lexicon>();
  {
    std::ifstream in(vocab);
    if (!in) throw IoError("cannot open vocabulary " + vocab.string());
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      lex->add_word(line);
    }
  }
  if (synonyms) load_synonyms(*lex, *synonyms);

  Dataset ds;
  TokenCorpus corpus;
  std::ifstream in(sequences);
  if (!in) throw IoError("cannot open token dataset " + sequences.string());
  std::string line;
  std::size_t lineno = 0;
  bool labelled = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string body = line;
    if (const auto tab = line.find('\t'); tab != std::string::npos) {
      try {
        ds.labels.push_back(std::stoul(line.substr(0, tab)));
      } catch (const std::exception&) {
        throw ParseError(sequences.string() + ":" + std::to_string(lineno) + ": bad label");
      }
      body = line.substr(tab + 1);
      labelled = true;
    } else if (labelled) {
      throw ParseError(sequences.string() + ":" + std::to_string(lineno) + ": missing label");
    }
    std::vector<TokenId> toks;
    std::istringstream words(body);
    std::string w;
    while (words >> w) toks.push_back(lex->id_of(w));
    corpus.sequences.push_back(std::move(toks));
  }
  if (!ds.labels.empty() && ds.labels.size() != corpus.sequences.size()) {
    throw ParseError(sequences.string() + ": some lines lack labels");
  }
  for (const auto& toks : corpus.sequences) {
    ds.inputs.push_back(one_hot_encode(toks, lex->words.size(), timesteps));
  }
  corpus.lexicon = std::move(lex);
  ds.tokens = std::move(corpus);
  return ds;
}

}  // namespace covrnn
