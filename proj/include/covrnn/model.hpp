#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "covrnn/error.hpp"
#include "covrnn/tensor.hpp"

namespace covrnn {

enum class Activation { relu, softmax, identity };

// How the dense head consumes the top LSTM layer's hidden states.
enum class HeadInput { last, flatten };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::softmax: return "softmax";
    case Activation::identity: return "identity";
  }
  return "?";
}

inline const char* to_string(HeadInput h) { return h == HeadInput::last ? "last" : "flatten"; }

// Gate matrices are units x (units + input_dim); columns are laid out as
// [h_{t-1} | x_t].
struct LstmLayerWeights {
  Matrix w_f, w_i, w_c, w_o;
  Vector b_f, b_i, b_c, b_o;

  std::size_t units() const { return w_f.rows(); }
  std::size_t input_dim() const { return w_f.cols() - w_f.rows(); }
};

struct DenseLayerWeights {
  Matrix w;
  Vector b;
  Activation activation = Activation::identity;

  std::size_t in_dim() const { return w.cols(); }
  std::size_t out_dim() const { return w.rows(); }
};

struct InputShape {
  std::size_t timesteps = 0;
  std::size_t features = 0;
  friend bool operator==(const InputShape&, const InputShape&) = default;
};

namespace detail {

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline void validate_lstm(const LstmLayerWeights& l, const std::string& where) {
  const std::pair<const char*, const Matrix*> mats[] = {
      {"W_f", &l.w_f}, {"W_i", &l.w_i}, {"W_c", &l.w_c}, {"W_o", &l.w_o}};
  const std::pair<const char*, const Vector*> biases[] = {
      {"b_f", &l.b_f}, {"b_i", &l.b_i}, {"b_c", &l.b_c}, {"b_o", &l.b_o}};
  if (l.w_f.rows() == 0 || l.w_f.cols() <= l.w_f.rows()) {
    throw DimensionError(where + ": W_f is " + shape_str(l.w_f) +
                         ", need units x (units + input_dim) with input_dim >= 1");
  }
  for (const auto& [name, m] : mats) {
    if (m->rows() != l.w_f.rows() || m->cols() != l.w_f.cols()) {
      throw DimensionError(where + ": " + name + " is " + shape_str(*m) + " but W_f is " +
                           shape_str(l.w_f));
    }
    if (!all_finite(m->flat())) throw DimensionError(where + ": " + name + " has non-finite entries");
  }
  for (const auto& [name, b] : biases) {
    if (b->size() != l.units()) {
      throw DimensionError(where + ": " + name + " has length " + std::to_string(b->size()) +
                           " but W_f has " + std::to_string(l.units()) + " rows");
    }
    if (!all_finite(*b)) throw DimensionError(where + ": " + name + " has non-finite entries");
  }
}

inline void validate_dense(const DenseLayerWeights& d, const std::string& where) {
  if (d.w.rows() == 0 || d.w.cols() == 0) throw DimensionError(where + ": W is empty");
  if (d.b.size() != d.w.rows()) {
    throw DimensionError(where + ": b has length " + std::to_string(d.b.size()) + " but W is " +
                         shape_str(d.w));
  }
  if (!all_finite(d.w.flat()) || !all_finite(d.b)) {
    throw DimensionError(where + ": non-finite entries");
  }
}

}  // namespace detail

/// A validated LSTM classifier: one or more LSTM layers followed by a dense
/// head. Immutable once constructed, so it can be shared across threads.
class ModelSpec {
 public:
  ModelSpec(InputShape input_shape, std::size_t class_count, HeadInput head_input,
            std::vector<LstmLayerWeights> lstm_layers, std::vector<DenseLayerWeights> dense_layers)
      : input_shape_(input_shape),
        class_count_(class_count),
        head_input_(head_input),
        lstm_(std::move(lstm_layers)),
        dense_(std::move(dense_layers)) {
    validate();
  }

  const InputShape& input_shape() const { return input_shape_; }
  std::size_t timesteps() const { return input_shape_.timesteps; }
  std::size_t features() const { return input_shape_.features; }
  std::size_t class_count() const { return class_count_; }
  HeadInput head_input() const { return head_input_; }
  const std::vector<LstmLayerWeights>& lstm_layers() const { return lstm_; }
  const std::vector<DenseLayerWeights>& dense_layers() const { return dense_; }

  std::size_t head_width() const {
    const std::size_t u = lstm_.back().units();
    return head_input_ == HeadInput::last ? u : u * input_shape_.timesteps;
  }

 private:
  void validate() const {
    if (input_shape_.timesteps == 0 || input_shape_.features == 0) {
      throw DimensionError("input_shape must be positive");
    }
    if (class_count_ == 0) throw DimensionError("class_count must be positive");
    if (lstm_.empty()) throw DimensionError("model needs at least one lstm layer before the dense head");
    if (dense_.empty()) throw DimensionError("model needs a dense head");

    std::size_t width = input_shape_.features;
    std::string prev = "input";
    for (std::size_t k = 0; k < lstm_.size(); ++k) {
      const std::string here = "layer " + std::to_string(k) + " (lstm)";
      detail::validate_lstm(lstm_[k], here);
      if (lstm_[k].input_dim() != width) {
        throw DimensionError(here + " expects input width " + std::to_string(lstm_[k].input_dim()) +
                             " but " + prev + " provides " + std::to_string(width));
      }
      width = lstm_[k].units();
      prev = here;
    }
    width = head_width();
    for (std::size_t k = 0; k < dense_.size(); ++k) {
      const std::string here = "layer " + std::to_string(lstm_.size() + k) + " (dense)";
      detail::validate_dense(dense_[k], here);
      if (dense_[k].in_dim() != width) {
        throw DimensionError(here + " expects input width " + std::to_string(dense_[k].in_dim()) +
                             " but " + prev + " provides " + std::to_string(width));
      }
      if (dense_[k].activation == Activation::softmax && k + 1 != dense_.size()) {
        throw DimensionError(here + ": softmax is only supported on the final layer");
      }
      width = dense_[k].out_dim();
      prev = here;
    }
    if (width != class_count_) {
      throw DimensionError(prev + " produces " + std::to_string(width) + " outputs but class_count is " +
                           std::to_string(class_count_));
    }
  }

  InputShape input_shape_;
  std::size_t class_count_;
  HeadInput head_input_;
  std::vector<LstmLayerWeights> lstm_;
  std::vector<DenseLayerWeights> dense_;
};

// ---------------------------------------------------------------------------
// Weight file I/O

namespace detail {

using nlohmann::json;

inline const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + ": missing field '" + key + "'");
  return *it;
}

inline double read_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ParseError(path + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ParseError(path + ": number is not finite");
  return x;
}

inline std::size_t read_count(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() <= 0) {
    throw ParseError(path + ": expected a positive integer");
  }
  return v.get<std::size_t>();
}

inline Vector read_vector(const json& v, const std::string& path) {
  if (!v.is_array()) throw ParseError(path + ": expected an array");
  Vector out;
  out.reserve(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    out.push_back(read_number(v[k], path + "[" + std::to_string(k) + "]"));
  }
  return out;
}

inline Matrix read_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ParseError(path + ": expected a non-empty array of rows");
  std::vector<double> data;
  std::size_t cols = 0;
  for (std::size_t r = 0; r < v.size(); ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    Vector row = read_vector(v[r], rp);
    if (r == 0) cols = row.size();
    if (row.size() != cols) {
      throw ParseError(rp + ": row has " + std::to_string(row.size()) + " entries, expected " +
                       std::to_string(cols));
    }
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(v.size(), cols, std::move(data));
}

inline json write_matrix(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(json(std::vector<double>(row.begin(), row.end())));
  }
  return rows;
}

}  // namespace detail

inline ModelSpec parse_model(std::string_view text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("model parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  } catch (const json::exception& e) {
    throw ParseError(std::string("model parse error: ") + e.what());
  }

  const auto& shape = detail::field(doc, "input_shape", "$");
  if (!shape.is_array() || shape.size() != 2) throw ParseError("$.input_shape: expected [n, d]");
  InputShape input_shape{detail::read_count(shape[0], "$.input_shape[0]"),
                         detail::read_count(shape[1], "$.input_shape[1]")};
  const std::size_t classes = detail::read_count(detail::field(doc, "class_count", "$"), "$.class_count");

  HeadInput head = HeadInput::last;
  if (auto it = doc.find("head_input"); it != doc.end()) {
    if (*it == "last") {
      head = HeadInput::last;
    } else if (*it == "flatten") {
      head = HeadInput::flatten;
    } else {
      throw ParseError("$.head_input: expected \"last\" or \"flatten\"");
    }
  }

  const auto& layers = detail::field(doc, "layers", "$");
  if (!layers.is_array()) throw ParseError("$.layers: expected an array");
  std::vector<LstmLayerWeights> lstm;
  std::vector<DenseLayerWeights> dense;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const std::string path = "$.layers[" + std::to_string(k) + "]";
    const auto& obj = layers[k];
    const auto& type = detail::field(obj, "type", path);
    auto mat = [&](const char* key) {
      return detail::read_matrix(detail::field(obj, key, path), path + "." + key);
    };
    auto vec = [&](const char* key) {
      return detail::read_vector(detail::field(obj, key, path), path + "." + key);
    };
    if (type == "lstm") {
      if (!dense.empty()) {
        throw DimensionError("layer " + std::to_string(k) + " (lstm) follows a dense layer");
      }
      LstmLayerWeights l{mat("W_f"), mat("W_i"), mat("W_c"), mat("W_o"),
                         vec("b_f"), vec("b_i"), vec("b_c"), vec("b_o")};
      if (auto it = obj.find("units"); it != obj.end()) {
        const std::size_t units = detail::read_count(*it, path + ".units");
        if (units != l.w_f.rows()) {
          throw DimensionError("layer " + std::to_string(k) + " (lstm): units is " +
                               std::to_string(units) + " but W_f has " +
                               std::to_string(l.w_f.rows()) + " rows");
        }
      }
      lstm.push_back(std::move(l));
    } else if (type == "dense") {
      DenseLayerWeights d{mat("W"), vec("b"), Activation::identity};
      const auto& act = detail::field(obj, "activation", path);
      if (act == "relu") {
        d.activation = Activation::relu;
      } else if (act == "softmax") {
        d.activation = Activation::softmax;
      } else if (act == "identity") {
        d.activation = Activation::identity;
      } else {
        throw ParseError(path + ".activation: expected relu, softmax or identity");
      }
      dense.push_back(std::move(d));
    } else {
      throw ParseError(path + ".type: unsupported layer type " + type.dump());
    }
  }
  return ModelSpec(input_shape, classes, head, std::move(lstm), std::move(dense));
}

inline ModelSpec load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

inline nlohmann::json model_to_json(const ModelSpec& model) {
  using detail::json;
  using detail::write_matrix;
  json doc = json::object();
  doc["input_shape"] = {model.timesteps(), model.features()};
  doc["class_count"] = model.class_count();
  doc["head_input"] = to_string(model.head_input());
  json layers = json::array();
  for (const auto& l : model.lstm_layers()) {
    layers.push_back({{"type", "lstm"},
                      {"units", l.units()},
                      {"W_f", write_matrix(l.w_f)},
                      {"W_i", write_matrix(l.w_i)},
                      {"W_c", write_matrix(l.w_c)},
                      {"W_o", write_matrix(l.w_o)},
                      {"b_f", l.b_f},
                      {"b_i", l.b_i},
                      {"b_c", l.b_c},
                      {"b_o", l.b_o}});
  }
  for (const auto& d : model.dense_layers()) {
    layers.push_back({{"type", "dense"},
                      {"activation", to_string(d.activation)},
                      {"W", write_matrix(d.w)},
                      {"b", d.b}});
  }
  doc["layers"] = std::move(layers);
  return doc;
}

inline void save_model(const ModelSpec& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file " + path.string());
  out << model_to_json(model).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Forward pass

struct StepTrace {
  Vector f, i, o, c, h;
};

struct Trace {
  std::vector<std::vector<StepTrace>> layers;  // [lstm layer][timestep]
  Vector logits;                               // final layer output before softmax
  Vector probabilities;                        // softmax(logits)
  std::size_t predicted_class = 0;
};

namespace detail {

struct StepCache {
  StepTrace trace;
  Vector g;  // candidate tanh(W_c [h, x] + b_c)
};

inline StepCache lstm_step_full(const LstmLayerWeights& w, std::span<const double> x,
                                std::span<const double> c_prev, std::span<const double> h_prev) {
  const std::size_t u = w.units();
  Vector z(u + x.size());
  std::copy(h_prev.begin(), h_prev.end(), z.begin());
  std::copy(x.begin(), x.end(), z.begin() + static_cast<std::ptrdiff_t>(u));

  StepCache s;
  s.trace.f = affine(w.w_f, z, w.b_f);
  s.trace.i = affine(w.w_i, z, w.b_i);
  s.g = affine(w.w_c, z, w.b_c);
  s.trace.o = affine(w.w_o, z, w.b_o);
  s.trace.c.resize(u);
  s.trace.h.resize(u);
  for (std::size_t k = 0; k < u; ++k) {
    s.trace.f[k] = sigmoid(s.trace.f[k]);
    s.trace.i[k] = sigmoid(s.trace.i[k]);
    s.trace.o[k] = sigmoid(s.trace.o[k]);
    s.g[k] = std::tanh(s.g[k]);
    s.trace.c[k] = s.trace.f[k] * c_prev[k] + s.trace.i[k] * s.g[k];
    s.trace.h[k] = s.trace.o[k] * std::tanh(s.trace.c[k]);
  }
  return s;
}

struct ForwardPass {
  std::vector<std::vector<StepCache>> lstm;
  std::vector<Vector> dense_in;
  std::vector<Vector> dense_pre;
  Vector logits;
};

inline void check_input(const ModelSpec& model, const Sequence& input) {
  if (input.steps() != model.timesteps() || input.features() != model.features()) {
    throw DimensionError("input is " + std::to_string(input.steps()) + "x" +
                         std::to_string(input.features()) + " but model expects " +
                         std::to_string(model.timesteps()) + "x" + std::to_string(model.features()));
  }
}

inline Vector softmax(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  Vector p(z.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) sum += (p[k] = std::exp(z[k] - m));
  for (auto& v : p) v /= sum;
  return p;
}

inline ForwardPass forward(const ModelSpec& model, const Sequence& input) {
  check_input(model, input);
  const std::size_t n = model.timesteps();
  ForwardPass fp;
  fp.lstm.reserve(model.lstm_layers().size());
  for (std::size_t layer = 0; layer < model.lstm_layers().size(); ++layer) {
    const auto& w = model.lstm_layers()[layer];
    const Vector zeros(w.units(), 0.0);
    std::vector<StepCache> steps;
    steps.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
      std::span<const double> x =
          layer == 0 ? input.step(t) : std::span<const double>(fp.lstm[layer - 1][t].trace.h);
      std::span<const double> c_prev = t == 0 ? std::span<const double>(zeros) : steps[t - 1].trace.c;
      std::span<const double> h_prev = t == 0 ? std::span<const double>(zeros) : steps[t - 1].trace.h;
      steps.push_back(lstm_step_full(w, x, c_prev, h_prev));
    }
    fp.lstm.push_back(std::move(steps));
  }

  const auto& top = fp.lstm.back();
  Vector act;
  if (model.head_input() == HeadInput::last) {
    act = top.back().trace.h;
  } else {
    for (const auto& s : top) act.insert(act.end(), s.trace.h.begin(), s.trace.h.end());
  }
  for (const auto& d : model.dense_layers()) {
    Vector z = affine(d.w, act, d.b);
    fp.dense_in.push_back(std::move(act));
    act = z;
    if (d.activation == Activation::relu) {
      for (auto& v : act) v = std::max(v, 0.0);
    }
    fp.dense_pre.push_back(std::move(z));
  }
  fp.logits = std::move(act);
  return fp;
}

inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (v[k] > v[best]) best = k;
  }
  return best;
}

inline void check_target(const ModelSpec& model, std::size_t target) {
  if (target >= model.class_count()) {
    throw ConfigError("target class " + std::to_string(target) + " out of range [0, " +
                      std::to_string(model.class_count()) + ")");
  }
}

inline double cross_entropy(std::span<const double> logits, std::size_t target) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  return std::log(sum) + m - logits[target];
}

}  // namespace detail

/// One LSTM cell update for a single timestep.
inline StepTrace lstm_step(const LstmLayerWeights& weights, std::span<const double> x_t,
                           std::span<const double> c_prev, std::span<const double> h_prev) {
  if (x_t.size() != weights.input_dim() || c_prev.size() != weights.units() ||
      h_prev.size() != weights.units()) {
    throw DimensionError("lstm_step: got x " + std::to_string(x_t.size()) + ", c " +
                         std::to_string(c_prev.size()) + ", h " + std::to_string(h_prev.size()) +
                         " for a layer with input_dim " + std::to_string(weights.input_dim()) +
                         " and " + std::to_string(weights.units()) + " units");
  }
  return detail::lstm_step_full(weights, x_t, c_prev, h_prev).trace;
}

/// Runs the model from zero initial state and records every gate and state
/// vector of every LSTM layer. Ties in the prediction go to the lowest class.
inline Trace run_forward(const ModelSpec& model, const Sequence& input) {
  auto fp = detail::forward(model, input);
  Trace tr;
  tr.layers.reserve(fp.lstm.size());
  for (auto& layer : fp.lstm) {
    std::vector<StepTrace> steps;
    steps.reserve(layer.size());
    for (auto& s : layer) steps.push_back(std::move(s.trace));
    tr.layers.push_back(std::move(steps));
  }
  tr.probabilities = detail::softmax(fp.logits);
  tr.predicted_class = detail::argmax(fp.logits);
  tr.logits = std::move(fp.logits);
  return tr;
}

inline std::size_t predict(const ModelSpec& model, const Sequence& input) {
  return detail::argmax(detail::forward(model, input).logits);
}

/// Cross-entropy of the softmax output against `target_class`.
inline double classification_loss(const ModelSpec& model, const Sequence& input,
                                  std::size_t target_class) {
  detail::check_target(model, target_class);
  return detail::cross_entropy(detail::forward(model, input).logits, target_class);
}

/// Gradient of classification_loss with respect to every input component,
/// by backpropagation through time.
inline Sequence input_gradient(const ModelSpec& model, const Sequence& input,
                               std::size_t target_class) {
  detail::check_target(model, target_class);
  const auto fp = detail::forward(model, input);
  const std::size_t n = model.timesteps();

  Vector grad = detail::softmax(fp.logits);
  grad[target_class] -= 1.0;

  for (std::size_t k = model.dense_layers().size(); k-- > 0;) {
    const auto& d = model.dense_layers()[k];
    if (d.activation == Activation::relu) {
      for (std::size_t r = 0; r < grad.size(); ++r) {
        if (fp.dense_pre[k][r] <= 0.0) grad[r] = 0.0;
      }
    }
    Vector below(d.in_dim(), 0.0);
    accumulate_transposed(d.w, grad, below);
    grad = std::move(below);
  }

  // Gradient w.r.t. the top layer's hidden state at every step.
  const std::size_t top_units = model.lstm_layers().back().units();
  Matrix d_hidden(n, top_units);
  if (model.head_input() == HeadInput::last) {
    std::copy(grad.begin(), grad.end(), d_hidden.row(n - 1).begin());
  } else {
    std::copy(grad.begin(), grad.end(), d_hidden.flat().begin());
  }

  for (std::size_t layer = model.lstm_layers().size(); layer-- > 0;) {
    const auto& w = model.lstm_layers()[layer];
    const auto& steps = fp.lstm[layer];
    const std::size_t u = w.units();
    const std::size_t in = w.input_dim();
    Matrix d_input(n, in);
    Vector dh_next(u, 0.0), dc_next(u, 0.0);
    Vector a_f(u), a_i(u), a_g(u), a_o(u), dz(u + in);
    for (std::size_t t = n; t-- > 0;) {
      const auto& s = steps[t].trace;
      const auto& g = steps[t].g;
      const auto dh_out = d_hidden.row(t);
      for (std::size_t k = 0; k < u; ++k) {
        const double c_prev = t > 0 ? steps[t - 1].trace.c[k] : 0.0;
        const double dh = dh_out[k] + dh_next[k];
        const double tc = std::tanh(s.c[k]);
        const double d_o = dh * tc;
        const double dc = dh * s.o[k] * (1.0 - tc * tc) + dc_next[k];
        a_f[k] = dc * c_prev * s.f[k] * (1.0 - s.f[k]);
        a_i[k] = dc * g[k] * s.i[k] * (1.0 - s.i[k]);
        a_g[k] = dc * s.i[k] * (1.0 - g[k] * g[k]);
        a_o[k] = d_o * s.o[k] * (1.0 - s.o[k]);
        dc_next[k] = dc * s.f[k];
      }
      std::fill(dz.begin(), dz.end(), 0.0);
      accumulate_transposed(w.w_f, a_f, dz);
      accumulate_transposed(w.w_i, a_i, dz);
      accumulate_transposed(w.w_c, a_g, dz);
      accumulate_transposed(w.w_o, a_o, dz);
      std::copy(dz.begin(), dz.begin() + static_cast<std::ptrdiff_t>(u), dh_next.begin());
      std::copy(dz.begin() + static_cast<std::ptrdiff_t>(u), dz.end(), d_input.row(t).begin());
    }
    d_hidden = std::move(d_input);
  }

  Sequence out(n, model.features());
  std::copy(d_hidden.flat().begin(), d_hidden.flat().end(), out.flat().begin());
  return out;
}

}  // namespace covrnn
