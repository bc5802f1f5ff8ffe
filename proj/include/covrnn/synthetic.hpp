#pragma once

// Deterministic synthetic models and image data for demos and tests.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "covrnn/dataset.hpp"
#include "covrnn/model.hpp"
#include "covrnn/rng.hpp"

namespace covrnn::synthetic {

inline Matrix uniform_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale) {
  Matrix m(rows, cols);
  for (auto& v : m.flat()) v = rng.uniform_real(-scale, scale);
  return m;
}

inline Vector uniform_vector(Rng& rng, std::size_t n, double center, double scale) {
  Vector v(n);
  for (auto& x : v) x = center + rng.uniform_real(-scale, scale);
  return v;
}

struct LstmShape {
  std::size_t units = 4;
  double recurrent_scale = 0.5;
  double input_scale = 0.5;
  double forget_bias = 0.0;
  double bias_scale = 0.1;
};

inline LstmLayerWeights random_lstm(Rng& rng, std::size_t input_dim, const LstmShape& shape) {
  const std::size_t u = shape.units;
  auto gate = [&] {
    Matrix w(u, u + input_dim);
    for (std::size_t r = 0; r < u; ++r) {
      for (std::size_t c = 0; c < u + input_dim; ++c) {
        const double s = c < u ? shape.recurrent_scale : shape.input_scale;
        w(r, c) = rng.uniform_real(-s, s);
      }
    }
    return w;
  };
  LstmLayerWeights l;
  l.w_f = gate();
  l.w_i = gate();
  l.w_c = gate();
  l.w_o = gate();
  l.b_f = uniform_vector(rng, u, shape.forget_bias, shape.bias_scale);
  l.b_i = uniform_vector(rng, u, 0.0, shape.bias_scale);
  l.b_c = uniform_vector(rng, u, 0.0, shape.bias_scale);
  l.b_o = uniform_vector(rng, u, 0.0, shape.bias_scale);
  return l;
}

/// The 28x28 row-sequence classifier shape: two LSTM layers, then a ReLU
/// dense layer and a softmax dense layer over 10 classes.
inline ModelSpec row_model(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LstmLayerWeights> lstm;
  lstm.push_back(random_lstm(rng, 28, {48, 0.3, 1.5, 1.0, 0.2}));
  lstm.push_back(random_lstm(rng, 48, {64, 0.3, 3.0, 2.3, 1.2}));
  std::vector<DenseLayerWeights> dense;
  dense.push_back({uniform_matrix(rng, 32, 64, 0.5), uniform_vector(rng, 32, 0.0, 0.1), Activation::relu});
  dense.push_back({uniform_matrix(rng, 10, 32, 0.8), uniform_vector(rng, 10, 0.0, 0.1), Activation::softmax});
  return ModelSpec({28, 28}, 10, HeadInput::last, std::move(lstm), std::move(dense));
}

/// 28x28 byte images: a class-dependent pair of strokes plus sparse noise.
inline std::vector<std::vector<unsigned char>> stroke_images(std::size_t count, std::uint64_t seed,
                                                             std::vector<unsigned char>& labels) {
  Rng rng(seed);
  std::vector<std::vector<unsigned char>> images;
  labels.clear();
  for (std::size_t k = 0; k < count; ++k) {
    const auto label = static_cast<unsigned char>(rng.below(10));
    std::vector<unsigned char> img(28 * 28, 0);
    const std::size_t row = 4 + 2 * label + rng.below(3);
    const std::size_t col = 3 + 2 * ((label * 7) % 10) + rng.below(3);
    const std::size_t top = 2 + rng.below(4);
    const std::size_t bottom = 20 + rng.below(6);
    for (std::size_t c = 4; c < 24; ++c) {
      img[row * 28 + c] = static_cast<unsigned char>(180 + rng.below(76));
    }
    for (std::size_t r = top; r < bottom; ++r) {
      img[r * 28 + col] = static_cast<unsigned char>(160 + rng.below(96));
      if (label % 2 == 1) img[r * 28 + col + 1] = static_cast<unsigned char>(120 + rng.below(100));
    }
    for (std::size_t n = 0; n < 20; ++n) img[rng.below(28 * 28)] = static_cast<unsigned char>(rng.below(90));
    images.push_back(std::move(img));
    labels.push_back(label);
  }
  return images;
}

inline Dataset stroke_dataset(std::size_t count, std::uint64_t seed) {
  std::vector<unsigned char> labels;
  const auto images = stroke_images(count, seed, labels);
  Dataset ds;
  for (const auto& img : images) {
    Sequence s(28, 28);
    auto flat = s.flat();
    for (std::size_t p = 0; p < img.size(); ++p) flat[p] = img[p] / 255.0;
    ds.inputs.push_back(std::move(s));
  }
  ds.labels.assign(labels.begin(), labels.end());
  return ds;
}

}  // namespace covrnn::synthetic
