#pragma once

// Parameter bookkeeping and the two parametric building blocks shared by
// every model: affine maps and layer normalization.

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "slp/tensor.hpp"

namespace slp::nn {

template <typename T>
struct NamedParameter {
  std::string name;
  Tensor<T> tensor;
};

template <typename T>
using ParameterList = std::vector<NamedParameter<T>>;

template <typename T>
void set_requires_grad(const ParameterList<T>& params, bool flag) {
  for (const auto& p : params) p.tensor.handle()->requires_grad = flag;
}

template <typename T>
void zero_grads(const ParameterList<T>& params) {
  for (const auto& p : params) p.tensor.handle()->grad.clear();
}

/// Glorot-uniform initialized (rows x cols) leaf that requires grad.
template <typename T>
Tensor<T> glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

/// Normal(0, stddev) initialized leaf that requires grad.
template <typename T>
Tensor<T> normal_init(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng);

/// y = x W + b with W: (in x out), b: (1 x out).
template <typename T>
struct Linear {
  Tensor<T> weight;
  Tensor<T> bias;

  Linear() = default;
  Linear(std::size_t in, std::size_t out, std::mt19937_64& rng);

  [[nodiscard]] Tensor<T> operator()(const Tensor<T>& x) const { return add_row(matmul(x, weight), bias); }
  [[nodiscard]] std::size_t in_features() const { return weight.rows(); }
  [[nodiscard]] std::size_t out_features() const { return weight.cols(); }
  void collect(ParameterList<T>& out, const std::string& prefix) const;
};

template <typename T>
struct LayerNorm {
  Tensor<T> gain;
  Tensor<T> bias;
  T eps = static_cast<T>(1e-5);

  LayerNorm() = default;
  explicit LayerNorm(std::size_t features);

  [[nodiscard]] Tensor<T> operator()(const Tensor<T>& x) const { return layer_norm(x, gain, bias, eps); }
  void collect(ParameterList<T>& out, const std::string& prefix) const;
};

}  // namespace slp::nn
