#include "slp/layers.hpp"

#include <cmath>

namespace slp::nn {

template <typename T>
Tensor<T> glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<T> values(rows * cols);
  for (auto& v : values) v = static_cast<T>(dist(rng));
  return Tensor<T>(rows, cols, std::move(values), true);
}

template <typename T>
Tensor<T> normal_init(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<T> values(rows * cols);
  for (auto& v : values) v = static_cast<T>(dist(rng));
  return Tensor<T>(rows, cols, std::move(values), true);
}

template <typename T>
Linear<T>::Linear(std::size_t in, std::size_t out, std::mt19937_64& rng)
    : weight(glorot<T>(in, out, rng)), bias(Tensor<T>::zeros(1, out, true)) {}

template <typename T>
void Linear<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

template <typename T>
LayerNorm<T>::LayerNorm(std::size_t features)
    : gain(Tensor<T>(1, features, std::vector<T>(features, T{1}), true)),
      bias(Tensor<T>::zeros(1, features, true)) {}

template <typename T>
void LayerNorm<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  out.push_back({prefix + ".gain", gain});
  out.push_back({prefix + ".bias", bias});
}

template Tensor<float> glorot<float>(std::size_t, std::size_t, std::mt19937_64&);
template Tensor<double> glorot<double>(std::size_t, std::size_t, std::mt19937_64&);
template Tensor<float> normal_init<float>(std::size_t, std::size_t, double, std::mt19937_64&);
template Tensor<double> normal_init<double>(std::size_t, std::size_t, double, std::mt19937_64&);
template struct Linear<float>;
template struct Linear<double>;
template struct LayerNorm<float>;
template struct LayerNorm<double>;

}  // namespace slp::nn
