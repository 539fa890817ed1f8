#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "slp/tensor.hpp"

namespace slp::testing {

using TensorD = nn::Tensor<double>;

inline TensorD random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, bool requires_grad = true,
                             double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = u(rng);
  return TensorD(rows, cols, std::move(v), requires_grad);
}

struct GradCheck {
  double max_error = 0.0;
  std::size_t checked = 0;
};

// Analytic gradients from the tape against central differences (h = 1e-5).
// Error per entry is |a - n| / max(|a|, |n|, floor); `sample` > 0 checks only
// that many randomly chosen entries across all inputs.
inline GradCheck check_gradients(const std::vector<TensorD>& inputs, const std::function<TensorD()>& loss_fn,
                                 double floor = 1e-6, std::size_t sample = 0, std::uint64_t sample_seed = 0) {
  for (const auto& t : inputs) t.handle()->grad.clear();
  {
    nn::Tape<double> tape;
    nn::TapeScope<double> scope(tape);
    const auto loss = loss_fn();
    tape.backward(loss);
  }
  std::vector<std::pair<std::size_t, std::size_t>> entries;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t k = 0; k < inputs[i].size(); ++k) entries.emplace_back(i, k);
  }
  if (sample > 0 && sample < entries.size()) {
    std::mt19937_64 rng(sample_seed);
    std::shuffle(entries.begin(), entries.end(), rng);
    entries.resize(sample);
  }
  constexpr double h = 1e-5;
  GradCheck out;
  for (const auto& [i, k] : entries) {
    auto t = inputs[i];
    auto values = t.mutable_values();
    const double saved = values[k];
    values[k] = saved + h;
    const double plus = loss_fn().item();
    values[k] = saved - h;
    const double minus = loss_fn().item();
    values[k] = saved;
    const double numeric = (plus - minus) / (2.0 * h);
    const auto grad = t.grad();
    const double analytic = grad.empty() ? 0.0 : grad[k];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    out.max_error = std::max(out.max_error, std::abs(analytic - numeric) / denom);
    ++out.checked;
  }
  return out;
}

// Weighted sum with fixed random weights, so every output entry matters.
inline TensorD weighted_sum(const TensorD& x, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto w = random_tensor(x.rows(), x.cols(), rng, false);
  return nn::sum(nn::mul(x, w));
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("slp_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace slp::testing
