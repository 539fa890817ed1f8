#pragma once

#include <cstdint>
#include <vector>

#include "slp/layers.hpp"

namespace slp::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Per-parameter first/second moments, indexed like the parameter list they
/// were created for.
template <typename T>
struct OptimizerState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<T>> first_moment;
  std::vector<std::vector<T>> second_moment;

  OptimizerState() = default;
  OptimizerState(AdamConfig cfg, const ParameterList<T>& params);
};

/// One bias-corrected Adam update using each parameter's accumulated
/// gradient (a parameter with no gradient is treated as having a zero one).
/// Gradients are left in place; callers zero them.
template <typename T>
void adam_step(const ParameterList<T>& params, OptimizerState<T>& state);

}  // namespace slp::nn
