#include "slp/optim.hpp"

#include <cmath>

#include "slp/errors.hpp"

namespace slp::nn {

template <typename T>
OptimizerState<T>::OptimizerState(AdamConfig cfg, const ParameterList<T>& params) : config(cfg) {
  first_moment.reserve(params.size());
  second_moment.reserve(params.size());
  for (const auto& p : params) {
    first_moment.emplace_back(p.tensor.size(), T{0});
    second_moment.emplace_back(p.tensor.size(), T{0});
  }
}

template <typename T>
void adam_step(const ParameterList<T>& params, OptimizerState<T>& state) {
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw ShapeError("optimizer state does not match parameter list");
  }
  state.step += 1;
  const auto& cfg = state.config;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& node = *params[i].tensor.handle();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    if (m.size() != node.value.size() || v.size() != node.value.size()) {
      throw ShapeError("moment shape mismatch for parameter " + params[i].name);
    }
    const bool has_grad = node.grad.size() == node.value.size();
    for (std::size_t j = 0; j < node.value.size(); ++j) {
      const T g = has_grad ? node.grad[j] : T{0};
      m[j] = b1 * m[j] + (T{1} - b1) * g;
      v[j] = b2 * v[j] + (T{1} - b2) * g * g;
      const double m_hat = static_cast<double>(m[j]) / bc1;
      const double v_hat = static_cast<double>(v[j]) / bc2;
      node.value[j] -= static_cast<T>(cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
    }
  }
}

template struct OptimizerState<float>;
template struct OptimizerState<double>;
template void adam_step<float>(const ParameterList<float>&, OptimizerState<float>&);
template void adam_step<double>(const ParameterList<double>&, OptimizerState<double>&);

}  // namespace slp::nn
