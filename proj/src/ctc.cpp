#include "slp/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "slp/errors.hpp"

namespace slp::ctc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace

std::size_t minimum_frames(std::span<const int> target) {
  std::size_t repeats = 0;
  for (std::size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++repeats;
  }
  return target.size() + repeats;
}

std::vector<int> collapse_path(std::span<const int> path, int blank) {
  std::vector<int> out;
  int previous = blank;
  for (const int label : path) {
    if (label != blank && label != previous) out.push_back(label);
    previous = label;
  }
  return out;
}

template <typename T>
nn::Tensor<T> ctc_loss(const nn::Tensor<T>& log_probs, std::span<const int> target, int blank) {
  const std::size_t frames = log_probs.rows();
  const std::size_t classes = log_probs.cols();
  if (blank < 0 || static_cast<std::size_t>(blank) >= classes) throw ShapeError("ctc: blank id out of range");
  for (const int label : target) {
    if (label < 0 || static_cast<std::size_t>(label) >= classes || label == blank) {
      throw ShapeError("ctc: target id " + std::to_string(label) + " invalid for " + std::to_string(classes) +
                       " classes with blank " + std::to_string(blank));
    }
  }
  if (frames < minimum_frames(target)) {
    throw InfeasibleAlignmentError("ctc: target of length " + std::to_string(target.size()) + " needs at least " +
                                   std::to_string(minimum_frames(target)) + " frames, got " +
                                   std::to_string(frames));
  }

  // Extended label sequence: blank, l1, blank, l2, ..., blank.
  const std::size_t states = 2 * target.size() + 1;
  std::vector<int> ext(states, blank);
  for (std::size_t u = 0; u < target.size(); ++u) ext[2 * u + 1] = target[u];
  auto can_skip = [&](std::size_t s) { return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]; };

  const auto lp = log_probs.values();
  auto emit = [&](std::size_t t, std::size_t s) {
    return static_cast<double>(lp[t * classes + static_cast<std::size_t>(ext[s])]);
  };

  // alpha includes the emission at t; beta covers frames after t only.
  std::vector<double> alpha(frames * states, kNegInf);
  std::vector<double> beta(frames * states, kNegInf);
  alpha[0] = emit(0, 0);
  if (states > 1) alpha[1] = emit(0, 1);
  for (std::size_t t = 1; t < frames; ++t) {
    for (std::size_t s = 0; s < states; ++s) {
      double acc = alpha[(t - 1) * states + s];
      if (s >= 1) acc = log_add(acc, alpha[(t - 1) * states + s - 1]);
      if (can_skip(s)) acc = log_add(acc, alpha[(t - 1) * states + s - 2]);
      alpha[t * states + s] = acc == kNegInf ? kNegInf : acc + emit(t, s);
    }
  }
  const std::size_t last = frames - 1;
  double log_likelihood = alpha[last * states + states - 1];
  if (states > 1) log_likelihood = log_add(log_likelihood, alpha[last * states + states - 2]);
  if (log_likelihood == kNegInf) {
    throw InfeasibleAlignmentError("ctc: target has zero probability under the given frames");
  }

  auto result = nn::Tensor<T>::scalar(static_cast<T>(-log_likelihood));
  if (!std::isfinite(static_cast<double>(result.item()))) throw NumericError("ctc: non-finite loss");

  nn::Tape<T>* tape = nn::active_tape<T>();
  if (tape != nullptr && log_probs.requires_grad()) {
    beta[last * states + states - 1] = 0.0;
    if (states > 1) beta[last * states + states - 2] = 0.0;
    for (std::size_t t = last; t-- > 0;) {
      for (std::size_t s = 0; s < states; ++s) {
        double acc = beta[(t + 1) * states + s] + emit(t + 1, s);
        if (s + 1 < states) acc = log_add(acc, beta[(t + 1) * states + s + 1] + emit(t + 1, s + 1));
        if (s + 2 < states && can_skip(s + 2)) {
          acc = log_add(acc, beta[(t + 1) * states + s + 2] + emit(t + 1, s + 2));
        }
        beta[t * states + s] = acc;
      }
    }
    // d(-log p)/d log y_t(k) = -sum_{s: ext[s]=k} alpha_t(s) beta_t(s) / p
    std::vector<T> grad(frames * classes, T{0});
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t s = 0; s < states; ++s) {
        const double occupancy = alpha[t * states + s] + beta[t * states + s] - log_likelihood;
        if (occupancy == kNegInf) continue;
        grad[t * classes + static_cast<std::size_t>(ext[s])] -= static_cast<T>(std::exp(occupancy));
      }
    }
    result.set_requires_grad(true);
    tape->record([in = log_probs.handle(), out = result.handle(), grad = std::move(grad)] {
      if (out->grad.empty() || !in->requires_grad) return;
      in->ensure_grad();
      const T g = out->grad[0];
      for (std::size_t i = 0; i < grad.size(); ++i) in->grad[i] += g * grad[i];
    });
  }
  return result;
}

template <typename T>
std::vector<int> greedy_collapse(const nn::Tensor<T>& log_probs, int blank) {
  std::vector<int> path(log_probs.rows());
  const auto v = log_probs.values();
  const std::size_t classes = log_probs.cols();
  for (std::size_t t = 0; t < path.size(); ++t) {
    const auto row = v.subspan(t * classes, classes);
    path[t] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return collapse_path(path, blank);
}

template nn::Tensor<float> ctc_loss<float>(const nn::Tensor<float>&, std::span<const int>, int);
template nn::Tensor<double> ctc_loss<double>(const nn::Tensor<double>&, std::span<const int>, int);
template std::vector<int> greedy_collapse<float>(const nn::Tensor<float>&, int);
template std::vector<int> greedy_collapse<double>(const nn::Tensor<double>&, int);

}  // namespace slp::ctc
