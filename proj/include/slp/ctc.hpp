#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "slp/tensor.hpp"

namespace slp::ctc {

/// Fewest frames that can emit `target`: its length plus one separating
/// blank per adjacent repeated label.
std::size_t minimum_frames(std::span<const int> target);

/// Negative log-likelihood of `target` under per-frame log-probabilities
/// (T x C, one row per frame), summed over every blank-augmented alignment
/// that collapses to the target. Differentiable with respect to the
/// log-probabilities.
///
/// Throws InfeasibleAlignmentError when no alignment exists and ShapeError
/// when a target id is out of range or equal to `blank`.
template <typename T>
nn::Tensor<T> ctc_loss(const nn::Tensor<T>& log_probs, std::span<const int> target, int blank);

/// Best-path decoding: per-frame argmax, merge repeats, drop blanks.
template <typename T>
std::vector<int> greedy_collapse(const nn::Tensor<T>& log_probs, int blank);

/// Merge repeats, drop blanks.
std::vector<int> collapse_path(std::span<const int> path, int blank);

}  // namespace slp::ctc
