#pragma once

// Dense row-major matrices with tape-based reverse-mode differentiation.
//
// A Tensor is a shared handle to a node holding values and (lazily) gradients.
// Operations record a backward closure on the calling thread's active Tape when
// at least one input requires a gradient. Without an active tape nothing is
// recorded, which is how inference runs.

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "slp/attention_mask.hpp"

namespace slp::nn {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool operator==(const Shape&) const = default;
};

template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until something flows into it
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T{0});
  }
};

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, std::vector<T> values, bool requires_grad = false);

  static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
  static Tensor filled(std::size_t rows, std::size_t cols, T value);
  static Tensor scalar(T value);
  static Tensor identity(std::size_t n);

  [[nodiscard]] bool defined() const noexcept { return node_ != nullptr; }
  [[nodiscard]] Shape shape() const { return node_->shape; }
  [[nodiscard]] std::size_t rows() const { return node_->shape.rows; }
  [[nodiscard]] std::size_t cols() const { return node_->shape.cols; }
  [[nodiscard]] std::size_t size() const { return node_->value.size(); }

  [[nodiscard]] std::span<const T> values() const { return node_->value; }
  /// In-place access for parameter updates and test fixtures; never use on
  /// a tensor that is part of a live tape.
  [[nodiscard]] std::span<T> mutable_values() { return node_->value; }

  [[nodiscard]] T at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
  void set(std::size_t r, std::size_t c, T v) { node_->value[r * cols() + c] = v; }
  /// Value of a 1x1 tensor.
  [[nodiscard]] T item() const;

  [[nodiscard]] bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }

  /// Accumulated gradient; empty span when nothing has flowed in.
  [[nodiscard]] std::span<const T> grad() const { return node_->grad; }
  void zero_grad() { node_->grad.clear(); }

  /// Fresh leaf holding a copy of the values, detached from any tape.
  [[nodiscard]] Tensor detach() const;

  template <typename U>
  [[nodiscard]] Tensor<U> cast() const {
    std::vector<U> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = static_cast<U>(node_->value[i]);
    return Tensor<U>(rows(), cols(), std::move(out));
  }

  /// Row-major slice of one row as a copy.
  [[nodiscard]] std::vector<T> row(std::size_t r) const;

  // Op-implementation access.
  [[nodiscard]] const std::shared_ptr<TensorNode<T>>& handle() const noexcept { return node_; }

 private:
  std::shared_ptr<TensorNode<T>> node_;
};

/// Ordered record of executed differentiable operations. backward() replays
/// the record in reverse and then clears it.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::function<void()> backward_fn) { entries_.push_back(std::move(backward_fn)); }
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  void clear() noexcept { entries_.clear(); }

  /// Seeds d(loss)/d(loss) = 1 and propagates to every requires_grad leaf.
  /// Throws ShapeError for a non-scalar loss.
  void backward(const Tensor<T>& loss);

 private:
  std::vector<std::function<void()>> entries_;
};

template <typename T>
Tape<T>* active_tape() noexcept;

/// Makes `tape` the active tape of this thread for the scope's lifetime.
template <typename T>
class TapeScope {
 public:
  explicit TapeScope(Tape<T>& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<T>* previous_;
};

// ---- operations ------------------------------------------------------------

template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
/// Element-wise product.
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
/// a (m x n) + row (1 x n) broadcast over rows.
template <typename T> Tensor<T> add_row(const Tensor<T>& a, const Tensor<T>& row);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
template <typename T> Tensor<T> relu(const Tensor<T>& a);
template <typename T> Tensor<T> transpose(const Tensor<T>& a);
template <typename T> Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts);
template <typename T> Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts);
template <typename T> Tensor<T> slice_rows(const Tensor<T>& a, std::size_t start, std::size_t count);
template <typename T> Tensor<T> slice_cols(const Tensor<T>& a, std::size_t start, std::size_t count);

/// Row-wise softmax, max-subtracted. Masked-out entries are exactly zero; a
/// fully masked row yields all zeros.
template <typename T> Tensor<T> softmax_rows(const Tensor<T>& a, const AttentionMask* mask = nullptr);
template <typename T> Tensor<T> log_softmax_rows(const Tensor<T>& a);

/// Per-row normalization to zero mean / unit variance, then gain * x + bias.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& a, const Tensor<T>& gain, const Tensor<T>& bias, T eps);

template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> mean(const Tensor<T>& a);

/// Row lookup: out[i] = table[ids[i]].
template <typename T> Tensor<T> embedding(const Tensor<T>& table, std::span<const int> ids);

/// out[i] = a[i, columns[i]] as an (m x 1) column.
template <typename T> Tensor<T> select_columns(const Tensor<T>& a, std::span<const int> columns);

/// Inverted dropout; identity when rate == 0.
template <typename T> Tensor<T> dropout(const Tensor<T>& a, double rate, std::mt19937_64& rng);

}  // namespace slp::nn
