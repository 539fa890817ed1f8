#include "slp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "slp/errors.hpp"

namespace slp::nn {

namespace {

template <typename T>
thread_local Tape<T>* g_active_tape = nullptr;

std::string shape_str(Shape s) {
  return "[" + std::to_string(s.rows) + "x" + std::to_string(s.cols) + "]";
}

template <typename T>
void require_defined(const Tensor<T>& t, const char* op) {
  if (!t.defined()) throw ShapeError(std::string(op) + ": undefined tensor");
}

template <typename T>
void check_finite(const std::vector<T>& v, const char* op) {
  for (const T x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string(op) + ": non-finite value");
  }
}

// Returns the tape to record on when any input needs a gradient.
template <typename T>
Tape<T>* recording_tape(std::initializer_list<const Tensor<T>*> inputs) {
  Tape<T>* tape = g_active_tape<T>;
  if (tape == nullptr) return nullptr;
  for (const auto* t : inputs) {
    if (t->requires_grad()) return tape;
  }
  return nullptr;
}

template <typename T>
Tensor<T> make_output(std::size_t rows, std::size_t cols, std::vector<T> values, const char* op) {
  check_finite(values, op);
  return Tensor<T>(rows, cols, std::move(values));
}

template <typename T>
using NodePtr = std::shared_ptr<TensorNode<T>>;

// grad sink for an input; nullptr when the input does not take gradients
template <typename T>
std::vector<T>* sink(const NodePtr<T>& n) {
  if (!n->requires_grad) return nullptr;
  n->ensure_grad();
  return &n->grad;
}

}  // namespace

// ---- Tensor ----------------------------------------------------------------

template <typename T>
Tensor<T>::Tensor(std::size_t rows, std::size_t cols, std::vector<T> values, bool requires_grad)
    : node_(std::make_shared<TensorNode<T>>()) {
  if (rows == 0 || cols == 0) throw ShapeError("tensor dimensions must be positive");
  if (values.size() != rows * cols) {
    throw ShapeError("tensor value count " + std::to_string(values.size()) + " does not match " +
                     shape_str({rows, cols}));
  }
  node_->shape = {rows, cols};
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
  return Tensor(rows, cols, std::vector<T>(rows * cols, T{0}), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::filled(std::size_t rows, std::size_t cols, T value) {
  return Tensor(rows, cols, std::vector<T>(rows * cols, value));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value) {
  return Tensor(1, 1, {value});
}

template <typename T>
Tensor<T> Tensor<T>::identity(std::size_t n) {
  auto t = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) t.set(i, i, T{1});
  return t;
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str(shape()));
  return node_->value[0];
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(rows(), cols(), node_->value);
}

template <typename T>
std::vector<T> Tensor<T>::row(std::size_t r) const {
  const auto begin = node_->value.begin() + static_cast<std::ptrdiff_t>(r * cols());
  return {begin, begin + static_cast<std::ptrdiff_t>(cols())};
}

// ---- Tape ------------------------------------------------------------------

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  require_defined(loss, "backward");
  if (loss.size() != 1) throw ShapeError("backward requires a scalar loss, got " + shape_str(loss.shape()));
  if (loss.requires_grad()) {
    auto& node = *loss.handle();
    node.ensure_grad();
    node.grad[0] += T{1};
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
  }
  entries_.clear();
}

template <typename T>
Tape<T>* active_tape() noexcept {
  return g_active_tape<T>;
}

template <typename T>
TapeScope<T>::TapeScope(Tape<T>& tape) : previous_(g_active_tape<T>) {
  g_active_tape<T> = &tape;
}

template <typename T>
TapeScope<T>::~TapeScope() {
  g_active_tape<T> = previous_;
}

// ---- ops -------------------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<T> out(m * n, T{0});
  // Zero entries of `a` are skipped: rows of masked attention weights then sum
  // exactly the same terms as the equivalent shorter product.
  for (std::size_t i = 0; i < m; ++i) {
    T* orow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = av[i * k + p];
      if (aip == T{0}) continue;
      const T* brow = bv.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  auto result = make_output(m, n, std::move(out), "matmul");
  if (auto* tape = recording_tape({&a, &b})) {
    result.set_requires_grad(true);
    tape->record([an = a.handle(), bn = b.handle(), on = result.handle(), m, k, n] {
      if (on->grad.empty()) return;
      const auto& g = on->grad;
      if (auto* ga = sink(an)) {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            T acc{0};
            for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bn->value[p * n + j];
            (*ga)[i * k + p] += acc;
          }
        }
      }
      if (auto* gb = sink(bn)) {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            const T aip = an->value[i * k + p];
            if (aip == T{0}) continue;
            for (std::size_t j = 0; j < n; ++j) (*gb)[p * n + j] += aip * g[i * n + j];
          }
        }
      }
    });
  }
  return result;
}

namespace {

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  require_defined(a, op);
  require_defined(b, op);
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

template <typename T>
Tensor<T> add_scaled(const Tensor<T>& a, const Tensor<T>& b, T sign, const char* op) {
  require_same_shape(a, b, op);
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + sign * bv[i];
  auto result = make_output(a.rows(), a.cols(), std::move(out), op);
  if (auto* tape = recording_tape({&a, &b})) {
    result.set_requires_grad(true);
    tape->record([an = a.handle(), bn = b.handle(), on = result.handle(), sign] {
      if (on->grad.empty()) return;
      if (auto* ga = sink(an)) {
        for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += on->grad[i];
      }
      if (auto* gb = sink(bn)) {
        for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] += sign * on->grad[i];
      }
    });
  }
  return result;
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return add_scaled(a, b, T{1}, "add");
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return add_scaled(a, b, T{-1}, "sub");
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  auto result = make_output(a.rows(), a.cols(), std::move(out), "mul");
  if (auto* tape = recording_tape({&a, &b})) {
    result.set_requires_grad(true);
    tape->record([an = a.handle(), bn = b.handle(), on = result.handle()] {
      if (on->grad.empty()) return;
      if (auto* ga = sink(an)) {
        for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += on->grad[i] * bn->value[i];
      }
      if (auto* gb = sink(bn)) {
        for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] += on->grad[i] * an->value[i];
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> add_row(const Tensor<T>& a, const Tensor<T>& row) {
  require_defined(a, "add_row");
  require_defined(row, "add_row");
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("add_row: " + shape_str(a.shape()) + " + " + shape_str(row.shape()));
  }
  const std::size_t m = a.rows(), n = a.cols();
  const auto av = a.values();
  const auto rv = row.values();
  std::vector<T> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = av[i * n + j] + rv[j];
  }
  auto result = make_output(m, n, std::move(out), "add_row");
  if (auto* tape = recording_tape({&a, &row})) {
    result.set_requires_grad(true);
    tape->record([an = a.handle(), rn = row.handle(), on = result.handle(), m, n] {
      if (on->grad.empty()) return;
      if (auto* ga = sink(an)) {
        for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += on->grad[i];
      }
      if (auto* gr = sink(rn)) {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < n; ++j) (*gr)[j] += on->grad[i * n + j];
        }
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  require_defined(a, "scale");
  const auto av = a.values();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * factor;
  auto result = make_output(a.rows(), a.cols(), std::move(out), "scale");
  if (auto* tape = recording_tape({&a})) {
    result.set_requires_grad(true);
    tape->record([an = a.handle(), on = result.handle(), factor] {
      if (on->grad.empty()) return;
      if (auto* ga = sink(an)) {
        for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += on->grad[i] * factor;
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  require_defined(a, "relu");
  const auto av = a.values();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > T{0} ? av[i] : T{0};
  auto result = make_output(a.rows(), a.cols(), std::move(out), "relu");
  if (auto* tape = recording_tape({&a})) {
    result.set_requires_grad(true);
    tape->record([an = a.handle(), on = result.handle()] {
      if (on->grad.empty()) return;
      if (auto* ga = sink(an)) {
        for (std::size_t i = 0; i < ga->size(); ++i) {
          if (an->value[i] > T{0}) (*ga)[i] += on->grad[i];
        }
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  require_defined(a, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  const auto av = a.values();
  std::vector<T> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  }
  auto result = make_output(n, m, std::move(out), "transpose");
  if (auto* tape = recording_tape({&a})) {
    result.set_requires_grad(true);
    tape->record([an = a.handle(), on = result.handle(), m, n] {
      if (on->grad.empty()) return;
      if (auto* ga = sink(an)) {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < n; ++j) (*ga)[i * n + j] += on->grad[j * m + i];
        }
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t n = parts.front().cols();
  std::size_t m = 0;
  for (const auto& p : parts) {
    require_defined(p, "concat_rows");
    if (p.cols() != n) throw ShapeError("concat_rows: column counts differ");
    m += p.rows();
  }
  std::vector<T> out;
  out.reserve(m * n);
  for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  Tensor<T> result(m, n, std::move(out));

  Tape<T>* tape = g_active_tape<T>;
  const bool any = std::any_of(parts.begin(), parts.end(), [](const auto& p) { return p.requires_grad(); });
  if (tape != nullptr && any) {
    result.set_requires_grad(true);
    std::vector<NodePtr<T>> nodes;
    nodes.reserve(parts.size());
    for (const auto& p : parts) nodes.push_back(p.handle());
    tape->record([nodes = std::move(nodes), on = result.handle()] {
      if (on->grad.empty()) return;
      std::size_t offset = 0;
      for (const auto& node : nodes) {
        const std::size_t count = node->value.size();
        if (auto* g = sink(node)) {
          for (std::size_t i = 0; i < count; ++i) (*g)[i] += on->grad[offset + i];
        }
        offset += count;
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t m = parts.front().rows();
  std::size_t n = 0;
  for (const auto& p : parts) {
    require_defined(p, "concat_cols");
    if (p.rows() != m) throw ShapeError("concat_cols: row counts differ");
    n += p.cols();
  }
  std::vector<T> out(m * n);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t pc = p.cols();
    const auto pv = p.values();
    for (std::size_t i = 0; i < m; ++i) {
      std::copy_n(pv.data() + i * pc, pc, out.data() + i * n + offset);
    }
    offset += pc;
  }
  Tensor<T> result(m, n, std::move(out));

  Tape<T>* tape = g_active_tape<T>;
  const bool any = std::any_of(parts.begin(), parts.end(), [](const auto& p) { return p.requires_grad(); });
  if (tape != nullptr && any) {
    result.set_requires_grad(true);
    std::vector<NodePtr<T>> nodes;
    nodes.reserve(parts.size());
    for (const auto& p : parts) nodes.push_back(p.handle());
    tape->record([nodes = std::move(nodes), on = result.handle(), m, n] {
      if (on->grad.empty()) return;
      std::size_t col = 0;
      for (const auto& node : nodes) {
        const std::size_t pc = node->shape.cols;
        if (auto* g = sink(node)) {
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < pc; ++j) (*g)[i * pc + j] += on->grad[i * n + col + j];
          }
        }
        col += pc;
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& a, std::size_t start, std::size_t count) {
  require_defined(a, "slice_rows");
  if (count == 0 || start + count > a.rows()) throw ShapeError("slice_rows: range out of bounds");
  const std::size_t n = a.cols();
  const auto av = a.values();
  std::vector<T> out(av.begin() + static_cast<std::ptrdiff_t>(start * n),
                     av.begin() + static_cast<std::ptrdiff_t>((start + count) * n));
  Tensor<T> result(count, n, std::move(out));
  if (auto* tape = recording_tape({&a})) {
    result.set_requires_grad(true);
    tape->record([an = a.handle(), on = result.handle(), start, n] {
      if (on->grad.empty()) return;
      if (auto* ga = sink(an)) {
        for (std::size_t i = 0; i < on->grad.size(); ++i) (*ga)[start * n + i] += on->grad[i];
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& a, std::size_t start, std::size_t count) {
  require_defined(a, "slice_cols");
  if (count == 0 || start + count > a.cols()) throw ShapeError("slice_cols: range out of bounds");
  const std::size_t m = a.rows(), n = a.cols();
  const auto av = a.values();
  std::vector<T> out(m * count);
  for (std::size_t i = 0; i < m; ++i) std::copy_n(av.data() + i * n + start, count, out.data() + i * count);
  Tensor<T> result(m, count, std::move(out));
  if (auto* tape = recording_tape({&a})) {
    result.set_requires_grad(true);
    tape->record([an = a.handle(), on = result.handle(), start, count, m, n] {
      if (on->grad.empty()) return;
      if (auto* ga = sink(an)) {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < count; ++j) (*ga)[i * n + start + j] += on->grad[i * count + j];
        }
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& a, const AttentionMask* mask) {
  require_defined(a, "softmax_rows");
  const std::size_t m = a.rows(), n = a.cols();
  if (mask != nullptr && (mask->rows() != m || mask->cols() != n)) {
    throw ShapeError("softmax_rows: mask " + shape_str({mask->rows(), mask->cols()}) + " for scores " +
                     shape_str(a.shape()));
  }
  const auto av = a.values();
  std::vector<T> out(m * n, T{0});
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = av.data() + i * n;
    T max_v = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (mask == nullptr || mask->allowed(i, j)) max_v = std::max(max_v, row[j]);
    }
    if (max_v == -std::numeric_limits<T>::infinity()) continue;  // fully masked
    T total{0};
    for (std::size_t j = 0; j < n; ++j) {
      if (mask == nullptr || mask->allowed(i, j)) {
        out[i * n + j] = std::exp(row[j] - max_v);
        total += out[i * n + j];
      }
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= total;
  }
  auto result = make_output(m, n, std::move(out), "softmax_rows");
  if (auto* tape = recording_tape({&a})) {
    result.set_requires_grad(true);
    tape->record([an = a.handle(), on = result.handle(), m, n] {
      if (on->grad.empty()) return;
      if (auto* ga = sink(an)) {
        const auto& y = on->value;
        const auto& g = on->grad;
        for (std::size_t i = 0; i < m; ++i) {
          T dot{0};
          for (std::size_t j = 0; j < n; ++j) dot += y[i * n + j] * g[i * n + j];
          for (std::size_t j = 0; j < n; ++j) (*ga)[i * n + j] += y[i * n + j] * (g[i * n + j] - dot);
        }
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> log_softmax_rows(const Tensor<T>& a) {
  require_defined(a, "log_softmax_rows");
  const std::size_t m = a.rows(), n = a.cols();
  const auto av = a.values();
  std::vector<T> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = av.data() + i * n;
    const T max_v = *std::max_element(row, row + n);
    T total{0};
    for (std::size_t j = 0; j < n; ++j) total += std::exp(row[j] - max_v);
    const T lse = max_v + std::log(total);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = row[j] - lse;
  }
  auto result = make_output(m, n, std::move(out), "log_softmax_rows");
  if (auto* tape = recording_tape({&a})) {
    result.set_requires_grad(true);
    tape->record([an = a.handle(), on = result.handle(), m, n] {
      if (on->grad.empty()) return;
      if (auto* ga = sink(an)) {
        const auto& y = on->value;
        const auto& g = on->grad;
        for (std::size_t i = 0; i < m; ++i) {
          T gsum{0};
          for (std::size_t j = 0; j < n; ++j) gsum += g[i * n + j];
          for (std::size_t j = 0; j < n; ++j) {
            (*ga)[i * n + j] += g[i * n + j] - std::exp(y[i * n + j]) * gsum;
          }
        }
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& a, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
  require_defined(a, "layer_norm");
  const std::size_t m = a.rows(), n = a.cols();
  if (gain.rows() != 1 || gain.cols() != n || bias.rows() != 1 || bias.cols() != n) {
    throw ShapeError("layer_norm: gain/bias must be [1x" + std::to_string(n) + "]");
  }
  const auto av = a.values();
  const auto gv = gain.values();
  const auto bv = bias.values();
  std::vector<T> normed(m * n);
  std::vector<T> inv_std(m);
  std::vector<T> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = av.data() + i * n;
    T mu{0};
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<T>(n);
    T var{0};
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<T>(n);
    inv_std[i] = T{1} / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      normed[i * n + j] = (row[j] - mu) * inv_std[i];
      out[i * n + j] = normed[i * n + j] * gv[j] + bv[j];
    }
  }
  auto result = make_output(m, n, std::move(out), "layer_norm");
  if (auto* tape = recording_tape({&a, &gain, &bias})) {
    result.set_requires_grad(true);
    tape->record([an = a.handle(), gn = gain.handle(), bn = bias.handle(), on = result.handle(),
                  normed = std::move(normed), inv_std = std::move(inv_std), m, n] {
      if (on->grad.empty()) return;
      const auto& g = on->grad;
      if (auto* gg = sink(gn)) {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < n; ++j) (*gg)[j] += g[i * n + j] * normed[i * n + j];
        }
      }
      if (auto* gb = sink(bn)) {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < n; ++j) (*gb)[j] += g[i * n + j];
        }
      }
      if (auto* ga = sink(an)) {
        const T inv_n = T{1} / static_cast<T>(n);
        for (std::size_t i = 0; i < m; ++i) {
          T mean_d{0};
          T mean_dx{0};
          for (std::size_t j = 0; j < n; ++j) {
            const T d = g[i * n + j] * gn->value[j];
            mean_d += d;
            mean_dx += d * normed[i * n + j];
          }
          mean_d *= inv_n;
          mean_dx *= inv_n;
          for (std::size_t j = 0; j < n; ++j) {
            const T d = g[i * n + j] * gn->value[j];
            (*ga)[i * n + j] += inv_std[i] * (d - mean_d - normed[i * n + j] * mean_dx);
          }
        }
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  require_defined(a, "sum");
  T total{0};
  for (const T v : a.values()) total += v;
  auto result = make_output<T>(1, 1, {total}, "sum");
  if (auto* tape = recording_tape({&a})) {
    result.set_requires_grad(true);
    tape->record([an = a.handle(), on = result.handle()] {
      if (on->grad.empty()) return;
      if (auto* ga = sink(an)) {
        for (auto& v : *ga) v += on->grad[0];
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  return scale(sum(a), T{1} / static_cast<T>(a.size()));
}

template <typename T>
Tensor<T> embedding(const Tensor<T>& table, std::span<const int> ids) {
  require_defined(table, "embedding");
  if (ids.empty()) throw ShapeError("embedding: empty id list");
  const std::size_t n = table.cols();
  const auto tv = table.values();
  std::vector<T> out(ids.size() * n);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= table.rows()) {
      throw ShapeError("embedding: id " + std::to_string(ids[i]) + " outside table of " +
                       std::to_string(table.rows()) + " rows");
    }
    std::copy_n(tv.data() + static_cast<std::size_t>(ids[i]) * n, n, out.data() + i * n);
  }
  Tensor<T> result(ids.size(), n, std::move(out));
  if (auto* tape = recording_tape({&table})) {
    result.set_requires_grad(true);
    tape->record([tn = table.handle(), on = result.handle(), ids = std::vector<int>(ids.begin(), ids.end()), n] {
      if (on->grad.empty()) return;
      if (auto* gt = sink(tn)) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
          const std::size_t r = static_cast<std::size_t>(ids[i]);
          for (std::size_t j = 0; j < n; ++j) (*gt)[r * n + j] += on->grad[i * n + j];
        }
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> select_columns(const Tensor<T>& a, std::span<const int> columns) {
  require_defined(a, "select_columns");
  const std::size_t m = a.rows(), n = a.cols();
  if (columns.size() != m) throw ShapeError("select_columns: need one column index per row");
  std::vector<T> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (columns[i] < 0 || static_cast<std::size_t>(columns[i]) >= n) {
      throw ShapeError("select_columns: column index out of range");
    }
    out[i] = a.at(i, static_cast<std::size_t>(columns[i]));
  }
  Tensor<T> result(m, 1, std::move(out));
  if (auto* tape = recording_tape({&a})) {
    result.set_requires_grad(true);
    tape->record([an = a.handle(), on = result.handle(), cols = std::vector<int>(columns.begin(), columns.end()), n] {
      if (on->grad.empty()) return;
      if (auto* ga = sink(an)) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
          (*ga)[i * n + static_cast<std::size_t>(cols[i])] += on->grad[i];
        }
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& a, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw ConfigError("dropout rate must be < 1");
  std::bernoulli_distribution keep(1.0 - rate);
  const T factor = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(a.size());
  for (auto& v : mask) v = keep(rng) ? factor : T{0};
  return mul(a, Tensor<T>(a.rows(), a.cols(), std::move(mask)));
}

#define SLP_INSTANTIATE_TENSOR(T)                                                          \
  template class Tensor<T>;                                                                \
  template class Tape<T>;                                                                  \
  template class TapeScope<T>;                                                             \
  template Tape<T>* active_tape<T>() noexcept;                                             \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> add_row(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> scale(const Tensor<T>&, T);                                           \
  template Tensor<T> relu(const Tensor<T>&);                                               \
  template Tensor<T> transpose(const Tensor<T>&);                                          \
  template Tensor<T> concat_rows(const std::vector<Tensor<T>>&);                           \
  template Tensor<T> concat_cols(const std::vector<Tensor<T>>&);                           \
  template Tensor<T> slice_rows(const Tensor<T>&, std::size_t, std::size_t);               \
  template Tensor<T> slice_cols(const Tensor<T>&, std::size_t, std::size_t);               \
  template Tensor<T> softmax_rows(const Tensor<T>&, const AttentionMask*);                 \
  template Tensor<T> log_softmax_rows(const Tensor<T>&);                                   \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);  \
  template Tensor<T> sum(const Tensor<T>&);                                                \
  template Tensor<T> mean(const Tensor<T>&);                                               \
  template Tensor<T> embedding(const Tensor<T>&, std::span<const int>);                    \
  template Tensor<T> select_columns(const Tensor<T>&, std::span<const int>);               \
  template Tensor<T> dropout(const Tensor<T>&, double, std::mt19937_64&);

SLP_INSTANTIATE_TENSOR(float)
SLP_INSTANTIATE_TENSOR(double)

#undef SLP_INSTANTIATE_TENSOR

}  // namespace slp::nn
