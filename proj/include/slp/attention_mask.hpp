#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace slp::nn {

/// Boolean query-by-key visibility matrix. `allowed(q, k)` is true when query
/// row q may attend to key row k.
class AttentionMask {
 public:
  AttentionMask() = default;
  AttentionMask(std::size_t rows, std::size_t cols, bool fill = true);

  /// Lower-triangular including the diagonal.
  static AttentionMask causal(std::size_t length);

  /// Every query row sees exactly the keys whose validity flag is set.
  static AttentionMask padding(std::size_t query_rows, const std::vector<bool>& key_valid);

  /// Element-wise AND; shapes must match.
  [[nodiscard]] AttentionMask operator&(const AttentionMask& other) const;

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }

  [[nodiscard]] bool allowed(std::size_t q, std::size_t k) const noexcept {
    return cells_[q * cols_ + k] != 0;
  }
  void set(std::size_t q, std::size_t k, bool value) noexcept {
    cells_[q * cols_ + k] = value ? 1 : 0;
  }

  bool operator==(const AttentionMask&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> cells_;
};

}  // namespace slp::nn
