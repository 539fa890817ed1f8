#include "slp/attention_mask.hpp"

#include "slp/errors.hpp"

namespace slp::nn {

AttentionMask::AttentionMask(std::size_t rows, std::size_t cols, bool fill)
    : rows_(rows), cols_(cols), cells_(rows * cols, fill ? 1 : 0) {}

AttentionMask AttentionMask::causal(std::size_t length) {
  AttentionMask mask(length, length, false);
  for (std::size_t q = 0; q < length; ++q) {
    for (std::size_t k = 0; k <= q; ++k) mask.set(q, k, true);
  }
  return mask;
}

AttentionMask AttentionMask::padding(std::size_t query_rows, const std::vector<bool>& key_valid) {
  AttentionMask mask(query_rows, key_valid.size(), false);
  for (std::size_t q = 0; q < query_rows; ++q) {
    for (std::size_t k = 0; k < key_valid.size(); ++k) mask.set(q, k, key_valid[k]);
  }
  return mask;
}

AttentionMask AttentionMask::operator&(const AttentionMask& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw ShapeError("attention mask shapes differ");
  }
  AttentionMask out(rows_, cols_, false);
  for (std::size_t i = 0; i < cells_.size(); ++i) out.cells_[i] = cells_[i] & other.cells_[i];
  return out;
}

}  // namespace slp::nn
