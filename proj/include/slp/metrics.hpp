#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "slp/pose_data.hpp"

namespace slp::metrics {

inline constexpr double kBleuEpsilon = 1e-9;

/// Cumulative BLEU-n scaled to [0, 100]: geometric mean of clipped n-gram
/// precisions (uniform weights) times the brevity penalty. Orders for which
/// the candidate has no n-grams at all are left out of the mean; a zero match
/// count is replaced by `epsilon`. Empty candidate scores 0.
/// Throws InputError for an empty reference or n < 1.
double bleu_n(std::span<const std::string> candidate, std::span<const std::string> reference, int n,
              double epsilon = kBleuEpsilon);

/// LCS F-measure (beta = 1) scaled to [0, 100]. Both empty -> 100.
double rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference);

struct DtwResult {
  double total_cost = 0.0;
  std::size_t path_length = 0;
  [[nodiscard]] double normalized() const { return total_cost / static_cast<double>(path_length); }
};

/// Classic DTW over Euclidean frame distances with steps (1,0), (0,1), (1,1).
/// Among minimum-cost paths the shortest one is reported. Throws InputError on
/// an empty sequence or mismatched frame widths.
DtwResult dtw(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b);

/// Path-length-normalized DTW over the 382 coordinates (counter excluded).
double dtw_distance(const pose::PoseSequence& a, const pose::PoseSequence& b);

}  // namespace slp::metrics
